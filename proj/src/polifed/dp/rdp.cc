// Copyright 2026 The PoliFed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "polifed/dp/rdp.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "polifed/common/error.h"

namespace polifed::dp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(exp(a) - exp(b)); a >= b.
double LogSub(double a, double b) {
  if (b == kNegInf) return a;
  if (a <= b) return kNegInf;
  double d = b - a;
  return a + (d > -0.693 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d)));
}

double LogErfc(double x) {
  if (x < 25) return std::log(std::erfc(x));
  // erfc(x) ~ exp(-x^2) / (x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6))
  double r = 1 / (x * x);
  double series = 1 - r / 2 + 3 * r * r / 4 - 15 * r * r * r / 8;
  return -x * x - std::log(x) - 0.5 * std::log(std::numbers::pi) + std::log(series);
}

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double LogAInteger(double q, double z, int alpha) {
  double log_q = std::log(q), log_1mq = std::log1p(-q);
  double acc = kNegInf;
  for (int i = 0; i <= alpha; ++i) {
    double term = LogBinomial(alpha, i) + i * log_q + (alpha - i) * log_1mq +
                  (static_cast<double>(i) * i - i) / (2 * z * z);
    acc = LogAdd(acc, term);
  }
  return acc;
}

double LogAFractional(double q, double z, double alpha) {
  double log_q = std::log(q), log_1mq = std::log1p(-q);
  double a0 = kNegInf, a1 = kNegInf;
  double z0 = z * z * std::log(1 / q - 1) + 0.5;
  double log_coef = 0;
  bool positive = true;
  const double s2 = std::sqrt(2.0) * z;
  for (int i = 0; i < 100000; ++i) {
    double j = alpha - i;
    double t0 = log_coef + i * log_q + j * log_1mq;
    double t1 = log_coef + j * log_q + i * log_1mq;
    double e0 = std::log(0.5) + LogErfc((i - z0) / s2);
    double e1 = std::log(0.5) + LogErfc((z0 - j) / s2);
    double s0 = t0 + (static_cast<double>(i) * i - i) / (2 * z * z) + e0;
    double s1 = t1 + (j * j - j) / (2 * z * z) + e1;
    if (positive) {
      a0 = LogAdd(a0, s0);
      a1 = LogAdd(a1, s1);
    } else {
      a0 = LogSub(a0, s0);
      a1 = LogSub(a1, s1);
    }
    if (std::max(s0, s1) < -30 && i > alpha) break;
    // binom(alpha, i + 1) = binom(alpha, i) * (alpha - i) / (i + 1)
    double ratio = (alpha - i) / (i + 1.0);
    if (ratio < 0) positive = !positive;
    log_coef += std::log(std::abs(ratio));
  }
  return LogAdd(a0, a1);
}

void CheckArgs(double q, double z) {
  if (!(q > 0 && q <= 1)) Fail(ErrorCode::kInvalidArgument, "sampling rate must be in (0, 1]");
  if (!(z > 0) || !std::isfinite(z)) {
    Fail(ErrorCode::kInvalidArgument, "noise multiplier must be positive");
  }
}

}  // namespace

const std::vector<double>& DefaultOrders() {
  static const std::vector<double> orders = [] {
    std::vector<double> out;
    for (int k = 5; k <= 40; ++k) out.push_back(k * 0.25);
    for (int a = 11; a <= 64; ++a) out.push_back(a);
    for (double a : {128.0, 256.0, 512.0}) out.push_back(a);
    return out;
  }();
  return orders;
}

double RdpOneStep(double q, double z, double alpha) {
  CheckArgs(q, z);
  if (!(alpha > 1)) Fail(ErrorCode::kInvalidArgument, "RDP orders must be > 1");
  if (q == 1) return alpha / (2 * z * z);
  if (!std::isfinite(alpha)) return std::numeric_limits<double>::infinity();
  double log_a = alpha == std::floor(alpha) && alpha < 1e6
                     ? LogAInteger(q, z, static_cast<int>(alpha))
                     : LogAFractional(q, z, alpha);
  return std::max(0.0, log_a) / (alpha - 1);
}

std::vector<double> RdpSubsampledGaussian(double q, double z, std::int64_t steps,
                                          std::span<const double> orders) {
  CheckArgs(q, z);
  if (steps < 1) Fail(ErrorCode::kInvalidArgument, "steps must be >= 1");
  std::vector<double> out;
  out.reserve(orders.size());
  for (double a : orders) out.push_back(static_cast<double>(steps) * RdpOneStep(q, z, a));
  return out;
}

EpsilonResult EpsilonFromRdp(std::span<const double> rdp, std::span<const double> orders,
                             double delta) {
  if (orders.empty()) Fail(ErrorCode::kInvalidArgument, "no RDP orders");
  if (rdp.size() != orders.size()) {
    Fail(ErrorCode::kInvalidArgument, "RDP values and orders differ in length");
  }
  if (!(delta > 0 && delta < 1)) Fail(ErrorCode::kInvalidArgument, "delta must be in (0, 1)");
  EpsilonResult best{std::numeric_limits<double>::infinity(), orders[0]};
  double log_inv_delta = -std::log(delta);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    double eps = rdp[i] + log_inv_delta / (orders[i] - 1);
    if (eps < best.epsilon) best = {eps, orders[i]};
  }
  return best;
}

}  // namespace polifed::dp
