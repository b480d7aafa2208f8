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

// Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.

#ifndef POLIFED_DP_RDP_H_
#define POLIFED_DP_RDP_H_

#include <cstdint>
#include <span>
#include <vector>

namespace polifed::dp {

// 1.25, 1.5, ..., 10, then 11, 12, ..., 64, then 128, 256, 512.
const std::vector<double>& DefaultOrders();

// RDP of one step at order `alpha` for sampling rate q and noise
// multiplier z (noise std / sensitivity). Integer orders use the exact
// binomial expansion; fractional orders use the two-sided series with the
// Gaussian tail split at the likelihood-ratio crossover.
double RdpOneStep(double q, double z, double alpha);

// steps * RdpOneStep(q, z, alpha) for every order.
std::vector<double> RdpSubsampledGaussian(double q, double z, std::int64_t steps,
                                          std::span<const double> orders);

struct EpsilonResult {
  double epsilon = 0;
  double best_order = 0;
};

// min over alpha of rdp(alpha) + log(1/delta) / (alpha - 1).
EpsilonResult EpsilonFromRdp(std::span<const double> rdp,
                             std::span<const double> orders, double delta);

}  // namespace polifed::dp

#endif  // POLIFED_DP_RDP_H_
