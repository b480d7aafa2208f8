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

#include "polifed/data/generate.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "polifed/common/error.h"
#include "polifed/common/rng.h"

namespace polifed::data {
namespace {

constexpr int kMulticlassDim = 10;
constexpr int kAlphabet = 6;
constexpr int kOrder = 2;

// Offsets a point by (north, east) meters.
std::pair<double, double> Offset(double lat, double lon, double north, double east) {
  constexpr double kDeg = 180 / std::numbers::pi;
  double dlat = north / kEarthRadiusM * kDeg;
  double dlon = east / (kEarthRadiusM * std::cos(lat / kDeg)) * kDeg;
  return {lat + dlat, lon + dlon};
}

struct Builder {
  UserDataset d;
  void Add(const std::string& name, std::vector<std::string> tags = {}) {
    d.schema.push_back({name, std::move(tags)});
    d.columns.emplace_back();
  }
  std::vector<double>& col(std::size_t i) { return d.columns[i]; }
};

// Home point for user u, then per-row jitter of ~200 m.
void AddLocations(Builder& b, std::size_t lat_col, std::size_t lon_col, int rows,
                  const TaskSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> jitter(0, 200);
  double r = spec.spread_m * std::sqrt(u(rng));
  double th = 2 * std::numbers::pi * u(rng);
  auto [hlat, hlon] = Offset(spec.center_lat, spec.center_lon, r * std::cos(th), r * std::sin(th));
  for (int i = 0; i < rows; ++i) {
    auto [lat, lon] = Offset(hlat, hlon, jitter(rng), jitter(rng));
    b.col(lat_col).push_back(lat);
    b.col(lon_col).push_back(lon);
  }
  b.d.location = LocationColumns{"lat", "lon"};
}

UserDataset Classification2(int user, const TaskSpec& spec) {
  Rng rng(MixSeed({spec.seed, 0xc1a55, static_cast<std::uint64_t>(user)}));
  Builder b;
  b.d.user_id = UserId(user);
  for (int j = 0; j < 4; ++j) b.Add("f" + std::to_string(j));
  b.Add("mic", {"mic"});
  b.Add("place", {"loc"});
  b.Add("lat", {"loc"});
  b.Add("lon", {"loc"});
  b.Add("label");
  std::normal_distribution<double> g(0, 1);
  std::bernoulli_distribution coin(0.5);
  // Class means sep apart across f0..f3; mic and place each add another
  // sep of their own.
  double half = spec.separation / 2;
  for (int r = 0; r < spec.rows_per_user; ++r) {
    int y = coin(rng) ? 1 : 0;
    double s = y ? 1.0 : -1.0;
    for (int j = 0; j < 4; ++j) b.col(j).push_back(s * half / 2 + g(rng));
    b.col(4).push_back(s * half + g(rng));
    b.col(5).push_back(s * half + g(rng));
    b.col(8).push_back(y);
  }
  AddLocations(b, 6, 7, spec.rows_per_user, spec, rng);
  return b.d;
}

std::vector<std::vector<double>> MulticlassMeans(const TaskSpec& spec) {
  std::vector<std::vector<double>> means(10, std::vector<double>(kMulticlassDim, 0.0));
  // One axis per class, so every pair of means is sep apart.
  for (int k = 0; k < 10; ++k) means[k][k] = spec.separation / std::sqrt(2.0);
  return means;
}

void MulticlassRow(Builder& b, int y, const std::vector<std::vector<double>>& means, Rng& rng) {
  std::normal_distribution<double> g(0, 1);
  for (int j = 0; j < kMulticlassDim; ++j) b.col(j).push_back(means[y][j] + g(rng));
  b.col(kMulticlassDim + 2).push_back(y);
}

Builder MulticlassSchema(int user) {
  Builder b;
  b.d.user_id = UserId(user);
  for (int j = 0; j < kMulticlassDim; ++j) b.Add("f" + std::to_string(j));
  b.Add("lat", {"loc"});
  b.Add("lon", {"loc"});
  b.Add("label");
  return b;
}

std::vector<UserDataset> Multiclass10(const TaskSpec& spec) {
  auto means = MulticlassMeans(spec);
  std::vector<UserDataset> out;
  if (!spec.dirichlet_alpha) {
    for (int u = 0; u < spec.n_users; ++u) {
      Rng rng(MixSeed({spec.seed, 0x10c1a55, static_cast<std::uint64_t>(u)}));
      Builder b = MulticlassSchema(u);
      std::uniform_int_distribution<int> cls(0, 9);
      for (int r = 0; r < spec.rows_per_user; ++r) MulticlassRow(b, cls(rng), means, rng);
      AddLocations(b, kMulticlassDim, kMulticlassDim + 1, spec.rows_per_user, spec, rng);
      out.push_back(std::move(b.d));
    }
    return out;
  }
  std::size_t total = static_cast<std::size_t>(spec.n_users) * spec.rows_per_user;
  std::vector<int> labels(total);
  for (std::size_t i = 0; i < total; ++i) labels[i] = static_cast<int>(i % 10);
  auto parts = DirichletPartition(labels, spec.n_users, *spec.dirichlet_alpha,
                                  MixSeed({spec.seed, 0xd1c1e7}));
  // Clients left empty take one row from the largest client.
  for (auto& p : parts) {
    if (!p.empty()) continue;
    auto big = std::max_element(parts.begin(), parts.end(),
                                [](const auto& a, const auto& b) { return a.size() < b.size(); });
    p.push_back(big->back());
    big->pop_back();
  }
  for (int u = 0; u < spec.n_users; ++u) {
    Rng rng(MixSeed({spec.seed, 0x10c1a55, static_cast<std::uint64_t>(u)}));
    Builder b = MulticlassSchema(u);
    for (std::size_t idx : parts[u]) MulticlassRow(b, labels[idx], means, rng);
    AddLocations(b, kMulticlassDim, kMulticlassDim + 1, static_cast<int>(parts[u].size()),
                 spec, rng);
    out.push_back(std::move(b.d));
  }
  return out;
}

// Transition table shared by all users: p(next | prev2, prev1).
std::vector<std::vector<double>> MarkovTable(std::uint64_t seed) {
  Rng rng(MixSeed({seed, 0x5e9}));
  std::gamma_distribution<double> gam(0.3, 1.0);
  int states = 1;
  for (int i = 0; i < kOrder; ++i) states *= kAlphabet;
  std::vector<std::vector<double>> table(states, std::vector<double>(kAlphabet));
  for (auto& row : table) {
    double sum = 0;
    for (double& p : row) sum += (p = gam(rng) + 1e-9);
    for (double& p : row) p /= sum;
  }
  return table;
}

UserDataset SequenceNextToken(int user, const TaskSpec& spec,
                              const std::vector<std::vector<double>>& table) {
  Rng rng(MixSeed({spec.seed, 0x5e9, static_cast<std::uint64_t>(user)}));
  Builder b;
  b.d.user_id = UserId(user);
  for (int k = 1; k <= kOrder; ++k) {
    for (int a = 0; a < kAlphabet; ++a) b.Add("p" + std::to_string(k) + "_" + std::to_string(a));
  }
  b.Add("lat", {"loc"});
  b.Add("lon", {"loc"});
  b.Add("label");
  const std::size_t onehot = kOrder * kAlphabet;
  std::uniform_int_distribution<int> start(0, kAlphabet - 1);
  int prev2 = start(rng), prev1 = start(rng);
  for (int r = 0; r < spec.rows_per_user; ++r) {
    const auto& row = table[prev2 * kAlphabet + prev1];
    std::discrete_distribution<int> next(row.begin(), row.end());
    int y = next(rng);
    for (std::size_t c = 0; c < onehot; ++c) b.col(c).push_back(0.0);
    b.col(prev1).back() = 1.0;
    b.col(kAlphabet + prev2).back() = 1.0;
    b.col(onehot + 2).push_back(y);
    prev2 = prev1;
    prev1 = y;
  }
  AddLocations(b, onehot, onehot + 1, spec.rows_per_user, spec, rng);
  return b.d;
}

}  // namespace

std::string UserId(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%04d", i);
  return buf;
}

TaskKind ParseTaskKind(const std::string& name) {
  if (name == "classification-2class") return TaskKind::kClassification2;
  if (name == "multiclass-10") return TaskKind::kMulticlass10;
  if (name == "sequence-next-token") return TaskKind::kSequenceNextToken;
  Fail(ErrorCode::kInvalidArgument, "unknown task kind '" + name + "'");
}

std::string TaskKindName(TaskKind kind) {
  switch (kind) {
    case TaskKind::kClassification2: return "classification-2class";
    case TaskKind::kMulticlass10: return "multiclass-10";
    case TaskKind::kSequenceNextToken: return "sequence-next-token";
  }
  return "?";
}

TaskInfo DescribeTask(TaskKind kind) {
  TaskInfo info;
  switch (kind) {
    case TaskKind::kClassification2:
      info.features = {"f0", "f1", "f2", "f3", "mic", "place"};
      info.num_classes = 2;
      break;
    case TaskKind::kMulticlass10:
      for (int j = 0; j < kMulticlassDim; ++j) info.features.push_back("f" + std::to_string(j));
      info.num_classes = 10;
      break;
    case TaskKind::kSequenceNextToken:
      for (int k = 1; k <= kOrder; ++k) {
        for (int a = 0; a < kAlphabet; ++a) {
          info.features.push_back("p" + std::to_string(k) + "_" + std::to_string(a));
        }
      }
      info.num_classes = kAlphabet;
      break;
  }
  return info;
}

std::vector<UserDataset> GenerateTask(const TaskSpec& spec) {
  if (spec.n_users < 1) Fail(ErrorCode::kInvalidArgument, "n_users must be >= 1");
  if (spec.rows_per_user < 1) Fail(ErrorCode::kInvalidArgument, "rows_per_user must be >= 1");
  if (!(spec.separation >= 0)) Fail(ErrorCode::kInvalidArgument, "separation must be >= 0");
  std::vector<UserDataset> out;
  switch (spec.kind) {
    case TaskKind::kClassification2:
      for (int u = 0; u < spec.n_users; ++u) out.push_back(Classification2(u, spec));
      break;
    case TaskKind::kMulticlass10:
      out = Multiclass10(spec);
      break;
    case TaskKind::kSequenceNextToken: {
      auto table = MarkovTable(spec.seed);
      for (int u = 0; u < spec.n_users; ++u) out.push_back(SequenceNextToken(u, spec, table));
      break;
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> DirichletPartition(const std::vector<int>& labels,
                                                         int n_clients, double alpha,
                                                         std::uint64_t seed) {
  if (n_clients < 1) Fail(ErrorCode::kInvalidArgument, "n_clients must be >= 1");
  if (!(alpha > 0) || !std::isfinite(alpha)) {
    Fail(ErrorCode::kInvalidArgument, "alpha must be positive");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> parts(n_clients);
  Rng rng(seed);
  std::gamma_distribution<double> gam(alpha, 1.0);
  for (auto& [cls, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> w(n_clients);
    double sum = 0;
    for (double& x : w) sum += (x = gam(rng));
    if (!(sum > 0)) {
      std::fill(w.begin(), w.end(), 1.0);
      sum = n_clients;
    }
    // Cut points at rounded cumulative shares.
    double cum = 0;
    std::size_t prev = 0;
    for (int c = 0; c < n_clients; ++c) {
      cum += w[c];
      std::size_t cut = c + 1 == n_clients
                            ? idx.size()
                            : static_cast<std::size_t>(std::llround(cum / sum * idx.size()));
      cut = std::clamp(cut, prev, idx.size());
      parts[c].insert(parts[c].end(), idx.begin() + prev, idx.begin() + cut);
      prev = cut;
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

}  // namespace polifed::data
