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

#include "polifed/fl/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "polifed/common/error.h"
#include "polifed/common/rng.h"

namespace polifed::fl {

void TrainConfig::Validate() const {
  if (epochs < 1) Fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) Fail(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(local_lr >= 0) || !std::isfinite(local_lr)) {
    Fail(ErrorCode::kInvalidArgument, "local_lr must be a finite non-negative number");
  }
}

void DpConfig::Validate() const {
  if (!(clip_bound > 0)) Fail(ErrorCode::kInvalidArgument, "clip_bound must be positive");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma)) {
    Fail(ErrorCode::kInvalidArgument, "noise_sigma must be finite and non-negative");
  }
  if (round_size < 1) Fail(ErrorCode::kInvalidArgument, "round_size must be >= 1");
  if (noise_multiplier && !(*noise_multiplier > 0)) {
    Fail(ErrorCode::kInvalidArgument, "noise_multiplier must be positive");
  }
}

double DpConfig::ServerNoiseStd() const {
  // m draws of N(0, (sigma/m)^2) sum to std sigma/sqrt(m).
  return noise_sigma / std::sqrt(static_cast<double>(round_size));
}

double DpConfig::EffectiveNoiseMultiplier() const {
  if (noise_multiplier) return *noise_multiplier;
  return ServerNoiseStd() / clip_bound;
}

ModelParams TrainLocal(const ModelParams& global, const Examples& data,
                       const TrainConfig& cfg, const DifferentiableTask& task) {
  cfg.Validate();
  if (data.size() == 0) Fail(ErrorCode::kInvalidArgument, "local dataset is empty");
  ModelParams local = global;
  std::vector<std::size_t> order(data.size());
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(MixSeed({cfg.seed, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t len = std::min(batch, order.size() - start);
      Batch b{&data, std::span<const std::size_t>(order.data() + start, len)};
      ModelParams grad = task.Gradient(local, b);
      if (!grad.AllFinite()) {
        Fail(ErrorCode::kDivergence, "non-finite gradient; lower the learning rate");
      }
      Axpy(-cfg.local_lr, grad, local);
      if (!local.AllFinite()) {
        Fail(ErrorCode::kDivergence, "non-finite parameters; lower the learning rate");
      }
    }
  }
  return local;
}

ModelParams ClipUpdate(const ModelParams& delta, double bound) {
  if (!(bound > 0)) Fail(ErrorCode::kInvalidArgument, "clip bound must be positive");
  double norm = delta.L2Norm();
  if (norm <= bound) return delta;
  ModelParams out = delta;
  Scale(bound / norm, out);
  return out;
}

void AddGaussianNoise(double stddev, std::uint64_t seed, ModelParams& target) {
  if (stddev <= 0) return;
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& e : target.mutable_entries()) {
    for (double& v : e.values) v += dist(rng);
  }
}

ModelParams TrainLocalDp(const ModelParams& global, const Examples& data,
                         const TrainConfig& cfg, const DpConfig& dp,
                         const DifferentiableTask& task, std::uint64_t noise_seed) {
  dp.Validate();
  ModelParams local = TrainLocal(global, data, cfg, task);
  ModelParams update = ClipUpdate(Subtract(local, global), dp.clip_bound);
  if (dp.placement == NoisePlacement::kLocal) {
    AddGaussianNoise(dp.LocalNoiseStd(), noise_seed, update);
  }
  return update;
}

ModelParams Accumulate(const ModelParams& partial, const ModelParams& update) {
  ModelParams out = partial;
  Axpy(1.0, update, out);
  return out;
}

ModelParams Average(const ModelParams& global, const ModelParams& sum,
                    double eta, int n) {
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "participant count must be >= 1");
  ModelParams out = global;
  Axpy(eta / n, sum, out);
  return out;
}

}  // namespace polifed::fl
