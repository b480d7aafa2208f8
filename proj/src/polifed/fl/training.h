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

// Local training, clipping, noising and federated averaging.

#ifndef POLIFED_FL_TRAINING_H_
#define POLIFED_FL_TRAINING_H_

#include <cstdint>
#include <limits>
#include <optional>

#include "polifed/fl/model_params.h"
#include "polifed/fl/task.h"

namespace polifed::fl {

struct TrainConfig {
  int epochs = 1;
  double local_lr = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void Validate() const;
};

enum class NoisePlacement {
  // Every participant adds N(0, (sigma/m)^2) to its clipped update.
  kLocal,
  // Participants only clip; the coordinator adds noise of the same total
  // scale, N(0, sigma^2 / m), to the round's sum.
  kServer,
};

struct DpConfig {
  double clip_bound = std::numeric_limits<double>::infinity();
  double noise_sigma = 0.0;
  int round_size = 1;
  NoisePlacement placement = NoisePlacement::kLocal;
  // Noise multiplier charged to the privacy ledger. When unset it is
  // derived from the mechanism; see EffectiveNoiseMultiplier().
  std::optional<double> noise_multiplier;

  void Validate() const;
  bool enabled() const { return noise_sigma > 0; }
  double LocalNoiseStd() const { return noise_sigma / round_size; }
  double ServerNoiseStd() const;
  // Standard deviation of the noise in one round's sum divided by the
  // clipping bound, unless an explicit multiplier was configured.
  double EffectiveNoiseMultiplier() const;
};

// Runs cfg.epochs of mini-batch SGD starting from `global`. Batch order is
// a per-epoch permutation drawn from cfg.seed. Throws Divergence if the
// loss or gradient becomes non-finite.
ModelParams TrainLocal(const ModelParams& global, const Examples& data,
                       const TrainConfig& cfg, const DifferentiableTask& task);

// Scales `delta` by 1 / max(1, |delta|_2 / bound). Identity (bit-exact)
// inside the ball.
ModelParams ClipUpdate(const ModelParams& delta, double bound);

// Adds independent N(0, stddev^2) noise to every coordinate.
void AddGaussianNoise(double stddev, std::uint64_t seed, ModelParams& target);

// Clip(TrainLocal(global) - global, S) plus, for local placement,
// N(0, sigma^2)/m per coordinate drawn from `noise_seed`.
ModelParams TrainLocalDp(const ModelParams& global, const Examples& data,
                         const TrainConfig& cfg, const DpConfig& dp,
                         const DifferentiableTask& task, std::uint64_t noise_seed);

// Running sum of updates.
ModelParams Accumulate(const ModelParams& partial, const ModelParams& update);

// G + (eta / n) * sum.
ModelParams Average(const ModelParams& global, const ModelParams& sum,
                    double eta, int n);

}  // namespace polifed::fl

#endif  // POLIFED_FL_TRAINING_H_
