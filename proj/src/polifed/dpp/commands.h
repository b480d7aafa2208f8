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

// The trusted federated-learning command set.

#ifndef POLIFED_DPP_COMMANDS_H_
#define POLIFED_DPP_COMMANDS_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polifed/data/dataset.h"
#include "polifed/dp/ledger.h"
#include "polifed/dpp/runtime.h"
#include "polifed/fl/task.h"
#include "polifed/fl/training.h"

namespace polifed::dpp {

// Everything a command hook may read. Owned by the caller; pointers must
// outlive the program run.
struct FlContext : ExecContext {
  // Local side.
  const fl::DifferentiableTask* task = nullptr;
  std::vector<std::string> features;
  fl::TrainConfig train;
  fl::DpConfig dp;
  std::uint64_t noise_seed = 0;
  // Value get_data(data_type=...) must name, when non-empty.
  std::string data_type;
  std::map<std::string, data::Geofence> geofences;

  // Global side.
  const dp::PrivacyLedger* ledger = nullptr;
  double eta = 1.0;
  int n = 1;
  // Server-placed noise added to the summed updates inside `average`.
  double server_noise_std = 0.0;
  std::uint64_t server_noise_seed = 0;
};

// local:  get_data(raw) filter(d) in_geofence_cond(d) train_local(model, d)
//         train_local_dp(model, d)
// global: accumulate(sum, update) average(model, sum)
//         enforce_dp_budget(x)  [args eps, group]
// plus the built-in return.
const CommandRegistry& FlRegistry();

// Builds the invocation the coordinator uses for budget checks.
policy::CommandInvocation EnforceBudgetInvocation(double max_epsilon, const std::string& group);

}  // namespace polifed::dpp

#endif  // POLIFED_DPP_COMMANDS_H_
