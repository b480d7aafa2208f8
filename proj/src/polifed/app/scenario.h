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

// Scenario configuration and everything derived from it: the synthetic
// population, group schedule, training request and coordinator settings.

#ifndef POLIFED_APP_SCENARIO_H_
#define POLIFED_APP_SCENARIO_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polifed/data/dataset.h"
#include "polifed/data/generate.h"
#include "polifed/fl/training.h"
#include "polifed/net/coordinator.h"
#include "polifed/net/edge.h"

namespace polifed::app {

struct GroupConfig {
  std::string id;
  std::string policy;
  double fraction = 1.0;
  fl::DpConfig dp;
  std::optional<double> max_epsilon;
  // Override the scenario-wide values for this group's phase.
  std::optional<int> rounds;
  std::optional<int> round_size;
};

struct ScenarioConfig {
  data::TaskSpec data;
  std::string model = "logistic";
  std::size_t hidden = 16;
  std::vector<GroupConfig> groups;
  net::Strategy strategy = net::Strategy::kCascaded;
  int rounds = 1;
  int round_size = 1;
  double eta = 1.0;
  net::Divisor divisor = net::Divisor::kTotal;
  fl::TrainConfig train;
  // Seeds sampling, per-participant training and the initial model.
  std::uint64_t seed = 0;
  std::optional<std::chrono::milliseconds> timeout;
  std::string token = "local";
  std::string data_type;
  std::map<std::string, data::Geofence> geofences;
  // Programs; defaults are get_data . train_local and average.
  std::optional<dpp::RestrictedProgram> local_program;
  std::optional<dpp::RestrictedProgram> global_program;
  std::map<std::string, dpp::RestrictedProgram> group_programs;
  std::string output_dir;

  // Fractions sum to 1 (within 1e-9), rounds >= 1, ids unique.
  void Validate() const;
};

ScenarioConfig ScenarioFromJson(const nlohmann::json& j);
nlohmann::json ScenarioToJson(const ScenarioConfig& c);
ScenarioConfig LoadScenario(const std::string& path);

// The synthetic users and their group assignment.
struct Population {
  std::vector<data::UserDataset> users;
  std::map<std::string, std::string> group_of;
  std::map<std::string, std::vector<std::string>> members;
};

// Users are shuffled with the data seed and cut into consecutive blocks by
// group fraction; the last group takes the rounding remainder.
Population BuildPopulation(const ScenarioConfig& c);

// Distinct sensor tags named by filter commands in the policy.
int FilteredTagCount(const policy::Policy& p);

net::GroupSchedule BuildSchedule(const ScenarioConfig& c, const Population& pop);
net::TrainingRequest BuildRequest(const ScenarioConfig& c);
net::ModelSpec BuildModelSpec(const ScenarioConfig& c);
net::CoordinatorConfig BuildCoordinatorConfig(const ScenarioConfig& c);
fl::ModelParams InitialModel(const ScenarioConfig& c);
net::EdgeConfig BuildEdgeConfig(const ScenarioConfig& c);
// Hosted users with their group's compiled policy.
std::vector<net::HostedUser> HostedUsers(const ScenarioConfig& c, const Population& pop,
                                         const std::vector<std::string>& ids);

// "auc" for the two-class behavior task, "accuracy" otherwise.
std::string MetricName(const ScenarioConfig& c);

}  // namespace polifed::app

#endif  // POLIFED_APP_SCENARIO_H_
