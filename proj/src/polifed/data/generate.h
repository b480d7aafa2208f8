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

// Seeded synthetic stand-ins for the three federated use cases.

#ifndef POLIFED_DATA_GENERATE_H_
#define POLIFED_DATA_GENERATE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polifed/data/dataset.h"

namespace polifed::data {

enum class TaskKind {
  // Behavior-modeling stand-in: f0..f3 plus mic- and loc-tagged columns.
  kClassification2,
  // Image-classification stand-in: 10 Gaussian classes.
  kMulticlass10,
  // Next-token stand-in: order-2 Markov source over a small alphabet.
  kSequenceNextToken,
};

TaskKind ParseTaskKind(const std::string& name);
// Id of the i-th generated user.
std::string UserId(int i);
std::string TaskKindName(TaskKind kind);

struct TaskSpec {
  TaskKind kind = TaskKind::kClassification2;
  int n_users = 10;
  int rows_per_user = 50;
  std::uint64_t seed = 0;
  // Distance between class means in units of the per-class std. For the
  // two-class task this is the distance over f0..f3 alone.
  double separation = 4.0;
  // Multiclass only: pool the rows and split them with a Dirichlet(alpha)
  // partition instead of giving every user balanced classes.
  std::optional<double> dirichlet_alpha;
  // Center of the synthetic population's locations.
  double center_lat = 40.4432;
  double center_lon = -79.9428;
  // Users' home points lie within this many meters of the center.
  double spread_m = 5000;
};

struct TaskInfo {
  std::vector<std::string> features;
  int num_classes = 2;
};

// Feature columns and class count a model for `kind` consumes.
TaskInfo DescribeTask(TaskKind kind);

// User ids are "u0000", "u0001", ... Deterministic given spec.
std::vector<UserDataset> GenerateTask(const TaskSpec& spec);

// For each class, shuffles its indices and splits them across clients by a
// Dirichlet(alpha) draw. Every index lands in exactly one list; lists are
// sorted. Deterministic given seed.
std::vector<std::vector<std::size_t>> DirichletPartition(const std::vector<int>& labels,
                                                         int n_clients, double alpha,
                                                         std::uint64_t seed);

}  // namespace polifed::data

#endif  // POLIFED_DATA_GENERATE_H_
