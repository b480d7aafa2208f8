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

// Running scenarios and the run directory:
//   config.json timings.csv metrics.csv ledger.jsonl final.model report.json

#ifndef POLIFED_APP_RUN_H_
#define POLIFED_APP_RUN_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "polifed/app/scenario.h"
#include "polifed/fl/task.h"
#include "polifed/net/coordinator.h"
#include "polifed/net/transport.h"

namespace polifed::app {

struct RoundMetric {
  int round = 0;
  int phase = 0;
  double metric = 0;
  std::map<std::string, double> spent;
};

struct RunReport {
  ScenarioConfig scenario;
  std::string metric_name;
  std::vector<RoundMetric> metrics;
  net::ScheduleOutcome outcome;
};

// Scores models on the pooled synthetic training rows (harness-side; the
// coordinator never sees user data).
class Evaluator {
 public:
  Evaluator(const ScenarioConfig& c, const Population& pop);
  double operator()(const fl::ModelParams& m) const;
  const std::string& name() const { return name_; }

 private:
  std::unique_ptr<fl::DifferentiableTask> task_;
  fl::Examples pooled_;
  std::string name_;
};

// Runs the schedule over `transport`. `tokens` is the coordinator's token
// table.
RunReport RunScenario(const ScenarioConfig& c, const net::TrainingRequest& request,
                      const std::map<std::string, std::string>& tokens,
                      net::Transport& transport);

// Everything in one process: one in-process edge node per user.
RunReport Simulate(const ScenarioConfig& c);

// The FINAL reply for a report.
net::FinalMessage ToFinal(const RunReport& r);

// Creates `dir` if needed and writes all run files. Existing files are
// replaced; final.model is removed when the run was rejected.
void WriteRunDir(const std::string& dir, const RunReport& r);

// Pure summaries of a run directory.
std::string ReportJson(const std::string& dir);
std::string ReportCsv(const std::string& dir);

}  // namespace polifed::app

#endif  // POLIFED_APP_RUN_H_
