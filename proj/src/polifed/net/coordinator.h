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

// Coordinator: authentication, participant sampling, rounds and group
// schedules with policy-checked aggregation and privacy accounting.

#ifndef POLIFED_NET_COORDINATOR_H_
#define POLIFED_NET_COORDINATOR_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polifed/dp/ledger.h"
#include "polifed/dpp/runtime.h"
#include "polifed/fl/model_params.h"
#include "polifed/fl/training.h"
#include "polifed/net/messages.h"
#include "polifed/net/transport.h"
#include "polifed/policy/policy.h"

namespace polifed::net {

struct TrainingRequest {
  std::string token;
  dpp::RestrictedProgram global_program;
  dpp::RestrictedProgram local_program;
  std::map<std::string, dpp::RestrictedProgram> group_programs;

  const dpp::RestrictedProgram& LocalProgramFor(const std::string& group) const;
};

// average(model, sum) -> next
dpp::RestrictedProgram DefaultGlobalProgram();

enum class Strategy { kSubsetOnly, kCombined, kCascaded };

const char* StrategyName(Strategy s);
Strategy ParseStrategy(const std::string& name);

struct GroupSpec {
  std::string id;
  policy::Policy policy;
  std::vector<std::string> members;
  int rounds = 1;
  int round_size = 1;
  fl::DpConfig dp;
  std::optional<double> max_epsilon;
  // Sensor tags the group's policy removes; more means more restrictive.
  int filtered_tags = 0;
};

struct GroupSchedule {
  Strategy strategy = Strategy::kCascaded;
  std::vector<GroupSpec> groups;
  // Used by the combined strategy.
  int combined_rounds = 1;
  int combined_round_size = 1;

  // Unique ids, disjoint non-empty memberships, 1 <= m <= pool size.
  void Validate() const;
};

// Groups from most to least restrictive: ascending max_epsilon (none
// counts as unbounded), then more filtered tags, then schedule order.
std::vector<const GroupSpec*> RestrictivenessOrder(const GroupSchedule& s);

// One stretch of rounds over a fixed participant pool.
struct Phase {
  std::vector<std::string> groups;
  std::vector<std::string> pool;
  int rounds = 0;
  int round_size = 0;
  fl::DpConfig dp;
  // Groups charged each round, at sampling rate round_size / pool size.
  std::vector<std::string> charged;
};

std::vector<Phase> PlanPhases(const GroupSchedule& s);

// Uniform sample of m members without replacement, sorted; deterministic
// in (seed, round).
std::vector<std::string> SampleParticipants(const std::vector<std::string>& members, int m,
                                            int round, std::uint64_t seed);

// Per-participant seed for round `round`; stream 1 drives batch order,
// stream 2 local noise.
std::uint64_t ParticipantSeed(std::uint64_t seed, int round, const std::string& user_id,
                              int stream);

enum class Divisor {
  // n = participants in the phase pool.
  kTotal,
  // n = updates received this round.
  kRound,
};

struct CoordinatorConfig {
  // token -> service id
  std::map<std::string, std::string> tokens;
  ModelSpec spec;
  fl::TrainConfig train;
  double eta = 1.0;
  Divisor divisor = Divisor::kTotal;
  std::uint64_t seed = 0;
  // Fixed per-round timeout; when unset, 30 s for the first round and then
  // ten times the previous round's median TTE, at least 1 s.
  std::optional<std::chrono::milliseconds> timeout;
};

struct ParticipantTiming {
  std::string user_id;
  double ttd_ms = 0;
  double tte_ms = 0;
  double ttr_ms = 0;
  // Coordinator wall clock from sending the TASK to decoding the RESULT.
  double span_ms = 0;
};

struct Failure {
  std::string user_id;
  ErrorCode code = ErrorCode::kInternal;
  std::string detail;
};

struct RoundRecord {
  int round = 0;
  int phase = 0;
  std::vector<std::string> participants;
  std::vector<ParticipantTiming> timings;
  std::vector<Failure> failures;
  double ttp_ms = 0;
  // Wall clock of the whole exchange.
  double span_ms = 0;
  std::map<std::string, double> spent;
};

struct RoundResult {
  // Sum over successful updates, in participant-ID order.
  std::optional<dpp::DataPolicyPair> sum;
  // Policy of each group's share of the sum.
  std::map<std::string, policy::Policy> group_sums;
  std::vector<std::string> contributors;
  std::vector<ParticipantTiming> timings;
  std::vector<Failure> failures;
  double span_ms = 0;
  // Time spent folding the updates with accumulate.
  double accumulate_ms = 0;
};

struct ScheduleOutcome {
  bool ok = false;
  ErrorCode code = ErrorCode::kInternal;
  std::string detail;
  std::string service;
  // Only present when ok.
  std::optional<fl::ModelParams> model;
  std::vector<RoundRecord> rounds;
  dp::PrivacyLedger ledger;
  std::map<std::string, std::string> final_views;
};

using RoundObserver = std::function<void(const RoundRecord&, const fl::ModelParams&)>;

class Coordinator {
 public:
  Coordinator(CoordinatorConfig config, Transport& transport);

  // Service id for a registered token. Throws InvalidToken.
  std::string Authenticate(const std::string& token) const;

  // Sends TASKs for `participants` and folds the released updates.
  // `views` maps each participant's group to the model policy it receives.
  RoundResult RunRound(int round, const fl::ModelParams& model,
                       const std::vector<std::string>& participants,
                       const std::map<std::string, std::string>& group_of,
                       const std::map<std::string, policy::Policy>& views,
                       const TrainingRequest& request, const fl::DpConfig& dp,
                       std::chrono::milliseconds timeout);

  // Authenticates, plans the phases and trains. Rejections come back as
  // ok=false; nothing is released then.
  ScheduleOutcome RunSchedule(const TrainingRequest& request, const GroupSchedule& schedule,
                              const fl::ModelParams& initial, const RoundObserver& observer = {});

 private:
  CoordinatorConfig config_;
  Transport& transport_;
};

}  // namespace polifed::net

#endif  // POLIFED_NET_COORDINATOR_H_
