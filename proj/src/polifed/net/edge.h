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

// Edge-node runtime: owns user data and policies, runs local programs.

#ifndef POLIFED_NET_EDGE_H_
#define POLIFED_NET_EDGE_H_

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "polifed/data/dataset.h"
#include "polifed/net/messages.h"
#include "polifed/policy/policy.h"

namespace polifed::net {

// Slots every local program starts with.
inline constexpr const char* kDataSlot = "data_src";
inline constexpr const char* kModelSlot = "model";

struct HostedUser {
  std::string user_id;
  data::UserDataset data;
  // Compiled (macros expanded).
  policy::Policy policy;
};

struct EdgeConfig {
  // Value get_data(data_type=...) must name; empty accepts any.
  std::string data_type;
  std::map<std::string, data::Geofence> geofences;
};

// A DPP may leave the node iff it may be returned now or may still be
// accumulated by the coordinator.
bool ReleasableToCoordinator(const policy::Policy& p);

class EdgeNode {
 public:
  explicit EdgeNode(std::vector<HostedUser> users, EdgeConfig config = {});

  std::vector<std::string> user_ids() const;

  // Runs one TASK. Program, policy and training failures come back as a
  // RESULT with ok=false and no update bytes.
  ResultMessage HandleTask(const TaskMessage& task);
  // TASK -> RESULT; anything else, or an undecodable body, -> ERROR.
  Message Handle(const Message& msg);
  // One encoded frame in, one encoded reply frame out. Never throws.
  std::vector<std::uint8_t> HandleFrame(std::span<const std::uint8_t> frame);

  // Hook executions per command for one user since construction.
  std::map<std::string, long> hook_calls(const std::string& user_id) const;

 private:
  std::map<std::string, HostedUser> users_;
  EdgeConfig config_;
  // One task at a time.
  mutable std::mutex mu_;
  std::map<std::string, std::map<std::string, long>> hook_calls_;
};

}  // namespace polifed::net

#endif  // POLIFED_NET_EDGE_H_
