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

#ifndef POLIFED_APP_DEPLOY_H_
#define POLIFED_APP_DEPLOY_H_

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "polifed/app/scenario.h"
#include "polifed/net/edge.h"
#include "polifed/net/messages.h"
#include "polifed/net/tcp.h"

namespace polifed::app {

struct ServeConfig {
  std::map<std::string, std::string> tokens;
  // How long a submission waits for the scenario's users to connect.
  std::chrono::milliseconds wait_timeout{30000};
  // Each accepted submission writes a run directory below this, if set.
  std::string run_root;
};

ServeConfig ServeConfigFromJson(const nlohmann::json& j);
ServeConfig LoadServeConfig(const std::string& path);

net::SubmitMessage MakeSubmit(const ScenarioConfig& c, const std::string& token);

// Coordinator side of SUBMIT. Never throws; failures become a rejected FINAL.
net::FinalMessage ServeSubmit(const net::SubmitMessage& m, net::TcpTransport& transport,
                              const ServeConfig& config, int submission);

struct EdgeSetup {
  ScenarioConfig scenario;
  std::vector<std::string> user_ids;
  std::chrono::milliseconds connect_timeout{10000};
};

// {"scenario": path-or-object, "users": [...]} or {"scenario": ..., "shard":
// {"index": i, "count": k}}, plus optional connect_timeout_ms; relative
// paths resolve against base_dir.
EdgeSetup EdgeSetupFromJson(const nlohmann::json& j, const std::string& base_dir);
EdgeSetup LoadEdgeSetup(const std::string& path);

std::unique_ptr<net::EdgeNode> MakeEdgeNode(const EdgeSetup& s);

}  // namespace polifed::app

#endif  // POLIFED_APP_DEPLOY_H_
