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

#include "polifed/app/deploy.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "polifed/app/run.h"
#include "polifed/common/error.h"

namespace polifed::app {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) Fail(ErrorCode::kParse, "'" + path + "' is not valid JSON");
  return j;
}

net::FinalMessage Rejected(ErrorCode code, const std::string& detail) {
  net::FinalMessage f;
  f.ok = false;
  f.code = code;
  f.detail = detail;
  return f;
}

}  // namespace

ServeConfig ServeConfigFromJson(const json& j) {
  ServeConfig c;
  try {
    for (const auto& [token, service] : j.at("tokens").items()) {
      c.tokens[token] = service.get<std::string>();
    }
    if (j.contains("wait_timeout_ms")) c.wait_timeout = std::chrono::milliseconds(j["wait_timeout_ms"].get<long>());
    c.run_root = j.value("run_root", std::string());
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("serve config: ") + e.what());
  }
  if (c.tokens.empty()) Fail(ErrorCode::kInvalidArgument, "serve config: no tokens");
  if (c.wait_timeout.count() < 0) Fail(ErrorCode::kInvalidArgument, "serve config: negative wait_timeout_ms");
  return c;
}

ServeConfig LoadServeConfig(const std::string& path) { return ServeConfigFromJson(ReadJson(path)); }

net::SubmitMessage MakeSubmit(const ScenarioConfig& c, const std::string& token) {
  net::TrainingRequest r = BuildRequest(c);
  net::SubmitMessage m;
  m.token = token;
  m.global_program = r.global_program;
  m.local_program = r.local_program;
  m.group_programs = r.group_programs;
  m.scenario = ScenarioToJson(c);
  return m;
}

net::FinalMessage ServeSubmit(const net::SubmitMessage& m, net::TcpTransport& transport,
                              const ServeConfig& config, int submission) {
  try {
    if (!config.tokens.count(m.token)) return Rejected(ErrorCode::kInvalidToken, "unknown token");
    ScenarioConfig c = ScenarioFromJson(m.scenario);
    Population pop = BuildPopulation(c);
    std::vector<std::string> ids;
    for (const auto& u : pop.users) ids.push_back(u.user_id);
    if (!transport.WaitForUsers(ids, config.wait_timeout)) {
      return Rejected(ErrorCode::kTransport, "scenario users did not all connect in time");
    }
    net::TrainingRequest req;
    req.token = m.token;
    req.global_program = m.global_program;
    req.local_program = m.local_program;
    req.group_programs = m.group_programs;
    RunReport r = RunScenario(c, req, config.tokens, transport);
    if (!config.run_root.empty()) {
      WriteRunDir((fs::path(config.run_root) / ("run-" + std::to_string(submission))).string(), r);
    }
    return ToFinal(r);
  } catch (const Error& e) {
    return Rejected(e.code(), e.what());
  } catch (const std::exception& e) {
    return Rejected(ErrorCode::kInternal, e.what());
  }
}

EdgeSetup EdgeSetupFromJson(const json& j, const std::string& base_dir) {
  EdgeSetup s;
  try {
    const json& sc = j.at("scenario");
    if (sc.is_string()) {
      fs::path p(sc.get<std::string>());
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      s.scenario = LoadScenario(p.string());
    } else {
      s.scenario = ScenarioFromJson(sc);
    }
    std::vector<std::string> all;
    for (int i = 0; i < s.scenario.data.n_users; ++i) all.push_back(data::UserId(i));
    if (j.contains("users")) {
      std::set<std::string> known(all.begin(), all.end());
      for (const auto& u : j["users"]) {
        std::string id = u.get<std::string>();
        if (!known.count(id)) Fail(ErrorCode::kInvalidArgument, "edge config: unknown user '" + id + "'");
        s.user_ids.push_back(id);
      }
    } else if (j.contains("shard")) {
      int index = j["shard"].at("index").get<int>();
      int count = j["shard"].at("count").get<int>();
      if (count < 1 || index < 0 || index >= count) {
        Fail(ErrorCode::kInvalidArgument, "edge config: shard needs 0 <= index < count");
      }
      for (std::size_t i = index; i < all.size(); i += count) s.user_ids.push_back(all[i]);
    } else {
      s.user_ids = all;
    }
    if (j.contains("connect_timeout_ms")) {
      s.connect_timeout = std::chrono::milliseconds(j["connect_timeout_ms"].get<long>());
      if (s.connect_timeout.count() < 0) Fail(ErrorCode::kInvalidArgument, "edge config: negative connect_timeout_ms");
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("edge config: ") + e.what());
  }
  if (s.user_ids.empty()) Fail(ErrorCode::kInvalidArgument, "edge config: no users");
  return s;
}

EdgeSetup LoadEdgeSetup(const std::string& path) {
  return EdgeSetupFromJson(ReadJson(path), fs::path(path).parent_path().string());
}

std::unique_ptr<net::EdgeNode> MakeEdgeNode(const EdgeSetup& s) {
  Population pop = BuildPopulation(s.scenario);
  return std::make_unique<net::EdgeNode>(HostedUsers(s.scenario, pop, s.user_ids),
                                         BuildEdgeConfig(s.scenario));
}

}  // namespace polifed::app
