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

#include "polifed/app/scenario.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "polifed/common/error.h"
#include "polifed/common/rng.h"
#include "polifed/fl/task.h"
#include "polifed/net/messages.h"
#include "polifed/policy/macros.h"

namespace polifed::app {
namespace {

using nlohmann::json;

json ProgramJson(const dpp::RestrictedProgram& p) { return net::ProgramToJson(p); }

void CollectFilterTags(const policy::Policy& p, std::set<std::string>& tags) {
  switch (p.kind()) {
    case policy::Kind::kZero:
    case policy::Kind::kOne:
      return;
    case policy::Kind::kCommand: {
      const auto& c = p.command();
      if (c.name != "filter") return;
      auto it = c.params.find("sensors");
      if (it == c.params.end()) return;
      auto add = [&](const policy::Literal& l) { tags.insert(l.is_string() ? l.str() : l.ToString()); };
      if (it->second.is_list()) {
        for (const auto& l : it->second.list()) add(l);
      } else {
        add(it->second.literal());
      }
      return;
    }
    case policy::Kind::kNeg:
    case policy::Kind::kStar:
      CollectFilterTags(p.left(), tags);
      return;
    default:
      CollectFilterTags(p.left(), tags);
      CollectFilterTags(p.right(), tags);
  }
}

std::vector<std::string> FilterTags(const policy::Policy& p) {
  std::set<std::string> tags;
  CollectFilterTags(p, tags);
  return {tags.begin(), tags.end()};
}

// get_data [. filter] . train_local[_dp], shaped to satisfy the group policy.
dpp::RestrictedProgram DefaultLocalProgram(const ScenarioConfig& c, const GroupConfig& g) {
  dpp::RestrictedProgram p;
  p.role = dpp::Role::kLocal;
  policy::ParamMap get_args;
  if (!c.data_type.empty()) {
    get_args.emplace("data_type", policy::ParamValue(policy::Literal::String(c.data_type)));
  }
  p.steps.push_back({policy::CommandInvocation("get_data", get_args), {net::kDataSlot}, "d"});
  std::string data = "d";
  std::vector<std::string> tags = FilterTags(policy::CompilePolicy(g.policy));
  if (!tags.empty()) {
    std::vector<policy::Literal> items;
    for (const auto& t : tags) items.push_back(policy::Literal::String(t));
    policy::ParamMap args;
    args.emplace("sensors", policy::ParamValue::List(items));
    p.steps.push_back({policy::CommandInvocation("filter", args), {"d"}, "f"});
    data = "f";
  }
  p.steps.push_back({policy::CommandInvocation(g.dp.enabled() ? "train_local_dp" : "train_local"),
                     {net::kModelSlot, data},
                     "u"});
  return p;
}

}  // namespace

void ScenarioConfig::Validate() const {
  if (groups.empty()) Fail(ErrorCode::kInvalidArgument, "scenario needs at least one group");
  double total = 0;
  std::set<std::string> ids;
  for (const auto& g : groups) {
    if (g.id.empty() || !ids.insert(g.id).second) {
      Fail(ErrorCode::kInvalidArgument, "group ids must be unique and non-empty");
    }
    if (!(g.fraction > 0)) Fail(ErrorCode::kInvalidArgument, "group fractions must be positive");
    total += g.fraction;
    g.dp.Validate();
  }
  if (std::abs(total - 1.0) > 1e-9) Fail(ErrorCode::kInvalidArgument, "group fractions must sum to 1");
  if (rounds < 1) Fail(ErrorCode::kInvalidArgument, "rounds must be >= 1");
  if (round_size < 1) Fail(ErrorCode::kInvalidArgument, "round_size must be >= 1");
  if (data.n_users < static_cast<int>(groups.size())) {
    Fail(ErrorCode::kInvalidArgument, "fewer users than groups");
  }
  if (!(eta > 0)) Fail(ErrorCode::kInvalidArgument, "eta must be positive");
  train.Validate();
}

ScenarioConfig ScenarioFromJson(const json& j) {
  ScenarioConfig c;
  try {
    c.data.kind = data::ParseTaskKind(j.value("task", std::string("classification-2class")));
    c.data.n_users = j.value("n_users", c.data.n_users);
    c.data.rows_per_user = j.value("rows_per_user", c.data.rows_per_user);
    c.data.separation = j.value("separation", c.data.separation);
    if (j.contains("dirichlet_alpha") && !j["dirichlet_alpha"].is_null()) {
      c.data.dirichlet_alpha = j["dirichlet_alpha"].get<double>();
    }
    c.model = j.value("model", c.model);
    c.hidden = j.value("hidden", c.hidden);
    c.strategy = net::ParseStrategy(j.value("strategy", std::string("cascaded")));
    c.rounds = j.value("rounds", c.rounds);
    c.round_size = j.value("round_size", c.round_size);
    c.eta = j.value("eta", c.eta);
    std::string divisor = j.value("divisor", std::string("total"));
    if (divisor == "total") {
      c.divisor = net::Divisor::kTotal;
    } else if (divisor == "round") {
      c.divisor = net::Divisor::kRound;
    } else {
      Fail(ErrorCode::kInvalidArgument, "divisor must be 'total' or 'round'");
    }
    if (j.contains("train")) c.train = net::TrainConfigFromJson(j["train"]);
    if (j.contains("seeds")) {
      c.data.seed = j["seeds"].value("data", std::uint64_t{0});
      c.seed = j["seeds"].value("run", std::uint64_t{0});
    } else {
      c.data.seed = c.seed = j.value("seed", std::uint64_t{0});
    }
    if (j.contains("timeout_ms") && !j["timeout_ms"].is_null()) {
      c.timeout = std::chrono::milliseconds(j["timeout_ms"].get<long>());
    }
    c.token = j.value("token", c.token);
    c.data_type = j.value("data_type", c.data_type);
    if (j.contains("geofences")) {
      for (const auto& [name, g] : j["geofences"].items()) {
        data::Geofence gf{g.at("lat").get<double>(), g.at("lon").get<double>(),
                          g.at("radius_m").get<double>()};
        gf.Validate();
        c.geofences.emplace(name, gf);
      }
    }
    if (j.contains("programs")) {
      const json& p = j["programs"];
      if (p.contains("local")) c.local_program = net::ProgramFromJson(p["local"]);
      if (p.contains("global")) c.global_program = net::ProgramFromJson(p["global"]);
      if (p.contains("groups")) {
        for (const auto& [g, prog] : p["groups"].items()) {
          c.group_programs.emplace(g, net::ProgramFromJson(prog));
        }
      }
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    for (const auto& gj : j.at("groups")) {
      GroupConfig g;
      g.id = gj.at("id").get<std::string>();
      g.policy = gj.at("policy").get<std::string>();
      g.fraction = gj.value("fraction", 1.0);
      if (gj.contains("dp")) g.dp = net::DpConfigFromJson(gj["dp"]);
      if (gj.contains("max_epsilon") && !gj["max_epsilon"].is_null()) {
        g.max_epsilon = gj["max_epsilon"].get<double>();
      }
      if (gj.contains("rounds")) g.rounds = gj["rounds"].get<int>();
      if (gj.contains("round_size")) g.round_size = gj["round_size"].get<int>();
      c.groups.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("scenario: ") + e.what());
  }
  c.Validate();
  return c;
}

json ScenarioToJson(const ScenarioConfig& c) {
  json j;
  j["task"] = data::TaskKindName(c.data.kind);
  j["n_users"] = c.data.n_users;
  j["rows_per_user"] = c.data.rows_per_user;
  j["separation"] = c.data.separation;
  j["dirichlet_alpha"] = c.data.dirichlet_alpha ? json(*c.data.dirichlet_alpha) : json(nullptr);
  j["model"] = c.model;
  j["hidden"] = c.hidden;
  j["strategy"] = net::StrategyName(c.strategy);
  j["rounds"] = c.rounds;
  j["round_size"] = c.round_size;
  j["eta"] = c.eta;
  j["divisor"] = c.divisor == net::Divisor::kTotal ? "total" : "round";
  j["train"] = net::TrainConfigToJson(c.train);
  j["seeds"] = {{"data", c.data.seed}, {"run", c.seed}};
  j["timeout_ms"] = c.timeout ? json(c.timeout->count()) : json(nullptr);
  j["token"] = c.token;
  j["data_type"] = c.data_type;
  json gf = json::object();
  for (const auto& [name, g] : c.geofences) {
    gf[name] = {{"lat", g.lat}, {"lon", g.lon}, {"radius_m", g.radius_m}};
  }
  j["geofences"] = gf;
  json programs = json::object();
  if (c.local_program) programs["local"] = ProgramJson(*c.local_program);
  if (c.global_program) programs["global"] = ProgramJson(*c.global_program);
  if (!c.group_programs.empty()) {
    json g = json::object();
    for (const auto& [id, p] : c.group_programs) g[id] = ProgramJson(p);
    programs["groups"] = g;
  }
  j["programs"] = programs;
  j["output_dir"] = c.output_dir;
  j["groups"] = json::array();
  for (const auto& g : c.groups) {
    json gj = {{"id", g.id}, {"policy", g.policy}, {"fraction", g.fraction},
               {"dp", net::DpConfigToJson(g.dp)}};
    gj["max_epsilon"] = g.max_epsilon ? json(*g.max_epsilon) : json(nullptr);
    if (g.rounds) gj["rounds"] = *g.rounds;
    if (g.round_size) gj["round_size"] = *g.round_size;
    j["groups"].push_back(gj);
  }
  return j;
}

ScenarioConfig LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open scenario '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) Fail(ErrorCode::kParse, "scenario '" + path + "' is not valid JSON");
  return ScenarioFromJson(j);
}

Population BuildPopulation(const ScenarioConfig& c) {
  c.Validate();
  Population pop;
  pop.users = data::GenerateTask(c.data);
  std::vector<std::string> ids;
  for (const auto& u : pop.users) ids.push_back(u.user_id);
  Rng rng(MixSeed({c.data.seed, 0x67726f7570ULL}));
  std::shuffle(ids.begin(), ids.end(), rng);
  std::size_t start = 0;
  double cum = 0;
  for (std::size_t gi = 0; gi < c.groups.size(); ++gi) {
    const GroupConfig& g = c.groups[gi];
    cum += g.fraction;
    std::size_t end = gi + 1 == c.groups.size()
                          ? ids.size()
                          : static_cast<std::size_t>(std::llround(cum * static_cast<double>(ids.size())));
    end = std::clamp(end, start + 1, ids.size() - (c.groups.size() - gi - 1));
    auto& members = pop.members[g.id];
    for (std::size_t i = start; i < end; ++i) {
      members.push_back(ids[i]);
      pop.group_of[ids[i]] = g.id;
    }
    std::sort(members.begin(), members.end());
    start = end;
  }
  return pop;
}

int FilteredTagCount(const policy::Policy& p) { return static_cast<int>(FilterTags(p).size()); }

net::GroupSchedule BuildSchedule(const ScenarioConfig& c, const Population& pop) {
  net::GroupSchedule s;
  s.strategy = c.strategy;
  s.combined_rounds = c.rounds;
  s.combined_round_size = c.round_size;
  for (const auto& g : c.groups) {
    net::GroupSpec spec;
    spec.id = g.id;
    spec.policy = policy::CompilePolicy(g.policy);
    spec.members = pop.members.at(g.id);
    spec.rounds = g.rounds.value_or(c.rounds);
    spec.round_size = g.round_size.value_or(std::min<int>(c.round_size, static_cast<int>(spec.members.size())));
    spec.dp = g.dp;
    spec.max_epsilon = g.max_epsilon;
    spec.filtered_tags = FilteredTagCount(spec.policy);
    s.groups.push_back(std::move(spec));
  }
  s.Validate();
  return s;
}

net::TrainingRequest BuildRequest(const ScenarioConfig& c) {
  net::TrainingRequest r;
  r.token = c.token;
  r.global_program = c.global_program.value_or(net::DefaultGlobalProgram());
  if (c.local_program) {
    r.local_program = *c.local_program;
  } else {
    r.local_program = DefaultLocalProgram(c, c.groups.front());
    for (const auto& g : c.groups) r.group_programs[g.id] = DefaultLocalProgram(c, g);
  }
  for (const auto& [g, p] : c.group_programs) r.group_programs[g] = p;
  return r;
}

net::ModelSpec BuildModelSpec(const ScenarioConfig& c) {
  data::TaskInfo info = data::DescribeTask(c.data.kind);
  net::ModelSpec s;
  s.model = c.model;
  s.dim = info.features.size();
  s.classes = info.num_classes;
  s.hidden = c.hidden;
  s.features = info.features;
  return s;
}

net::CoordinatorConfig BuildCoordinatorConfig(const ScenarioConfig& c) {
  net::CoordinatorConfig cc;
  cc.spec = BuildModelSpec(c);
  cc.train = c.train;
  cc.eta = c.eta;
  cc.divisor = c.divisor;
  cc.seed = c.seed;
  cc.timeout = c.timeout;
  return cc;
}

fl::ModelParams InitialModel(const ScenarioConfig& c) {
  net::ModelSpec s = BuildModelSpec(c);
  return fl::MakeTask(s.model, s.dim, s.classes, s.hidden)->Init(MixSeed({c.seed, 0x696e6974ULL}));
}

net::EdgeConfig BuildEdgeConfig(const ScenarioConfig& c) { return {c.data_type, c.geofences}; }

std::vector<net::HostedUser> HostedUsers(const ScenarioConfig& c, const Population& pop,
                                         const std::vector<std::string>& ids) {
  std::map<std::string, policy::Policy> compiled;
  for (const auto& g : c.groups) compiled.emplace(g.id, policy::CompilePolicy(g.policy));
  std::map<std::string, const data::UserDataset*> by_id;
  for (const auto& u : pop.users) by_id[u.user_id] = &u;
  std::vector<net::HostedUser> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) Fail(ErrorCode::kInvalidArgument, "unknown user '" + id + "'");
    out.push_back({id, *it->second, compiled.at(pop.group_of.at(id))});
  }
  return out;
}

std::string MetricName(const ScenarioConfig& c) {
  return c.data.kind == data::TaskKind::kClassification2 ? "auc" : "accuracy";
}

}  // namespace polifed::app
