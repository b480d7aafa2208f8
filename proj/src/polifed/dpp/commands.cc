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

#include "polifed/dpp/commands.h"

#include "polifed/common/error.h"

namespace polifed::dpp {
namespace {

using policy::CommandInvocation;

FlContext& Fl(ExecContext& ctx) {
  auto* fl = dynamic_cast<FlContext*>(&ctx);
  if (fl == nullptr) Fail(ErrorCode::kInternal, "command needs a federated-learning context");
  return *fl;
}

const policy::Literal* Arg(const CommandInvocation& cmd, const std::string& key) {
  auto it = cmd.args.find(key);
  if (it == cmd.args.end() || it->second.is_list()) return nullptr;
  return &it->second.literal();
}

std::string StringArg(const CommandInvocation& cmd, const std::string& key) {
  const policy::Literal* l = Arg(cmd, key);
  if (l == nullptr || !l->is_string()) {
    Fail(ErrorCode::kInvalidArgument, cmd.name + " needs a string argument '" + key + "'");
  }
  return l->str();
}

double NumberArg(const CommandInvocation& cmd, const std::string& key) {
  const policy::Literal* l = Arg(cmd, key);
  if (l == nullptr || l->is_string()) {
    Fail(ErrorCode::kInvalidArgument, cmd.name + " needs a numeric argument '" + key + "'");
  }
  return l->number();
}

const fl::DifferentiableTask& TaskOf(const FlContext& c) {
  if (c.task == nullptr) Fail(ErrorCode::kInternal, "no model task configured");
  return *c.task;
}

Payload GetData(std::span<const Payload* const> in, const CommandInvocation& cmd, ExecContext& ctx) {
  FlContext& c = Fl(ctx);
  const data::UserDataset& d = in[0]->dataset();
  if (const auto* t = Arg(cmd, "data_type"); t && !c.data_type.empty()) {
    if (!t->is_string() || t->str() != c.data_type) {
      Fail(ErrorCode::kInvalidArgument,
           "this node serves data_type '" + c.data_type + "', not " + t->ToString());
    }
  }
  return Payload::Dataset(d);
}

Payload Filter(std::span<const Payload* const> in, const CommandInvocation& cmd, ExecContext&) {
  std::vector<std::string> tags;
  auto it = cmd.args.find("sensors");
  if (it != cmd.args.end()) {
    std::vector<policy::Literal> items =
        it->second.is_list() ? it->second.list() : std::vector<policy::Literal>{it->second.literal()};
    for (const auto& l : items) {
      if (!l.is_string()) Fail(ErrorCode::kInvalidArgument, "filter sensors must be strings");
      tags.push_back(l.str());
    }
  }
  return Payload::Dataset(data::FilterColumns(in[0]->dataset(), tags));
}

Payload Geofence(std::span<const Payload* const> in, const CommandInvocation& cmd, ExecContext& ctx) {
  FlContext& c = Fl(ctx);
  std::string name = StringArg(cmd, "geofence");
  auto it = c.geofences.find(name);
  if (it == c.geofences.end()) Fail(ErrorCode::kInvalidArgument, "unknown geofence '" + name + "'");
  return Payload::Dataset(data::InGeofence(in[0]->dataset(), it->second));
}

Payload TrainLocal(std::span<const Payload* const> in, const CommandInvocation&, ExecContext& ctx) {
  FlContext& c = Fl(ctx);
  const fl::ModelParams& g = in[0]->params();
  fl::Examples ex = data::ToExamples(in[1]->dataset(), c.features);
  fl::ModelParams l = fl::TrainLocal(g, ex, c.train, TaskOf(c));
  return Payload::Update(fl::Subtract(l, g));
}

Payload TrainLocalDp(std::span<const Payload* const> in, const CommandInvocation&, ExecContext& ctx) {
  FlContext& c = Fl(ctx);
  const fl::ModelParams& g = in[0]->params();
  fl::Examples ex = data::ToExamples(in[1]->dataset(), c.features);
  return Payload::Update(fl::TrainLocalDp(g, ex, c.train, c.dp, TaskOf(c), c.noise_seed));
}

Payload Accumulate(std::span<const Payload* const> in, const CommandInvocation&, ExecContext&) {
  if (in[1]->kind() != PayloadKind::kUpdate) {
    Fail(ErrorCode::kInvalidArgument, "accumulate expects an update");
  }
  return Payload::Update(fl::Accumulate(in[0]->params(), in[1]->params()));
}

Payload Average(std::span<const Payload* const> in, const CommandInvocation&, ExecContext& ctx) {
  FlContext& c = Fl(ctx);
  if (in[0]->kind() != PayloadKind::kModel) Fail(ErrorCode::kInvalidArgument, "average expects a model");
  fl::ModelParams sum = in[1]->params();
  fl::AddGaussianNoise(c.server_noise_std, c.server_noise_seed, sum);
  return Payload::Model(fl::Average(in[0]->params(), sum, c.eta, c.n));
}

Payload EnforceBudget(std::span<const Payload* const> in, const CommandInvocation& cmd,
                      ExecContext& ctx) {
  FlContext& c = Fl(ctx);
  if (c.ledger == nullptr) Fail(ErrorCode::kInternal, "no privacy ledger configured");
  std::string group = StringArg(cmd, "group");
  double eps = NumberArg(cmd, "eps");
  dp::BudgetCheck check = dp::EnforceDpBudget(*c.ledger, group, eps);
  if (!check.pass) throw BudgetExceeded(group, check.spent, check.max_epsilon);
  return *in[0];
}

}  // namespace

const CommandRegistry& FlRegistry() {
  static const CommandRegistry* registry = [] {
    CommandRegistry::Builder b;
    b.Add("get_data", {GetData, 1, Role::kLocal});
    b.Add("filter", {Filter, 1, Role::kLocal});
    b.Add("in_geofence_cond", {Geofence, 1, Role::kLocal});
    b.Add("train_local", {TrainLocal, 2, Role::kLocal});
    b.Add("train_local_dp", {TrainLocalDp, 2, Role::kLocal});
    b.Add("accumulate", {Accumulate, 2, Role::kGlobal});
    b.Add("average", {Average, 2, Role::kGlobal});
    b.Add("enforce_dp_budget", {EnforceBudget, 1, Role::kGlobal});
    return new CommandRegistry(b.Build());
  }();
  return *registry;
}

CommandInvocation EnforceBudgetInvocation(double max_epsilon, const std::string& group) {
  policy::ParamMap args;
  args.emplace("eps", policy::ParamValue(policy::Literal::Number(max_epsilon)));
  args.emplace("group", policy::ParamValue(policy::Literal::String(group)));
  return CommandInvocation("enforce_dp_budget", std::move(args));
}

}  // namespace polifed::dpp
