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

#include "polifed/dpp/runtime.h"

#include <set>

#include "json.hpp"
#include "polifed/common/error.h"

namespace polifed::dpp {

using policy::CommandInvocation;
using policy::Policy;

DataPolicyPair MakeDerived(Payload value, Policy policy,
                           std::shared_ptr<const LineageNode> lineage);

namespace {

nlohmann::json LiteralToJson(const policy::Literal& l) {
  if (l.is_string()) return l.str();
  return l.number();
}

policy::Literal LiteralFromJson(const nlohmann::json& j) {
  if (j.is_string()) return policy::Literal::String(j.get<std::string>());
  if (j.is_number()) return policy::Literal::Number(j.get<double>());
  Fail(ErrorCode::kInvalidArgument, "argument values must be strings, numbers or lists");
}

std::string Describe(const ProgramStep& s, std::size_t index) {
  return "step " + std::to_string(index) + " (" + s.cmd.name + ")";
}

}  // namespace

const char* PayloadKindName(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kNone: return "none";
    case PayloadKind::kDataset: return "dataset";
    case PayloadKind::kModel: return "model";
    case PayloadKind::kUpdate: return "update";
    case PayloadKind::kScalar: return "scalar";
  }
  return "?";
}

Payload Payload::Dataset(data::UserDataset d) {
  Payload p;
  p.kind_ = PayloadKind::kDataset;
  p.dataset_ = std::make_shared<const data::UserDataset>(std::move(d));
  return p;
}

Payload Payload::Model(fl::ModelParams m) {
  Payload p;
  p.kind_ = PayloadKind::kModel;
  p.params_ = std::make_shared<const fl::ModelParams>(std::move(m));
  return p;
}

Payload Payload::Update(fl::ModelParams u) {
  Payload p = Model(std::move(u));
  p.kind_ = PayloadKind::kUpdate;
  return p;
}

Payload Payload::Scalar(double v) {
  Payload p;
  p.kind_ = PayloadKind::kScalar;
  p.scalar_ = v;
  return p;
}

const data::UserDataset& Payload::dataset() const {
  if (kind_ != PayloadKind::kDataset) {
    Fail(ErrorCode::kInvalidArgument, std::string("expected a dataset, got ") + PayloadKindName(kind_));
  }
  return *dataset_;
}

const fl::ModelParams& Payload::params() const {
  if (kind_ != PayloadKind::kModel && kind_ != PayloadKind::kUpdate) {
    Fail(ErrorCode::kInvalidArgument, std::string("expected model parameters, got ") +
                                          PayloadKindName(kind_));
  }
  return *params_;
}

double Payload::scalar() const {
  if (kind_ != PayloadKind::kScalar) {
    Fail(ErrorCode::kInvalidArgument, std::string("expected a scalar, got ") + PayloadKindName(kind_));
  }
  return scalar_;
}

const Payload& TrustedAccess::value(const DataPolicyPair& dpp) { return dpp.value_; }

DataPolicyPair::DataPolicyPair(Payload value, const Policy& policy)
    : value_(std::move(value)), policy_(policy::Reduce(policy)) {
  auto root = std::make_shared<LineageNode>();
  root->origin = policy_;
  lineage_ = std::move(root);
}

DataPolicyPair MakeDerived(Payload value, Policy policy,
                           std::shared_ptr<const LineageNode> lineage) {
  DataPolicyPair d;
  d.value_ = std::move(value);
  d.policy_ = std::move(policy);
  d.lineage_ = std::move(lineage);
  return d;
}

std::vector<std::pair<std::string, int>> DataPolicyPair::provenance() const {
  std::vector<std::pair<std::string, int>> out;
  for (const LineageNode* n = lineage_.get(); n && !n->parents.empty();
       n = n->parents.front().get()) {
    out.emplace_back(n->command, n->round);
  }
  return {out.rbegin(), out.rend()};
}

DataPolicyPair DataPolicyPair::WithPolicy(const Policy& policy) const {
  return MakeDerived(value_, policy::Reduce(policy), lineage_);
}

const char* RoleName(Role role) {
  switch (role) {
    case Role::kLocal: return "local";
    case Role::kGlobal: return "global";
    case Role::kBoth: return "both";
  }
  return "?";
}

Role ParseRole(const std::string& name) {
  if (name == "local") return Role::kLocal;
  if (name == "global") return Role::kGlobal;
  if (name == "both") return Role::kBoth;
  Fail(ErrorCode::kInvalidArgument, "unknown role '" + name + "'");
}

CommandRegistry::Builder& CommandRegistry::Builder::Add(const std::string& name,
                                                        CommandEntry entry) {
  if (!policy::IsIdentifier(name)) Fail(ErrorCode::kInvalidArgument, "bad command name " + name);
  if (name == kReturnCommand) Fail(ErrorCode::kInvalidArgument, "'return' is built in");
  if (!entry.hook) Fail(ErrorCode::kInvalidArgument, "command " + name + " has no hook");
  if (entry.arity < 1) Fail(ErrorCode::kInvalidArgument, "command " + name + " needs an input");
  entries_.insert_or_assign(name, std::move(entry));
  return *this;
}

CommandRegistry CommandRegistry::Builder::Build() {
  auto entries = entries_;
  entries.emplace(kReturnCommand,
                  CommandEntry{[](std::span<const Payload* const> in, const CommandInvocation&,
                                  ExecContext&) { return *in[0]; },
                               1, Role::kBoth});
  return CommandRegistry(std::move(entries));
}

const CommandEntry* CommandRegistry::Find(const std::string& name, Role site) const {
  auto it = entries_->find(name);
  if (it == entries_->end()) return nullptr;
  Role r = it->second.role;
  if (r != Role::kBoth && site != Role::kBoth && r != site) return nullptr;
  return &it->second;
}

std::vector<std::string> CommandRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : *entries_) out.push_back(n);
  return out;
}

Policy CheckInvocation(std::span<const Policy> inputs, const CommandInvocation& cmd) {
  Policy combined = policy::Top();
  for (const Policy& p : inputs) {
    Policy d = p.is_zero() ? p : policy::Derive(p, cmd);
    if (d.is_zero()) throw PolicyViolation(cmd.ToString(), p.ToString());
    combined = policy::Intersect(combined, d);
  }
  return policy::Reduce(combined);
}

namespace {

const CommandEntry& Lookup(const CommandRegistry& registry, const CommandInvocation& cmd,
                           Role site, std::size_t arity) {
  const CommandEntry* e = registry.Find(cmd.name, site);
  if (e == nullptr) {
    Fail(ErrorCode::kUnknownCommand,
         "command '" + cmd.name + "' is not registered for " + RoleName(site) + " programs");
  }
  if (static_cast<std::size_t>(e->arity) != arity) {
    Fail(ErrorCode::kInvalidArgument, "command '" + cmd.name + "' takes " +
                                          std::to_string(e->arity) + " input(s), got " +
                                          std::to_string(arity));
  }
  return *e;
}

}  // namespace

DataPolicyPair Invoke(std::span<const DataPolicyPair* const> inputs, const CommandInvocation& cmd,
                      const CommandRegistry& registry, ExecContext& ctx, Role site) {
  const CommandEntry& entry = Lookup(registry, cmd, site, inputs.size());
  std::vector<Policy> policies;
  for (const auto* in : inputs) policies.push_back(in->policy());
  Policy out_policy = CheckInvocation(policies, cmd);

  std::vector<const Payload*> values;
  auto node = std::make_shared<LineageNode>();
  node->command = cmd.name;
  node->round = ctx.round;
  for (const auto* in : inputs) {
    values.push_back(&TrustedAccess::value(*in));
    node->parents.push_back(in->lineage());
  }
  if (ctx.hook_calls != nullptr) ++(*ctx.hook_calls)[cmd.name];
  Payload result = entry.hook(values, cmd, ctx);
  return MakeDerived(std::move(result), std::move(out_policy), std::move(node));
}

bool CanReturn(const Policy& p) {
  return policy::Emptiness(policy::Derive(p, CommandInvocation(kReturnCommand)));
}

bool CanReturn(const DataPolicyPair& dpp) { return CanReturn(dpp.policy()); }

std::string RestrictedProgram::ToJson() const {
  nlohmann::json j;
  j["role"] = RoleName(role);
  j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json args = nlohmann::json::object();
    for (const auto& [k, v] : s.cmd.args) {
      if (v.is_list()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& l : v.list()) arr.push_back(LiteralToJson(l));
        args[k] = arr;
      } else {
        args[k] = LiteralToJson(v.literal());
      }
    }
    j["steps"].push_back({{"cmd", s.cmd.name}, {"args", args}, {"in", s.in}, {"out", s.out}});
  }
  return j.dump();
}

RestrictedProgram RestrictedProgram::FromJson(const std::string& text) {
  RestrictedProgram prog;
  try {
    auto j = nlohmann::json::parse(text);
    prog.role = ParseRole(j.at("role").get<std::string>());
    for (const auto& s : j.at("steps")) {
      ProgramStep step;
      step.cmd.name = s.at("cmd").get<std::string>();
      if (!policy::IsIdentifier(step.cmd.name)) {
        Fail(ErrorCode::kInvalidArgument, "bad command name '" + step.cmd.name + "'");
      }
      if (s.contains("args")) {
        for (const auto& [k, v] : s.at("args").items()) {
          if (!policy::IsIdentifier(k)) Fail(ErrorCode::kInvalidArgument, "bad argument name " + k);
          if (v.is_array()) {
            std::vector<policy::Literal> items;
            for (const auto& x : v) items.push_back(LiteralFromJson(x));
            step.cmd.args.emplace(k, policy::ParamValue::List(std::move(items)));
          } else {
            step.cmd.args.emplace(k, policy::ParamValue(LiteralFromJson(v)));
          }
        }
      }
      step.in = s.at("in").get<std::vector<std::string>>();
      step.out = s.at("out").get<std::string>();
      prog.steps.push_back(std::move(step));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("malformed program: ") + e.what());
  }
  return prog;
}

PolicyMap PreflightProgram(const RestrictedProgram& prog, const PolicyMap& initial,
                           const CommandRegistry& registry) {
  PolicyMap slots = initial;
  for (std::size_t i = 0; i < prog.steps.size(); ++i) {
    const ProgramStep& s = prog.steps[i];
    Lookup(registry, s.cmd, prog.role, s.in.size());
    std::vector<Policy> in;
    for (const auto& name : s.in) {
      auto it = slots.find(name);
      if (it == slots.end()) {
        Fail(ErrorCode::kMissingSlot, Describe(s, i) + " reads undefined slot '" + name + "'");
      }
      in.push_back(it->second);
    }
    if (s.out.empty() || slots.contains(s.out)) {
      Fail(ErrorCode::kSlotReuse, Describe(s, i) + " reassigns slot '" + s.out + "'");
    }
    slots.emplace(s.out, CheckInvocation(in, s.cmd));
  }
  return slots;
}

SlotMap RunProgram(const RestrictedProgram& prog, SlotMap slots, const CommandRegistry& registry,
                   ExecContext& ctx) {
  PolicyMap policies;
  for (const auto& [name, dpp] : slots) policies.emplace(name, dpp.policy());
  PreflightProgram(prog, policies, registry);
  for (const auto& s : prog.steps) {
    std::vector<const DataPolicyPair*> in;
    for (const auto& name : s.in) in.push_back(&slots.at(name));
    DataPolicyPair out = Invoke(in, s.cmd, registry, ctx, prog.role);
    slots.emplace(s.out, std::move(out));
  }
  return slots;
}

}  // namespace polifed::dpp
