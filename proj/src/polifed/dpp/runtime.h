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

// Data-Policy Pairs and the interpreter for restricted programs.

#ifndef POLIFED_DPP_RUNTIME_H_
#define POLIFED_DPP_RUNTIME_H_

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "polifed/data/dataset.h"
#include "polifed/fl/model_params.h"
#include "polifed/policy/policy.h"

namespace polifed::dpp {

enum class PayloadKind { kNone, kDataset, kModel, kUpdate, kScalar };

const char* PayloadKindName(PayloadKind kind);

// Immutable value held inside a DPP. Copies share storage.
class Payload {
 public:
  Payload() = default;
  static Payload Dataset(data::UserDataset d);
  static Payload Model(fl::ModelParams m);
  static Payload Update(fl::ModelParams u);
  static Payload Scalar(double v);

  PayloadKind kind() const { return kind_; }
  // Throw InvalidArgument when the kind does not match.
  const data::UserDataset& dataset() const;
  // Model or update.
  const fl::ModelParams& params() const;
  double scalar() const;

 private:
  PayloadKind kind_ = PayloadKind::kNone;
  std::shared_ptr<const data::UserDataset> dataset_;
  std::shared_ptr<const fl::ModelParams> params_;
  double scalar_ = 0;
};

// Audit record: one node per DPP, linked to the DPPs it was computed from.
struct LineageNode {
  std::string command;
  int round = 0;
  std::vector<std::shared_ptr<const LineageNode>> parents;
  // Policy the payload carried when it entered the runtime (roots only).
  policy::Policy origin;
};

class DataPolicyPair;

// For trusted runtime code only (command hooks, release after CanReturn).
class TrustedAccess {
 public:
  static const Payload& value(const DataPolicyPair& dpp);
};

class DataPolicyPair {
 public:
  // Binds `value` to Reduce(policy) and starts a fresh lineage.
  DataPolicyPair(Payload value, const policy::Policy& policy);

  const policy::Policy& policy() const { return policy_; }
  PayloadKind kind() const { return value_.kind(); }
  const std::shared_ptr<const LineageNode>& lineage() const { return lineage_; }
  // (command, round) along the first-input path, oldest first.
  std::vector<std::pair<std::string, int>> provenance() const;

  // Same payload under a different policy; lineage is kept. Used by the
  // coordinator for per-group policy views of one shared model.
  DataPolicyPair WithPolicy(const policy::Policy& policy) const;

 private:
  friend class TrustedAccess;
  friend DataPolicyPair MakeDerived(Payload, policy::Policy,
                                    std::shared_ptr<const LineageNode>);
  DataPolicyPair() = default;

  Payload value_;
  policy::Policy policy_;
  std::shared_ptr<const LineageNode> lineage_;
};

// Execution site of a command or program.
enum class Role { kLocal, kGlobal, kBoth };

const char* RoleName(Role role);
Role ParseRole(const std::string& name);

// Base for per-execution state handed to hooks. Hooks downcast to the
// concrete context they expect.
struct ExecContext {
  virtual ~ExecContext() = default;
  int round = 0;
  // When set, Invoke counts hook executions per command name.
  std::map<std::string, long>* hook_calls = nullptr;
};

using Hook = std::function<Payload(std::span<const Payload* const> inputs,
                                   const policy::CommandInvocation& cmd, ExecContext& ctx)>;

struct CommandEntry {
  Hook hook;
  int arity = 1;
  Role role = Role::kBoth;
};

inline constexpr const char* kReturnCommand = "return";

// Fixed set of trusted commands. `return` (arity 1, both sites, identity)
// is always present.
class CommandRegistry {
 public:
  class Builder {
   public:
    Builder& Add(const std::string& name, CommandEntry entry);
    CommandRegistry Build();

   private:
    std::map<std::string, CommandEntry> entries_;
  };

  // Null when `name` is unknown or not runnable at `site`.
  const CommandEntry* Find(const std::string& name, Role site) const;
  std::vector<std::string> names() const;

 private:
  explicit CommandRegistry(std::map<std::string, CommandEntry> entries)
      : entries_(std::make_shared<const std::map<std::string, CommandEntry>>(std::move(entries))) {}
  std::shared_ptr<const std::map<std::string, CommandEntry>> entries_;
};

// Per-input derivative, rejecting with PolicyViolation when any is Zero.
// Returns Reduce(Intersect of the derivatives) without running anything.
policy::Policy CheckInvocation(std::span<const policy::Policy> inputs,
                               const policy::CommandInvocation& cmd);

// Checks every input policy, then runs the hook. Throws PolicyViolation,
// UnknownCommand (also for a site mismatch), or InvalidArgument on an
// arity mismatch.
DataPolicyPair Invoke(std::span<const DataPolicyPair* const> inputs,
                      const policy::CommandInvocation& cmd, const CommandRegistry& registry,
                      ExecContext& ctx, Role site);

// True iff E(D(policy, return)).
bool CanReturn(const policy::Policy& p);
bool CanReturn(const DataPolicyPair& dpp);

struct ProgramStep {
  policy::CommandInvocation cmd;
  std::vector<std::string> in;
  std::string out;
};

// Single-assignment plan over registry commands.
struct RestrictedProgram {
  Role role = Role::kLocal;
  std::vector<ProgramStep> steps;

  // {"role":"local","steps":[{"cmd":..,"args":{..},"in":[..],"out":..}]}
  std::string ToJson() const;
  static RestrictedProgram FromJson(const std::string& text);
};

using SlotMap = std::map<std::string, DataPolicyPair>;
using PolicyMap = std::map<std::string, policy::Policy>;

// Runs the plan on policies alone: every step's command must be known at
// the program's site with matching arity, slots must be defined before use
// and assigned once, and every derivative must be non-Zero. Returns the
// policy of every slot afterwards. No hook runs.
PolicyMap PreflightProgram(const RestrictedProgram& prog, const PolicyMap& initial,
                           const CommandRegistry& registry);

// Preflights the whole plan, then executes it step by step. On any error no
// further hook runs and the error propagates. Returns all slots.
SlotMap RunProgram(const RestrictedProgram& prog, SlotMap slots,
                   const CommandRegistry& registry, ExecContext& ctx);

}  // namespace polifed::dpp

#endif  // POLIFED_DPP_RUNTIME_H_
