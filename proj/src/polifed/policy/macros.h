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

#ifndef POLIFED_POLICY_MACROS_H_
#define POLIFED_POLICY_MACROS_H_

#include <map>
#include <string>
#include <string_view>

#include "polifed/policy/policy.h"

namespace polifed::policy {

// Umbrella commands such as `runFL` that stand for a longer policy
// fragment. Macro references are command names of the form `run[A-Z]...`;
// bodies may not contain macro references.
class MacroTable {
 public:
  // Throws InvalidArgument if `name` is not a macro name or `body`
  // references another macro.
  void Define(const std::string& name, const Policy& body);

  const Policy* Find(const std::string& name) const;
  const std::map<std::string, Policy>& entries() const { return entries_; }

  static bool IsMacroName(std::string_view name);

 private:
  std::map<std::string, Policy> entries_;
};

// runFL   := train_local . accumulate* . (train_local . accumulate* + average*)*
// runFLDP := the same with train_local_dp in place of train_local
const MacroTable& DefaultMacroTable();

// Replaces every macro command with its body. Throws InvalidArgument for a
// macro name missing from `table`.
Policy ExpandMacros(const Policy& p, const MacroTable& table);

// ParsePolicy, then ExpandMacros, then Reduce.
Policy CompilePolicy(std::string_view text, const MacroTable& table = DefaultMacroTable());

}  // namespace polifed::policy

#endif  // POLIFED_POLICY_MACROS_H_
