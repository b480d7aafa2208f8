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

// Independent automaton semantics for policies, used only by tests to check
// the derivative engine. Thompson construction handles 0, 1, commands,
// sequence, union and star; intersection is a DFA product and negation the
// complement of a determinized automaton over a fixed finite alphabet.

#ifndef POLIFED_TESTS_SUPPORT_AUTOMATON_ORACLE_H_
#define POLIFED_TESTS_SUPPORT_AUTOMATON_ORACLE_H_

#include <string>
#include <vector>

#include "polifed/policy/policy.h"

namespace polifed::testing {

struct Dfa {
  // next[state][symbol]; state 0 is the start state. Complete.
  std::vector<std::vector<int>> next;
  std::vector<bool> accepting;

  bool Accepts(const std::vector<int>& word) const;
};

// Compiles `p` over `alphabet` (command names; patterns must be bare).
Dfa CompileToDfa(const policy::Policy& p,
                 const std::vector<std::string>& alphabet);

}  // namespace polifed::testing

#endif  // POLIFED_TESTS_SUPPORT_AUTOMATON_ORACLE_H_
