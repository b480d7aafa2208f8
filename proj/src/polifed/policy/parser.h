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

#ifndef POLIFED_POLICY_PARSER_H_
#define POLIFED_POLICY_PARSER_H_

#include <string_view>
#include <vector>

#include "polifed/policy/policy.h"

namespace polifed::policy {

// Grammar, loosest binding first:
//
//   union     := intersect ('+' intersect)*
//   intersect := seq ('&' seq)*
//   seq       := unary ('.' unary)*
//   unary     := '!' unary | atom '*'*
//   atom      := '0' | '1' | command | '(' union ')'
//   command   := ident [ '(' [ident '=' value (',' ident '=' value)*] ')' ]
//   value     := literal | '[' [literal (',' literal)*] ']'
//   literal   := 'str' | "str" | number | ident
//
// Binary operators associate to the left. The result is the raw AST; call
// Reduce() before deriving. Throws ParseError with the byte offset.
Policy ParsePolicy(std::string_view text);

// Parses a single invocation, e.g. `filter(sensors=['mic', 'loc'])`.
CommandInvocation ParseInvocation(std::string_view text);

// Parses a comma-separated list of invocations. Commas inside parentheses
// or brackets belong to the argument lists.
std::vector<CommandInvocation> ParseTrace(std::string_view text);

}  // namespace polifed::policy

#endif  // POLIFED_POLICY_PARSER_H_
