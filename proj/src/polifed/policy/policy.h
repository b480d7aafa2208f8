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

// Use-based privacy policies: regular expressions over parameterized
// commands. A policy is advanced one command at a time by taking its
// derivative; data may be released once the residual policy accepts the
// empty trace after `return`.

#ifndef POLIFED_POLICY_POLICY_H_
#define POLIFED_POLICY_POLICY_H_

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace polifed::policy {

// A scalar literal: quoted strings and bare identifiers are strings,
// numerals are numbers.
struct Literal {
  std::variant<std::string, double> value;

  static Literal String(std::string s) { return Literal{std::move(s)}; }
  static Literal Number(double d) { return Literal{d}; }

  bool is_string() const { return value.index() == 0; }
  const std::string& str() const { return std::get<0>(value); }
  double number() const { return std::get<1>(value); }

  std::string ToString() const;

  friend std::strong_ordering operator<=>(const Literal& a, const Literal& b);
  friend bool operator==(const Literal& a, const Literal& b) {
    return (a <=> b) == 0;
  }
};

// A parameter value is a literal or a list of literals. Lists are stored
// sorted and de-duplicated so they compare as sets.
class ParamValue {
 public:
  ParamValue(Literal literal) : value_(std::move(literal)) {}  // NOLINT
  static ParamValue List(std::vector<Literal> items);

  bool is_list() const { return value_.index() == 1; }
  const Literal& literal() const { return std::get<0>(value_); }
  const std::vector<Literal>& list() const { return std::get<1>(value_); }

  std::string ToString() const;

  friend std::strong_ordering operator<=>(const ParamValue& a,
                                          const ParamValue& b);
  friend bool operator==(const ParamValue& a, const ParamValue& b) {
    return (a <=> b) == 0;
  }

 private:
  ParamValue() = default;
  std::variant<Literal, std::vector<Literal>> value_;
};

using ParamMap = std::map<std::string, ParamValue>;

bool IsIdentifier(std::string_view s);

// A command as it appears inside a policy: a name plus constraints on
// the arguments a runtime invocation must carry.
struct CommandPattern {
  std::string name;
  ParamMap params;

  std::string ToString() const;
  friend std::strong_ordering operator<=>(const CommandPattern& a,
                                          const CommandPattern& b);
  friend bool operator==(const CommandPattern& a, const CommandPattern& b) {
    return (a <=> b) == 0;
  }
};

// A command actually executed at runtime.
struct CommandInvocation {
  std::string name;
  ParamMap args;

  CommandInvocation() = default;
  explicit CommandInvocation(std::string n, ParamMap a = {})
      : name(std::move(n)), args(std::move(a)) {}

  std::string ToString() const;
};

// True iff the names agree and every constraint in `pattern` is met by an
// equal argument in `invocation`. Arguments the pattern does not mention
// are unconstrained.
bool MatchesCommand(const CommandPattern& pattern,
                    const CommandInvocation& invocation);

enum class Kind { kZero, kOne, kCommand, kSeq, kUnion, kIntersect, kNeg, kStar };

class Policy;

namespace internal {
struct Node;
}  // namespace internal

// Immutable policy value; copies share structure.
class Policy {
 public:
  // Default-constructed policy is Zero.
  Policy();

  static Policy Zero();
  static Policy One();
  static Policy Command(CommandPattern pattern);
  static Policy Command(std::string name);
  // Raw constructors: build exactly the requested node, no simplification.
  static Policy RawSeq(Policy a, Policy b);
  static Policy RawUnion(Policy a, Policy b);
  static Policy RawIntersect(Policy a, Policy b);
  static Policy RawNeg(Policy a);
  static Policy RawStar(Policy a);

  Kind kind() const;
  // Valid for binary nodes (both) and unary nodes (left only).
  const Policy& left() const;
  const Policy& right() const;
  // Valid for kCommand.
  const CommandPattern& command() const;

  bool is_zero() const { return kind() == Kind::kZero; }
  // Cached result of Emptiness(), computed when the node is built.
  bool nullable() const;
  // Number of AST nodes.
  std::size_t size() const;

  std::string ToString() const;

  friend std::strong_ordering operator<=>(const Policy& a, const Policy& b);
  friend bool operator==(const Policy& a, const Policy& b) {
    return (a <=> b) == 0;
  }

 private:
  friend struct internal::Node;
  explicit Policy(std::nullptr_t) {}
  explicit Policy(std::shared_ptr<const internal::Node> node)
      : node_(std::move(node)) {}
  std::shared_ptr<const internal::Node> node_;
};

// Simplifying constructors. Given reduced operands they return a reduced
// policy and never produce more nodes than the raw constructor would.
Policy Seq(const Policy& a, const Policy& b);
Policy Union(const Policy& a, const Policy& b);
Policy Intersect(const Policy& a, const Policy& b);
Policy Neg(const Policy& a);
Policy Star(const Policy& a);
// !0, the policy that permits every trace.
Policy Top();

// Whether `p` accepts the empty trace.
bool Emptiness(const Policy& p);

// Rewrites `p` to a fixed point of the reduction rules. The result accepts
// the same traces and is never larger than `p`.
Policy Reduce(const Policy& p);

// Brzozowski derivative of `p` with respect to one invocation, reduced.
Policy Derive(const Policy& p, const CommandInvocation& c);

// Folds Derive over `trace` and checks the residual for emptiness.
bool AcceptsTrace(const Policy& p, const std::vector<CommandInvocation>& trace);

}  // namespace polifed::policy

#endif  // POLIFED_POLICY_POLICY_H_
