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

#include "polifed/policy/policy.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "polifed/common/error.h"

namespace polifed::policy {

namespace internal {

struct Node {
  Kind kind = Kind::kZero;
  CommandPattern command;
  Policy left{nullptr};
  Policy right{nullptr};
  std::size_t size = 1;
  bool nullable = false;
};

}  // namespace internal

using internal::Node;

// ---------------------------------------------------------------------------
// Literals and parameters.

std::string Literal::ToString() const {
  if (!is_string()) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), number());
    return std::string(buf, end);
  }
  std::string out = "'";
  for (char ch : str()) {
    switch (ch) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += ch;
    }
  }
  out += '\'';
  return out;
}

std::strong_ordering operator<=>(const Literal& a, const Literal& b) {
  if (a.value.index() != b.value.index()) {
    return a.value.index() <=> b.value.index();
  }
  if (a.is_string()) return a.str() <=> b.str();
  // Numbers from the parser are always finite.
  if (a.number() < b.number()) return std::strong_ordering::less;
  if (a.number() > b.number()) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

ParamValue ParamValue::List(std::vector<Literal> items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  ParamValue v;
  v.value_ = std::move(items);
  return v;
}

std::string ParamValue::ToString() const {
  if (!is_list()) return literal().ToString();
  std::string out = "[";
  for (std::size_t i = 0; i < list().size(); ++i) {
    if (i) out += ", ";
    out += list()[i].ToString();
  }
  out += ']';
  return out;
}

std::strong_ordering operator<=>(const ParamValue& a, const ParamValue& b) {
  if (a.value_.index() != b.value_.index()) {
    return a.value_.index() <=> b.value_.index();
  }
  if (!a.is_list()) return a.literal() <=> b.literal();
  return std::lexicographical_compare_three_way(
      a.list().begin(), a.list().end(), b.list().begin(), b.list().end());
}

bool IsIdentifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  };
  if (!head(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) {
    return head(c) || (c >= '0' && c <= '9');
  });
}

namespace {

std::string FormatCall(const std::string& name, const ParamMap& params) {
  if (params.empty()) return name;
  std::string out = name + "(";
  bool first = true;
  for (const auto& [key, value] : params) {
    if (!first) out += ", ";
    first = false;
    out += key + "=" + value.ToString();
  }
  out += ')';
  return out;
}

}  // namespace

std::string CommandPattern::ToString() const { return FormatCall(name, params); }

std::strong_ordering operator<=>(const CommandPattern& a,
                                 const CommandPattern& b) {
  if (auto c = a.name <=> b.name; c != 0) return c;
  return std::lexicographical_compare_three_way(
      a.params.begin(), a.params.end(), b.params.begin(), b.params.end());
}

std::string CommandInvocation::ToString() const {
  return FormatCall(name, args);
}

bool MatchesCommand(const CommandPattern& pattern,
                    const CommandInvocation& invocation) {
  if (pattern.name != invocation.name) return false;
  for (const auto& [key, want] : pattern.params) {
    auto it = invocation.args.find(key);
    if (it == invocation.args.end() || !(it->second == want)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Nodes.

namespace {

std::shared_ptr<const Node> MakeLeaf(Kind kind, bool nullable) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->nullable = nullable;
  return n;
}

const std::shared_ptr<const Node>& ZeroNode() {
  static const auto* node =
      new std::shared_ptr<const Node>(MakeLeaf(Kind::kZero, false));
  return *node;
}

const std::shared_ptr<const Node>& OneNode() {
  static const auto* node =
      new std::shared_ptr<const Node>(MakeLeaf(Kind::kOne, true));
  return *node;
}

}  // namespace

Policy::Policy() : node_(ZeroNode()) {}

Policy Policy::Zero() { return Policy(ZeroNode()); }
Policy Policy::One() { return Policy(OneNode()); }

Policy Policy::Command(CommandPattern pattern) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::kCommand;
  n->command = std::move(pattern);
  return Policy(std::move(n));
}

Policy Policy::Command(std::string name) {
  return Command(CommandPattern{std::move(name), {}});
}

namespace {

std::shared_ptr<Node> MakeInner(Kind kind, Policy a, Policy b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->size = 1 + a.size() + (kind == Kind::kNeg || kind == Kind::kStar
                                ? 0
                                : b.size());
  n->left = std::move(a);
  n->right = std::move(b);
  return n;
}

}  // namespace

Policy Policy::RawSeq(Policy a, Policy b) {
  auto n = MakeInner(Kind::kSeq, std::move(a), std::move(b));
  n->nullable = n->left.node_->nullable && n->right.node_->nullable;
  return Policy(std::move(n));
}

Policy Policy::RawUnion(Policy a, Policy b) {
  auto n = MakeInner(Kind::kUnion, std::move(a), std::move(b));
  n->nullable = n->left.node_->nullable || n->right.node_->nullable;
  return Policy(std::move(n));
}

Policy Policy::RawIntersect(Policy a, Policy b) {
  auto n = MakeInner(Kind::kIntersect, std::move(a), std::move(b));
  n->nullable = n->left.node_->nullable && n->right.node_->nullable;
  return Policy(std::move(n));
}

Policy Policy::RawNeg(Policy a) {
  auto n = MakeInner(Kind::kNeg, std::move(a), Policy());
  n->nullable = !n->left.node_->nullable;
  return Policy(std::move(n));
}

Policy Policy::RawStar(Policy a) {
  auto n = MakeInner(Kind::kStar, std::move(a), Policy());
  n->nullable = true;
  return Policy(std::move(n));
}

Kind Policy::kind() const { return node_->kind; }
const Policy& Policy::left() const { return node_->left; }
const Policy& Policy::right() const { return node_->right; }
const CommandPattern& Policy::command() const { return node_->command; }
std::size_t Policy::size() const { return node_->size; }
bool Policy::nullable() const { return node_->nullable; }

std::strong_ordering operator<=>(const Policy& a, const Policy& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  if (auto c = a.size() <=> b.size(); c != 0) return c;
  switch (a.kind()) {
    case Kind::kZero:
    case Kind::kOne:
      return std::strong_ordering::equal;
    case Kind::kCommand:
      return a.command() <=> b.command();
    case Kind::kNeg:
    case Kind::kStar:
      return a.left() <=> b.left();
    default:
      if (auto c = a.left() <=> b.left(); c != 0) return c;
      return a.right() <=> b.right();
  }
}

// ---------------------------------------------------------------------------
// Printing.

namespace {

int Precedence(Kind k) {
  switch (k) {
    case Kind::kUnion: return 1;
    case Kind::kIntersect: return 2;
    case Kind::kSeq: return 3;
    case Kind::kNeg: return 4;
    case Kind::kStar: return 5;
    default: return 6;
  }
}

void Print(const Policy& p, std::string& out);

void PrintAt(const Policy& p, int min_precedence, std::string& out) {
  if (Precedence(p.kind()) < min_precedence) {
    out += '(';
    Print(p, out);
    out += ')';
  } else {
    Print(p, out);
  }
}

void PrintBinary(const Policy& p, const char* op, std::string& out) {
  int prec = Precedence(p.kind());
  PrintAt(p.left(), prec, out);
  out += op;
  PrintAt(p.right(), prec + 1, out);
}

void Print(const Policy& p, std::string& out) {
  switch (p.kind()) {
    case Kind::kZero: out += '0'; break;
    case Kind::kOne: out += '1'; break;
    case Kind::kCommand: out += p.command().ToString(); break;
    case Kind::kSeq: PrintBinary(p, " . ", out); break;
    case Kind::kUnion: PrintBinary(p, " + ", out); break;
    case Kind::kIntersect: PrintBinary(p, " & ", out); break;
    case Kind::kNeg:
      out += '!';
      PrintAt(p.left(), Precedence(Kind::kNeg), out);
      break;
    case Kind::kStar:
      PrintAt(p.left(), Precedence(Kind::kStar), out);
      out += '*';
      break;
  }
}

}  // namespace

std::string Policy::ToString() const {
  std::string out;
  Print(*this, out);
  return out;
}

// ---------------------------------------------------------------------------
// Reduction.

namespace {

bool IsTop(const Policy& p) {
  return p.kind() == Kind::kNeg && p.left().is_zero();
}

void Flatten(const Policy& p, Kind kind, std::vector<Policy>& out) {
  if (p.kind() == kind) {
    Flatten(p.left(), kind, out);
    Flatten(p.right(), kind, out);
  } else {
    out.push_back(p);
  }
}

Policy Rebuild(Kind kind, const std::vector<Policy>& ops) {
  Policy acc = ops.front();
  for (std::size_t i = 1; i < ops.size(); ++i) {
    acc = kind == Kind::kUnion ? Policy::RawUnion(acc, ops[i])
                               : Policy::RawIntersect(acc, ops[i]);
  }
  return acc;
}

void SortUnique(std::vector<Policy>& ops) {
  std::sort(ops.begin(), ops.end());
  ops.erase(std::unique(ops.begin(), ops.end()), ops.end());
}

// No invocation can match both patterns.
bool Disjoint(const CommandPattern& a, const CommandPattern& b) {
  if (a.name != b.name) return true;
  for (const auto& [key, value] : a.params) {
    auto it = b.params.find(key);
    if (it != b.params.end() && !(it->second == value)) return true;
  }
  return false;
}

}  // namespace

Policy Top() {
  static const Policy* top = new Policy(Policy::RawNeg(Policy::Zero()));
  return *top;
}

Policy Seq(const Policy& a, const Policy& b) {
  if (a.is_zero() || b.is_zero()) return Policy::Zero();
  if (a.kind() == Kind::kOne) return b;
  if (b.kind() == Kind::kOne) return a;
  if (a.kind() == Kind::kSeq) return Seq(a.left(), Seq(a.right(), b));
  return Policy::RawSeq(a, b);
}

Policy Union(const Policy& a, const Policy& b) {
  std::vector<Policy> ops;
  Flatten(a, Kind::kUnion, ops);
  Flatten(b, Kind::kUnion, ops);
  std::erase_if(ops, [](const Policy& p) { return p.is_zero(); });
  if (std::any_of(ops.begin(), ops.end(), IsTop)) return Top();
  SortUnique(ops);
  bool other_nullable = std::any_of(ops.begin(), ops.end(), [](const Policy& p) {
    return p.kind() != Kind::kOne && Emptiness(p);
  });
  if (other_nullable) {
    std::erase_if(ops, [](const Policy& p) { return p.kind() == Kind::kOne; });
  }
  if (ops.empty()) return Policy::Zero();
  return Rebuild(Kind::kUnion, ops);
}

Policy Intersect(const Policy& a, const Policy& b) {
  std::vector<Policy> ops;
  Flatten(a, Kind::kIntersect, ops);
  Flatten(b, Kind::kIntersect, ops);
  if (std::any_of(ops.begin(), ops.end(),
                  [](const Policy& p) { return p.is_zero(); })) {
    return Policy::Zero();
  }
  std::erase_if(ops, IsTop);
  SortUnique(ops);
  if (ops.empty()) return Top();
  bool has_one = std::any_of(ops.begin(), ops.end(), [](const Policy& p) {
    return p.kind() == Kind::kOne;
  });
  if (has_one) {
    bool all_nullable = std::all_of(ops.begin(), ops.end(), Emptiness);
    return all_nullable ? Policy::One() : Policy::Zero();
  }
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].kind() != Kind::kCommand) continue;
    for (std::size_t j = i + 1; j < ops.size(); ++j) {
      if (ops[j].kind() == Kind::kCommand &&
          Disjoint(ops[i].command(), ops[j].command())) {
        return Policy::Zero();
      }
    }
  }
  return Rebuild(Kind::kIntersect, ops);
}

Policy Neg(const Policy& a) {
  if (a.kind() == Kind::kNeg) return a.left();
  return Policy::RawNeg(a);
}

Policy Star(const Policy& a) {
  switch (a.kind()) {
    case Kind::kStar: return a;
    case Kind::kZero:
    case Kind::kOne: return Policy::One();
    default: return Policy::RawStar(a);
  }
}

bool Emptiness(const Policy& p) { return p.nullable(); }

namespace {

Policy ReduceOnce(const Policy& p) {
  switch (p.kind()) {
    case Kind::kZero:
    case Kind::kOne:
    case Kind::kCommand:
      return p;
    case Kind::kSeq: return Seq(ReduceOnce(p.left()), ReduceOnce(p.right()));
    case Kind::kUnion:
      return Union(ReduceOnce(p.left()), ReduceOnce(p.right()));
    case Kind::kIntersect:
      return Intersect(ReduceOnce(p.left()), ReduceOnce(p.right()));
    case Kind::kNeg: return Neg(ReduceOnce(p.left()));
    case Kind::kStar: return Star(ReduceOnce(p.left()));
  }
  return p;
}

}  // namespace

Policy Reduce(const Policy& p) {
  Policy current = ReduceOnce(p);
  // Each pass is size non-increasing; a handful of passes reaches the
  // fixed point for any policy the rewrites can shrink.
  for (int i = 0; i < 16; ++i) {
    Policy next = ReduceOnce(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

Policy Derive(const Policy& p, const CommandInvocation& c) {
  switch (p.kind()) {
    case Kind::kZero:
    case Kind::kOne:
      return Policy::Zero();
    case Kind::kCommand:
      return MatchesCommand(p.command(), c) ? Policy::One() : Policy::Zero();
    case Kind::kSeq: {
      Policy head = Seq(Derive(p.left(), c), p.right());
      if (!Emptiness(p.left())) return head;
      return Union(head, Derive(p.right(), c));
    }
    case Kind::kUnion:
      return Union(Derive(p.left(), c), Derive(p.right(), c));
    case Kind::kIntersect:
      return Intersect(Derive(p.left(), c), Derive(p.right(), c));
    case Kind::kStar:
      return Seq(Derive(p.left(), c), p);
    case Kind::kNeg:
      return Neg(Derive(p.left(), c));
  }
  return Policy::Zero();
}

bool AcceptsTrace(const Policy& p, const std::vector<CommandInvocation>& trace) {
  Policy current = p;
  for (const auto& c : trace) current = Derive(current, c);
  return Emptiness(current);
}

}  // namespace polifed::policy
