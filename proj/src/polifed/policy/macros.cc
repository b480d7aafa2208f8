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

#include "polifed/policy/macros.h"

#include "polifed/common/error.h"
#include "polifed/policy/parser.h"

namespace polifed::policy {
namespace {

bool ContainsMacro(const Policy& p) {
  switch (p.kind()) {
    case Kind::kCommand: return MacroTable::IsMacroName(p.command().name);
    case Kind::kZero:
    case Kind::kOne: return false;
    case Kind::kNeg:
    case Kind::kStar: return ContainsMacro(p.left());
    default: return ContainsMacro(p.left()) || ContainsMacro(p.right());
  }
}

}  // namespace

bool MacroTable::IsMacroName(std::string_view name) {
  return name.size() > 3 && name.substr(0, 3) == "run" && name[3] >= 'A' &&
         name[3] <= 'Z';
}

void MacroTable::Define(const std::string& name, const Policy& body) {
  if (!IsMacroName(name)) {
    Fail(ErrorCode::kInvalidArgument, "not a macro name: " + name);
  }
  if (ContainsMacro(body)) {
    Fail(ErrorCode::kInvalidArgument, "macro body of " + name +
                                          " references another macro");
  }
  entries_.insert_or_assign(name, body);
}

const Policy* MacroTable::Find(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

const MacroTable& DefaultMacroTable() {
  static const MacroTable* table = [] {
    auto* t = new MacroTable;
    t->Define("runFL",
              ParsePolicy("train_local . accumulate* . "
                          "(train_local . accumulate* + average*)*"));
    t->Define("runFLDP",
              ParsePolicy("train_local_dp . accumulate* . "
                          "(train_local_dp . accumulate* + average*)*"));
    return t;
  }();
  return *table;
}

Policy ExpandMacros(const Policy& p, const MacroTable& table) {
  switch (p.kind()) {
    case Kind::kZero:
    case Kind::kOne:
      return p;
    case Kind::kCommand: {
      if (!MacroTable::IsMacroName(p.command().name)) return p;
      const Policy* body = table.Find(p.command().name);
      if (body == nullptr) {
        Fail(ErrorCode::kInvalidArgument,
             "unknown macro '" + p.command().name + "'");
      }
      return *body;
    }
    case Kind::kSeq:
      return Policy::RawSeq(ExpandMacros(p.left(), table),
                            ExpandMacros(p.right(), table));
    case Kind::kUnion:
      return Policy::RawUnion(ExpandMacros(p.left(), table),
                              ExpandMacros(p.right(), table));
    case Kind::kIntersect:
      return Policy::RawIntersect(ExpandMacros(p.left(), table),
                                  ExpandMacros(p.right(), table));
    case Kind::kNeg: return Policy::RawNeg(ExpandMacros(p.left(), table));
    case Kind::kStar: return Policy::RawStar(ExpandMacros(p.left(), table));
  }
  return p;
}

Policy CompilePolicy(std::string_view text, const MacroTable& table) {
  return Reduce(ExpandMacros(ParsePolicy(text), table));
}

}  // namespace polifed::policy
