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

#include <random>
#include <set>

#include "gtest/gtest.h"
#include "polifed/common/error.h"
#include "polifed/policy/macros.h"
#include "polifed/policy/parser.h"
#include "polifed/policy/policy.h"
#include "support/automaton_oracle.h"
#include "support/policy_gen.h"

namespace polifed::policy {
namespace {

using testing::AllWords;
using testing::CompileToDfa;
using testing::RandomPolicy;
using testing::TestAlphabet;
using testing::ToTrace;

Policy Cmd(const char* name) { return Policy::Command(name); }
CommandInvocation Inv(const char* text) { return ParseInvocation(text); }
Policy P(const char* text) { return Reduce(ParsePolicy(text)); }

TEST(ParsePolicyTest, SequenceIsLeftAssociative) {
  Policy p = ParsePolicy("get_data . runFL . return");
  Policy want = Policy::RawSeq(Policy::RawSeq(Cmd("get_data"), Cmd("runFL")),
                               Cmd("return"));
  EXPECT_EQ(p, want);
}

TEST(ParsePolicyTest, ZeroLiteral) {
  EXPECT_EQ(ParsePolicy("0").kind(), Kind::kZero);
  EXPECT_EQ(ParsePolicy(" 1 ").kind(), Kind::kOne);
}

TEST(ParsePolicyTest, ListValuedParameter) {
  Policy p = ParsePolicy("filter(sensors=['mic','loc'])");
  ASSERT_EQ(p.kind(), Kind::kCommand);
  const CommandPattern& c = p.command();
  EXPECT_EQ(c.name, "filter");
  ASSERT_EQ(c.params.size(), 1u);
  const ParamValue& v = c.params.at("sensors");
  ASSERT_TRUE(v.is_list());
  EXPECT_EQ(v.list().size(), 2u);
}

TEST(ParsePolicyTest, Precedence) {
  // '.' binds tighter than '&', which binds tighter than '+'.
  Policy p = ParsePolicy("a . b & c + d");
  Policy want = Policy::RawUnion(
      Policy::RawIntersect(Policy::RawSeq(Cmd("a"), Cmd("b")), Cmd("c")),
      Cmd("d"));
  EXPECT_EQ(p, want);
  EXPECT_EQ(ParsePolicy("!a*"), Policy::RawNeg(Policy::RawStar(Cmd("a"))));
  EXPECT_EQ(ParsePolicy("(a + b)*"),
            Policy::RawStar(Policy::RawUnion(Cmd("a"), Cmd("b"))));
}

TEST(ParsePolicyTest, ParameterLiterals) {
  Policy p = ParsePolicy(
      "get_data(data_type=\"reddit\", n=3, gf=GF, tags=[], esc='a\\'b')");
  const auto& params = p.command().params;
  EXPECT_EQ(params.at("data_type").literal(), Literal::String("reddit"));
  EXPECT_EQ(params.at("n").literal(), Literal::Number(3));
  EXPECT_EQ(params.at("gf").literal(), Literal::String("GF"));
  EXPECT_TRUE(params.at("tags").list().empty());
  EXPECT_EQ(params.at("esc").literal(), Literal::String("a'b"));
}

TEST(ParsePolicyTest, ErrorsCarryOffsets) {
  try {
    ParsePolicy("a . . b");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  try {
    ParsePolicy("(a . b");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  try {
    ParsePolicy("a . b)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  try {
    ParsePolicy("f(x='a\\qb')");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 6u);
    EXPECT_NE(std::string(e.what()).find("escape"), std::string::npos);
  }
  EXPECT_THROW(ParsePolicy(""), ParseError);
  EXPECT_THROW(ParsePolicy("f(x=1, x=2)"), ParseError);
  EXPECT_THROW(ParsePolicy("10"), ParseError);
}

TEST(ParsePolicyTest, PrintParseRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    Policy p = RandomPolicy(rng, 6);
    EXPECT_EQ(ParsePolicy(p.ToString()), p) << p.ToString();
    Policy r = Reduce(p);
    EXPECT_EQ(ParsePolicy(r.ToString()), r) << r.ToString();
  }
  Policy q = ParsePolicy("get_data(data_type='MPU') . filter(sensors=['mic', 'loc'])"
                         " . enforce_dp_budget(eps=1.5) . return");
  EXPECT_EQ(ParsePolicy(q.ToString()), q);
}

TEST(EmptinessTest, StructuralRules) {
  EXPECT_TRUE(Emptiness(Policy::RawStar(Cmd("a"))));
  EXPECT_TRUE(Emptiness(Policy::RawStar(Policy::Zero())));
  EXPECT_FALSE(Emptiness(Cmd("a")));
  EXPECT_TRUE(Emptiness(Policy::RawNeg(Policy::Zero())));
  EXPECT_FALSE(Emptiness(Policy::Zero()));
  EXPECT_TRUE(Emptiness(Policy::One()));
  EXPECT_FALSE(Emptiness(ParsePolicy("a* . b")));
  EXPECT_TRUE(Emptiness(ParsePolicy("a* + b")));
  EXPECT_FALSE(Emptiness(ParsePolicy("a* & b")));
}

TEST(DeriveTest, Examples) {
  EXPECT_EQ(Derive(P("fetch_data . return"), Inv("fetch_data")), P("return"));
  EXPECT_EQ(Derive(Cmd("c"), Inv("c")), Policy::One());
  EXPECT_EQ(Derive(Cmd("c"), Inv("d")), Policy::Zero());
  EXPECT_EQ(Derive(Policy::Zero(), Inv("c")), Policy::Zero());
  EXPECT_EQ(Derive(Policy::One(), Inv("c")), Policy::Zero());
  EXPECT_EQ(Derive(P("a* . b"), Inv("a")), P("a* . b"));
  EXPECT_EQ(Derive(P("a* . b"), Inv("b")), Policy::One());
  EXPECT_EQ(Derive(P("!a"), Inv("a")), P("!1"));
}

TEST(MatchesCommandTest, ParameterSemantics) {
  auto pat = [](const char* s) { return ParsePolicy(s).command(); };
  EXPECT_TRUE(MatchesCommand(pat("filter(sensors=['mic','loc'])"),
                             Inv("filter(sensors=['loc','mic'])")));
  EXPECT_FALSE(MatchesCommand(pat("filter(sensors=['mic'])"),
                              Inv("filter(sensors=['mic','loc'])")));
  EXPECT_TRUE(MatchesCommand(pat("get_data"),
                             Inv("get_data(data_type=\"reddit\")")));
  EXPECT_FALSE(MatchesCommand(pat("get_data(data_type='reddit')"),
                              Inv("get_data")));
  EXPECT_FALSE(MatchesCommand(pat("get_data"), Inv("get_dat")));
  EXPECT_TRUE(MatchesCommand(pat("enforce_dp_budget(eps=1)"),
                             Inv("enforce_dp_budget(eps=1.0, group='g')")));
  EXPECT_FALSE(MatchesCommand(pat("enforce_dp_budget(eps=1)"),
                              Inv("enforce_dp_budget(eps='1')")));
}

TEST(ReduceTest, Examples) {
  Policy p = Cmd("p");
  EXPECT_EQ(Reduce(Policy::RawSeq(Policy::One(), p)), p);
  EXPECT_EQ(Reduce(Policy::RawUnion(p, p)), p);
  EXPECT_EQ(Reduce(Policy::RawIntersect(Policy::Zero(), p)), Policy::Zero());
  EXPECT_EQ(Reduce(Policy::RawSeq(Policy::Zero(), p)), Policy::Zero());
  EXPECT_EQ(Reduce(Policy::RawSeq(p, Policy::Zero())), Policy::Zero());
  EXPECT_EQ(Reduce(Policy::RawUnion(Policy::Zero(), p)), p);
  EXPECT_EQ(Reduce(Policy::RawIntersect(p, p)), p);
  EXPECT_EQ(Reduce(Policy::RawStar(Policy::RawStar(p))), Policy::RawStar(p));
  EXPECT_EQ(Reduce(Policy::RawNeg(Policy::RawNeg(p))), p);
  EXPECT_EQ(Reduce(ParsePolicy("(a + b) + (b + a)")), Reduce(ParsePolicy("a + b")));
}

// True if any node matches a shape the reduction rules eliminate.
bool HasReducibleNode(const Policy& p) {
  auto is = [](const Policy& x, Kind k) { return x.kind() == k; };
  switch (p.kind()) {
    case Kind::kZero:
    case Kind::kOne:
    case Kind::kCommand:
      return false;
    case Kind::kSeq:
      if (p.left().is_zero() || p.right().is_zero() || is(p.left(), Kind::kOne))
        return true;
      break;
    case Kind::kUnion:
      if (p.left() == p.right() || p.left().is_zero() || p.right().is_zero())
        return true;
      break;
    case Kind::kIntersect:
      if (p.left() == p.right() || p.left().is_zero() || p.right().is_zero())
        return true;
      break;
    case Kind::kStar:
      if (is(p.left(), Kind::kStar)) return true;
      return HasReducibleNode(p.left());
    case Kind::kNeg:
      if (is(p.left(), Kind::kNeg)) return true;
      return HasReducibleNode(p.left());
  }
  return HasReducibleNode(p.left()) || HasReducibleNode(p.right());
}

TEST(ReduceTest, NormalFormAndSize) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 3000; ++i) {
    Policy p = RandomPolicy(rng, 6);
    Policy r = Reduce(p);
    EXPECT_FALSE(HasReducibleNode(r)) << p.ToString() << " -> " << r.ToString();
    EXPECT_LE(r.size(), p.size());
    EXPECT_EQ(Reduce(r), r);
  }
}

TEST(MacroTest, RunFlExpandsToTrainingCycle) {
  Policy p = ExpandMacros(ParsePolicy("runFL"), DefaultMacroTable());
  EXPECT_EQ(p, ParsePolicy("train_local . accumulate* . "
                           "(train_local . accumulate* + average*)*"));
  Policy full = Reduce(ExpandMacros(ParsePolicy("get_data . runFL . return"),
                                    DefaultMacroTable()));
  EXPECT_TRUE(AcceptsTrace(full, ParseTrace("get_data, train_local, accumulate, "
                                            "average, train_local, accumulate, "
                                            "accumulate, average, return")));
  EXPECT_FALSE(AcceptsTrace(full, ParseTrace("get_data, average, return")));
}

TEST(MacroTest, MacroFreePolicyUnchanged) {
  Policy p = ParsePolicy("get_data . filter(sensors=['mic']) . return");
  EXPECT_EQ(ExpandMacros(p, DefaultMacroTable()), p);
}

TEST(MacroTest, UnknownMacroFails) {
  try {
    ExpandMacros(ParsePolicy("get_data . runXYZ . return"), DefaultMacroTable());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  MacroTable t;
  EXPECT_THROW(t.Define("runA", ParsePolicy("a . runFL")), Error);
  EXPECT_THROW(t.Define("train", ParsePolicy("a")), Error);
}

TEST(AcceptsTraceTest, Examples) {
  EXPECT_TRUE(AcceptsTrace(P("a . b"), ToTrace({0, 1})));
  EXPECT_FALSE(AcceptsTrace(P("a . b"), ToTrace({1})));
  Policy p = P("(a + b)* . c");
  std::vector<int> word = {0, 1, 0, 2};
  EXPECT_TRUE(AcceptsTrace(p, ToTrace(word)));
  EXPECT_TRUE(CompileToDfa(ParsePolicy("(a + b)* . c"), TestAlphabet()).Accepts(word));
}

TEST(DerivativePropertyTest, AgreesWithAutomatonOracle) {
  std::mt19937_64 rng(2026);
  auto words = AllWords(4, 5);
  for (int i = 0; i < 300; ++i) {
    Policy raw = RandomPolicy(rng, 6);
    Policy p = Reduce(raw);
    testing::Dfa dfa = CompileToDfa(raw, TestAlphabet());
    EXPECT_EQ(AcceptsTrace(p, {}), Emptiness(p));
    for (const auto& w : words) {
      bool want = dfa.Accepts(w);
      ASSERT_EQ(AcceptsTrace(p, ToTrace(w)), want) << raw.ToString();
      ASSERT_EQ(AcceptsTrace(raw, ToTrace(w)), want) << raw.ToString();
    }
  }
}

TEST(DerivativePropertyTest, SizeBoundConstant) {
  // Largest observed ratio |derive(p, c)| / |p| over reduced policies.
  constexpr double kMaxGrowth = 4.0;
  std::mt19937_64 rng(99);
  double worst = 0;
  for (int i = 0; i < 5000; ++i) {
    Policy p = Reduce(RandomPolicy(rng, 6));
    for (const auto& name : TestAlphabet()) {
      Policy d = Derive(p, CommandInvocation(name));
      worst = std::max(worst, double(d.size()) / double(p.size()));
    }
  }
  EXPECT_LE(worst, kMaxGrowth);
}

}  // namespace
}  // namespace polifed::policy
