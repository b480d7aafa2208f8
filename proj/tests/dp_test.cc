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

#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "json.hpp"
#include "polifed/common/error.h"
#include "polifed/dp/ledger.h"
#include "polifed/dp/rdp.h"
#include "support/calibration.h"
#include "support/rdp_oracle.h"

namespace polifed::dp {
namespace {

using testing::kCalibratedZ;
using testing::kTableDelta;
using testing::kTableSamplingRate;

TEST(RdpTest, FullSamplingIsGaussianClosedForm) {
  for (double z : {0.3, 1.0, 2.5}) {
    for (double a : DefaultOrders()) {
      EXPECT_EQ(RdpOneStep(1.0, z, a), a / (2 * z * z));
    }
  }
}

TEST(RdpTest, StepsComposeAdditively) {
  const auto& o = DefaultOrders();
  auto one = RdpSubsampledGaussian(1e-3, 0.8, 1, o);
  auto two = RdpSubsampledGaussian(1e-3, 0.8, 2, o);
  for (std::size_t i = 0; i < o.size(); ++i) EXPECT_EQ(two[i], 2 * one[i]);
}

TEST(RdpTest, MonotoneInStepsRateAndNoise) {
  for (double a : {1.5, 4.0, 32.0}) {
    EXPECT_LT(RdpOneStep(1e-3, 1.0, a), RdpOneStep(1e-2, 1.0, a));
    EXPECT_GT(RdpOneStep(1e-2, 0.7, a), RdpOneStep(1e-2, 1.4, a));
  }
  const auto& o = DefaultOrders();
  double prev = 0;
  for (std::int64_t steps : {1, 10, 100, 1000}) {
    double e = EpsilonFromRdp(RdpSubsampledGaussian(1e-2, 1.0, steps, o), o, 1e-5).epsilon;
    EXPECT_GT(e, prev);
    prev = e;
  }
}

TEST(RdpTest, RejectsInvalidArguments) {
  EXPECT_THROW(RdpOneStep(0.0, 1.0, 2.0), Error);
  EXPECT_THROW(RdpOneStep(1.5, 1.0, 2.0), Error);
  EXPECT_THROW(RdpOneStep(0.1, 0.0, 2.0), Error);
  EXPECT_THROW(RdpOneStep(0.1, 1.0, 1.0), Error);
  EXPECT_THROW(RdpSubsampledGaussian(0.1, 1.0, 0, DefaultOrders()), Error);
}

TEST(RdpTest, AgreesWithIntegralOracle) {
  const auto& o = DefaultOrders();
  for (double q : {1e-4, 1e-3, 1e-2}) {
    for (double z : {0.5, 1.0, 2.0}) {
      std::vector<double> oracle_step;
      for (double a : o) oracle_step.push_back(testing::OracleRdpOneStep(q, z, a));
      for (std::int64_t steps : {1, 100, 1000}) {
        auto lib = RdpSubsampledGaussian(q, z, steps, o);
        std::vector<double> ref;
        for (double v : oracle_step) ref.push_back(steps * v);
        for (std::size_t i = 0; i < o.size(); ++i) {
          EXPECT_LE(std::abs(lib[i] - ref[i]), 0.01 * ref[i])
              << "q=" << q << " z=" << z << " steps=" << steps << " alpha=" << o[i];
        }
        double e_lib = EpsilonFromRdp(lib, o, 1e-8).epsilon;
        double e_ref = EpsilonFromRdp(ref, o, 1e-8).epsilon;
        EXPECT_LE(std::abs(e_lib - e_ref), 0.01 * e_ref);
      }
    }
  }
}

TEST(EpsilonFromRdpTest, ZeroMechanismIsConversionFloor) {
  const auto& o = DefaultOrders();
  std::vector<double> zero(o.size(), 0.0);
  EpsilonResult r = EpsilonFromRdp(zero, o, 1e-8);
  EXPECT_DOUBLE_EQ(r.epsilon, std::log(1e8) / (512 - 1));
  EXPECT_EQ(r.best_order, 512);
}

TEST(EpsilonFromRdpTest, DoublingNeverDecreases) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 3);
  const auto& o = DefaultOrders();
  for (int t = 0; t < 200; ++t) {
    std::vector<double> r(o.size()), d(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
      r[i] = u(rng) * o[i];
      d[i] = 2 * r[i];
    }
    EXPECT_GE(EpsilonFromRdp(d, o, 1e-6).epsilon, EpsilonFromRdp(r, o, 1e-6).epsilon);
  }
}

TEST(EpsilonFromRdpTest, RejectsEmptyOrders) {
  EXPECT_THROW(EpsilonFromRdp({}, {}, 1e-8), Error);
  std::vector<double> o = {2.0};
  std::vector<double> r = {0.0};
  EXPECT_THROW(EpsilonFromRdp(r, o, 0.0), Error);
}

TEST(CalibrationTest, OracleBisectionReproducesFrozenMultiplier) {
  double lo = 0.1, hi = 20;
  for (int i = 0; i < 60; ++i) {
    double mid = (lo + hi) / 2;
    if (testing::OracleEpsilon(kTableSamplingRate, mid, 1000, kTableDelta) > 0.82) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  EXPECT_NEAR(lo, kCalibratedZ, 1e-9);

  PrivacyLedger ledger(kTableDelta);
  ledger.ChargeRounds("Gr1", kTableSamplingRate, kCalibratedZ, 1000);
  EXPECT_NEAR(ledger.Spent("Gr1").epsilon, 0.82, 1e-6);
}

TEST(LedgerTest, UnchargedGroupSpendsNothing) {
  PrivacyLedger ledger;
  ledger.RegisterGroup("Gr2");
  ledger.ChargeRounds("Gr1", kTableSamplingRate, kCalibratedZ, 1000);
  EXPECT_EQ(ledger.Spent("Gr2").epsilon, 0.0);
  EXPECT_GT(ledger.Spent("Gr1").epsilon, 0.0);
  EXPECT_THROW(ledger.Spent("Gr3"), Error);
}

TEST(LedgerTest, ChargeOrderDoesNotMatter) {
  PrivacyLedger a, b;
  a.ChargeRound("g", 1e-3, 1.0);
  a.ChargeRound("g", 1e-2, 2.0);
  a.ChargeRound("g", 1e-3, 1.0);
  b.ChargeRound("g", 1e-3, 1.0);
  b.ChargeRound("g", 1e-3, 1.0);
  b.ChargeRound("g", 1e-2, 2.0);
  EXPECT_EQ(a.Spent("g").epsilon, b.Spent("g").epsilon);
  EXPECT_EQ(a.rounds("g"), 3);
}

TEST(LedgerTest, OtherGroupsDoNotAffectSpending) {
  PrivacyLedger ledger;
  ledger.ChargeRounds("A", 1e-3, 1.1, 50);
  double before = ledger.Spent("A").epsilon;
  ledger.ChargeRounds("B", 1e-2, 0.5, 500);
  EXPECT_EQ(ledger.Spent("A").epsilon, before);
}

TEST(LedgerTest, SpendingGrowsWithRoundsAndShrinksWithNoise) {
  PrivacyLedger ledger;
  double prev = 0;
  for (int r = 0; r < 5; ++r) {
    ledger.ChargeRounds("g", 1e-2, 1.0, 20);
    double e = ledger.Spent("g").epsilon;
    EXPECT_GT(e, prev);
    prev = e;
  }
  PrivacyLedger lo, hi;
  lo.ChargeRounds("g", 1e-2, 0.8, 100);
  hi.ChargeRounds("g", 1e-2, 1.6, 100);
  EXPECT_GT(lo.Spent("g").epsilon, hi.Spent("g").epsilon);
}

TEST(LedgerTest, JsonLinesRoundTrip) {
  PrivacyLedger ledger;
  ledger.ChargeRound("Gr1", 0.01, 1.5);
  ledger.ChargeRound("Gr2", 0.02, 0.9);
  ledger.ChargeRound("Gr1", 0.01, 1.5);
  std::string text = ledger.ToJsonLines();
  auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(first["group"], "Gr1");
  EXPECT_EQ(first["round_index"], 0);
  PrivacyLedger back = PrivacyLedger::FromJsonLines(text);
  EXPECT_EQ(back.ToJsonLines(), text);
  EXPECT_EQ(back.Spent("Gr1").epsilon, ledger.Spent("Gr1").epsilon);
  EXPECT_EQ(back.rounds("Gr2"), 1);
  EXPECT_THROW(PrivacyLedger::FromJsonLines("{\"group\":\"g\"}\n"), Error);
  EXPECT_THROW(PrivacyLedger::FromJsonLines(
                   "{\"group\":\"g\",\"q\":0.1,\"z\":1,\"round_index\":3}\n"),
               Error);
}

TEST(EnforceDpBudgetTest, PassAndFail) {
  PrivacyLedger ledger(kTableDelta);
  ledger.ChargeRounds("Gr1", kTableSamplingRate, kCalibratedZ, 1000);
  BudgetCheck ok = EnforceDpBudget(ledger, "Gr1", 1.0);
  EXPECT_TRUE(ok.pass);
  EXPECT_NEAR(ok.spent, 0.82, 1e-6);
  BudgetCheck tight = EnforceDpBudget(ledger, "Gr1", 0.8);
  EXPECT_FALSE(tight.pass);
  EXPECT_EQ(tight.max_epsilon, 0.8);
  EXPECT_THROW(EnforceDpBudget(ledger, "nobody", 1.0), Error);
  auto report = nlohmann::json::parse(SpentReportJson(ledger, "Gr1"));
  EXPECT_NEAR(report["epsilon"].get<double>(), 0.82, 1e-6);
  EXPECT_EQ(report["delta"].get<double>(), 1e-8);
  EXPECT_EQ(report["best_order"].get<double>(), 24);
}

}  // namespace
}  // namespace polifed::dp
