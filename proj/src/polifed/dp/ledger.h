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

#ifndef POLIFED_DP_LEDGER_H_
#define POLIFED_DP_LEDGER_H_

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "polifed/dp/rdp.h"

namespace polifed::dp {

inline constexpr double kDefaultDelta = 1e-8;

struct RoundCharge {
  double q = 0;
  double z = 0;
  std::int64_t rounds = 0;
};

// One persisted line of the ledger.
struct ChargeRecord {
  std::string group;
  double q = 0;
  double z = 0;
  std::int64_t round_index = 0;
};

// Append-only per-group record of privacy charges. Single writer; Spent()
// may be called concurrently with other readers.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(double target_delta = kDefaultDelta,
                         std::vector<double> orders = DefaultOrders());
  PrivacyLedger(const PrivacyLedger& other);
  PrivacyLedger& operator=(const PrivacyLedger& other);

  double target_delta() const { return target_delta_; }
  const std::vector<double>& orders() const { return orders_; }

  // Makes a group known with zero spending.
  void RegisterGroup(const std::string& group);
  bool HasGroup(const std::string& group) const;
  std::vector<std::string> groups() const;

  void ChargeRound(const std::string& group, double q, double z);
  void ChargeRounds(const std::string& group, double q, double z, std::int64_t count);

  // Charges grouped by (q, z) in ascending order. Throws UnknownGroup.
  std::vector<RoundCharge> charges(const std::string& group) const;
  std::int64_t rounds(const std::string& group) const;

  // Spent epsilon at target_delta (or `delta`). A group with no charges
  // reports epsilon 0. Throws UnknownGroup.
  EpsilonResult Spent(const std::string& group) const;
  EpsilonResult Spent(const std::string& group, double delta) const;

  const std::vector<ChargeRecord>& records() const { return records_; }

  // One JSON object per line: {"group", "q", "z", "round_index"}.
  std::string ToJsonLines() const;
  static PrivacyLedger FromJsonLines(const std::string& text,
                                     double target_delta = kDefaultDelta);

 private:
  const std::vector<double>& StepRdp(double q, double z) const;

  double target_delta_;
  std::vector<double> orders_;
  std::map<std::string, std::map<std::pair<double, double>, std::int64_t>> groups_;
  std::vector<ChargeRecord> records_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::pair<double, double>, std::vector<double>> cache_;
};

struct BudgetCheck {
  bool pass = false;
  std::string group;
  double spent = 0;
  double max_epsilon = 0;
  double delta = 0;
  double best_order = 0;
};

// pass iff Spent(group, delta) <= max_epsilon. Throws UnknownGroup.
BudgetCheck EnforceDpBudget(const PrivacyLedger& ledger, const std::string& group,
                            double max_epsilon, double delta);
BudgetCheck EnforceDpBudget(const PrivacyLedger& ledger, const std::string& group,
                            double max_epsilon);

// {"group", "epsilon", "delta", "best_order"} as a JSON string.
std::string SpentReportJson(const PrivacyLedger& ledger, const std::string& group);

}  // namespace polifed::dp

#endif  // POLIFED_DP_LEDGER_H_
