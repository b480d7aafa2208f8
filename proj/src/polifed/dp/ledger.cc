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

#include "polifed/dp/ledger.h"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "polifed/common/error.h"

namespace polifed::dp {

PrivacyLedger::PrivacyLedger(double target_delta, std::vector<double> orders)
    : target_delta_(target_delta), orders_(std::move(orders)) {
  if (!(target_delta > 0 && target_delta < 1)) {
    Fail(ErrorCode::kInvalidArgument, "delta must be in (0, 1)");
  }
  if (orders_.empty()) Fail(ErrorCode::kInvalidArgument, "no RDP orders");
}

PrivacyLedger::PrivacyLedger(const PrivacyLedger& other)
    : target_delta_(other.target_delta_),
      orders_(other.orders_),
      groups_(other.groups_),
      records_(other.records_) {}

PrivacyLedger& PrivacyLedger::operator=(const PrivacyLedger& other) {
  if (this == &other) return *this;
  target_delta_ = other.target_delta_;
  orders_ = other.orders_;
  groups_ = other.groups_;
  records_ = other.records_;
  std::lock_guard lock(cache_mu_);
  cache_.clear();
  return *this;
}

void PrivacyLedger::RegisterGroup(const std::string& group) {
  if (group.empty()) Fail(ErrorCode::kInvalidArgument, "empty group id");
  groups_.try_emplace(group);
}

bool PrivacyLedger::HasGroup(const std::string& group) const {
  return groups_.contains(group);
}

std::vector<std::string> PrivacyLedger::groups() const {
  std::vector<std::string> out;
  for (const auto& [g, _] : groups_) out.push_back(g);
  return out;
}

void PrivacyLedger::ChargeRound(const std::string& group, double q, double z) {
  ChargeRounds(group, q, z, 1);
}

void PrivacyLedger::ChargeRounds(const std::string& group, double q, double z,
                                 std::int64_t count) {
  if (!(q > 0 && q <= 1)) Fail(ErrorCode::kInvalidArgument, "sampling rate must be in (0, 1]");
  if (!(z > 0) || !std::isfinite(z)) {
    Fail(ErrorCode::kInvalidArgument, "noise multiplier must be positive");
  }
  if (count < 0) Fail(ErrorCode::kInvalidArgument, "negative round count");
  RegisterGroup(group);
  std::int64_t next = rounds(group);
  groups_[group][{q, z}] += count;
  for (std::int64_t i = 0; i < count; ++i) records_.push_back({group, q, z, next + i});
}

std::vector<RoundCharge> PrivacyLedger::charges(const std::string& group) const {
  auto it = groups_.find(group);
  if (it == groups_.end()) Fail(ErrorCode::kUnknownGroup, "unknown group '" + group + "'");
  std::vector<RoundCharge> out;
  for (const auto& [key, n] : it->second) out.push_back({key.first, key.second, n});
  return out;
}

std::int64_t PrivacyLedger::rounds(const std::string& group) const {
  std::int64_t total = 0;
  for (const auto& c : charges(group)) total += c.rounds;
  return total;
}

const std::vector<double>& PrivacyLedger::StepRdp(double q, double z) const {
  std::lock_guard lock(cache_mu_);
  auto it = cache_.find({q, z});
  if (it == cache_.end()) {
    it = cache_.emplace(std::pair{q, z}, RdpSubsampledGaussian(q, z, 1, orders_)).first;
  }
  return it->second;
}

EpsilonResult PrivacyLedger::Spent(const std::string& group) const {
  return Spent(group, target_delta_);
}

EpsilonResult PrivacyLedger::Spent(const std::string& group, double delta) const {
  std::vector<RoundCharge> cs = charges(group);
  std::vector<double> total(orders_.size(), 0.0);
  bool any = false;
  for (const auto& c : cs) {
    if (c.rounds == 0) continue;
    any = true;
    const auto& step = StepRdp(c.q, c.z);
    for (std::size_t i = 0; i < total.size(); ++i) {
      total[i] += static_cast<double>(c.rounds) * step[i];
    }
  }
  if (!any) return {0.0, 0.0};
  return EpsilonFromRdp(total, orders_, delta);
}

std::string PrivacyLedger::ToJsonLines() const {
  std::string out;
  for (const auto& r : records_) {
    nlohmann::json j = {{"group", r.group}, {"q", r.q}, {"z", r.z},
                        {"round_index", r.round_index}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

PrivacyLedger PrivacyLedger::FromJsonLines(const std::string& text, double target_delta) {
  PrivacyLedger ledger(target_delta);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::string group = j.at("group").get<std::string>();
      std::int64_t index = j.at("round_index").get<std::int64_t>();
      if (ledger.HasGroup(group) && index != ledger.rounds(group)) {
        Fail(ErrorCode::kIo, "round_index out of sequence");
      }
      if (!ledger.HasGroup(group) && index != 0) {
        Fail(ErrorCode::kIo, "round_index out of sequence");
      }
      ledger.ChargeRound(group, j.at("q").get<double>(), j.at("z").get<double>());
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kIo, "ledger line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      Fail(ErrorCode::kIo, "ledger line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ledger;
}

BudgetCheck EnforceDpBudget(const PrivacyLedger& ledger, const std::string& group,
                            double max_epsilon, double delta) {
  if (!(max_epsilon > 0)) Fail(ErrorCode::kInvalidArgument, "max_epsilon must be positive");
  EpsilonResult spent = ledger.Spent(group, delta);
  return {spent.epsilon <= max_epsilon, group, spent.epsilon, max_epsilon, delta,
          spent.best_order};
}

BudgetCheck EnforceDpBudget(const PrivacyLedger& ledger, const std::string& group,
                            double max_epsilon) {
  return EnforceDpBudget(ledger, group, max_epsilon, ledger.target_delta());
}

std::string SpentReportJson(const PrivacyLedger& ledger, const std::string& group) {
  EpsilonResult e = ledger.Spent(group);
  nlohmann::json j = {{"group", group},
                      {"epsilon", e.epsilon},
                      {"delta", ledger.target_delta()},
                      {"best_order", e.best_order}};
  return j.dump();
}

}  // namespace polifed::dp
