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

// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// if any selected criterion fails. `--only N` runs a single criterion.

#include <algorithm>
#include <cstdarg>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "polifed/app/deploy.h"
#include "polifed/app/run.h"
#include "polifed/app/scenario.h"
#include "polifed/common/error.h"
#include "polifed/common/rng.h"
#include "polifed/data/dataset.h"
#include "polifed/dp/ledger.h"
#include "polifed/dp/rdp.h"
#include "polifed/dpp/commands.h"
#include "polifed/fl/model_params.h"
#include "polifed/fl/task.h"
#include "polifed/fl/training.h"
#include "polifed/net/coordinator.h"
#include "polifed/net/edge.h"
#include "polifed/net/messages.h"
#include "polifed/net/tcp.h"
#include "polifed/net/transport.h"
#include "polifed/net/wire.h"
#include "polifed/policy/macros.h"
#include "polifed/policy/parser.h"
#include "polifed/policy/policy.h"
#include "support/automaton_oracle.h"
#include "support/calibration.h"
#include "support/policy_gen.h"
#include "support/rdp_oracle.h"

namespace polifed::acceptance {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and limits.
constexpr int kOraclePolicies = 10000;
constexpr int kOracleDepth = 6;
constexpr int kOracleTraceLen = 6;
constexpr double kOracleSeconds = 60.0;
constexpr int kSizeTraceSteps = 100;
constexpr int kSizeTracesPerPolicy = 200;
constexpr double kSizeBound = 10.0;
constexpr double kCentralizedTol = 1e-10;
constexpr double kGradRelTol = 1e-5;
constexpr int kClipVectors = 10000;
constexpr double kClipTol = 1e-12;
constexpr double kOracleRelTol = 0.01;
constexpr double kBaselineAccuracy = 0.95;
constexpr int kBaselineRounds = 100;
constexpr double kConvergenceMinutes = 15.0;
constexpr double kTtpFraction = 0.01;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------- 1
Outcome PolicyOracle() {
  auto start = Clock::now();
  std::mt19937_64 rng(2026);
  std::vector<policy::CommandInvocation> syms;
  for (const auto& a : testing::TestAlphabet()) syms.emplace_back(a);
  const int k = static_cast<int>(syms.size());
  long checks = 0, mismatches = 0;
  std::string first_bad;
  struct Frame {
    policy::Policy p;
    int state;
    int len;
  };
  for (int i = 0; i < kOraclePolicies; ++i) {
    policy::Policy raw = testing::RandomPolicy(rng, kOracleDepth);
    testing::Dfa dfa = testing::CompileToDfa(raw, testing::TestAlphabet());
    // Depth-first over every trace of length <= kOracleTraceLen; each node
    // derives its parent by one symbol, so every prefix is checked once.
    std::vector<Frame> stack{{raw, 0, 0}};
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      ++checks;
      if (policy::Emptiness(f.p) != static_cast<bool>(dfa.accepting[f.state])) {
        if (mismatches++ == 0) first_bad = raw.ToString();
      }
      if (f.len == kOracleTraceLen) continue;
      for (int a = 0; a < k; ++a) {
        stack.push_back({policy::Derive(f.p, syms[a]), dfa.next[f.state][a], f.len + 1});
      }
    }
  }
  double secs = Seconds(start);
  Outcome o;
  o.pass = mismatches == 0 && secs <= kOracleSeconds;
  o.detail = Fmt("%d policies, %ld policy-trace checks, %ld mismatches, %.1f s (limit %.0f s)",
                 kOraclePolicies, checks, mismatches, secs, kOracleSeconds);
  if (!first_bad.empty()) o.detail += "; first mismatch " + first_bad;
  return o;
}

// ---------------------------------------------------------------- 2
std::vector<policy::CommandInvocation> UseCaseAlphabet() {
  std::vector<policy::CommandInvocation> out;
  for (const char* t : {"get_data(data_type='reddit')", "get_data(data_type='cifar')",
                        "get_data(data_type='MPU')", "get_data",
                        "filter(sensors=['mic','loc'])", "filter(sensors=['mic'])",
                        "train_local", "train_local_dp", "accumulate", "average", "return"}) {
    out.push_back(policy::ParseInvocation(t));
  }
  for (double eps : {0.5, 1.0, 2.0, 5.0}) {
    for (const char* g : {"Gr1", "Gr2"}) out.push_back(dpp::EnforceBudgetInvocation(eps, g));
  }
  return out;
}

Outcome ReductionSoundness() {
  // Soundness on the random corpus: the oracle automata of p and reduce(p)
  // accept the same traces.
  std::mt19937_64 rng(2026);
  auto words = testing::AllWords(4, kOracleTraceLen);
  long checks = 0, mismatches = 0;
  for (int i = 0; i < kOraclePolicies; ++i) {
    policy::Policy raw = testing::RandomPolicy(rng, kOracleDepth);
    testing::Dfa a = testing::CompileToDfa(raw, testing::TestAlphabet());
    testing::Dfa b = testing::CompileToDfa(policy::Reduce(raw), testing::TestAlphabet());
    for (const auto& w : words) {
      ++checks;
      mismatches += a.Accepts(w) != b.Accepts(w);
    }
  }

  // Size along long traces of the use-case policies.
  const std::vector<std::string> table = {
      "get_data(data_type='reddit') . runFL . enforce_dp_budget(eps=1) . return",
      "get_data(data_type='reddit') . runFL . enforce_dp_budget(eps=2) . return",
      "get_data(data_type='cifar') . runFL . enforce_dp_budget(eps=2) . return",
      "get_data(data_type='cifar') . runFL . enforce_dp_budget(eps=5) . return",
      "get_data(data_type='MPU') . runFL . return",
      "get_data(data_type='MPU') . filter(sensors=['mic','loc']) . runFL . return",
  };
  auto alphabet = UseCaseAlphabet();
  std::mt19937_64 walk(7);
  double worst = 0;
  long steps = 0;
  for (const auto& text : table) {
    policy::Policy p0 = policy::CompilePolicy(text);
    double initial = static_cast<double>(p0.size());
    for (int t = 0; t < kSizeTracesPerPolicy; ++t) {
      policy::Policy p = p0;
      for (int s = 0; s < kSizeTraceSteps; ++s) {
        // Prefer commands the policy still admits, so traces stay live.
        std::vector<policy::Policy> live;
        for (const auto& c : alphabet) {
          policy::Policy d = policy::Derive(p, c);
          if (!d.is_zero()) live.push_back(std::move(d));
        }
        if (!live.empty()) {
          p = live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(walk)];
        } else {
          p = policy::Derive(p, alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(walk)]);
        }
        ++steps;
        worst = std::max(worst, static_cast<double>(p.size()) / initial);
      }
    }
  }
  Outcome o;
  o.pass = mismatches == 0 && worst <= kSizeBound;
  o.detail = Fmt("reduce: %ld checks, %ld mismatches; use-case traces: %ld steps, max size ratio %.3f (limit %.0f)",
                 checks, mismatches, steps, worst, kSizeBound);
  return o;
}

// ---------------------------------------------------------------- 3
fl::Examples RandomExamples(std::size_t n, std::size_t dim, int classes, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, classes - 1);
  fl::Examples ex;
  ex.dim = dim;
  for (std::size_t i = 0; i < n * dim; ++i) ex.features.push_back(g(rng));
  for (std::size_t i = 0; i < n; ++i) ex.labels.push_back(label(rng));
  return ex;
}

Outcome FlCorrectness() {
  // Full participation, identical data, E=1, full batch, eta=1.
  double worst_central = 0;
  for (const char* model : {"logistic", "softmax", "mlp"}) {
    Rng rng(31);
    const int classes = std::string(model) == "logistic" ? 2 : 3;
    fl::Examples ex = RandomExamples(40, 3, classes, rng);
    auto task = fl::MakeTask(model, 3, classes, 5);
    fl::ModelParams g = task->Init(6);
    fl::TrainConfig cfg{1, 0.7, 1000, 1};
    const int n = 5;
    fl::ModelParams sum = g.ZerosLike();
    for (int i = 0; i < n; ++i) sum = fl::Accumulate(sum, fl::Subtract(fl::TrainLocal(g, ex, cfg, *task), g));
    fl::ModelParams fed = fl::Average(g, sum, 1.0, n);
    std::vector<std::size_t> rows;
    fl::ModelParams central = g;
    fl::Axpy(-0.7, task->Gradient(g, fl::WholeBatch(ex, rows)), central);
    auto a = fed.Flatten(), b = central.Flatten();
    for (std::size_t i = 0; i < a.size(); ++i) worst_central = std::max(worst_central, std::abs(a[i] - b[i]));
  }

  // Directional central differences.
  double worst_grad = 0;
  for (const char* model : {"logistic", "softmax", "mlp"}) {
    Rng rng(MixSeed({std::hash<std::string>{}(model)}));
    const std::size_t dim = 4;
    const int classes = std::string(model) == "logistic" ? 2 : 3;
    auto task = fl::MakeTask(model, dim, classes, 6);
    fl::Examples ex = RandomExamples(12, dim, classes, rng);
    std::vector<std::size_t> rows;
    fl::Batch batch = fl::WholeBatch(ex, rows);
    std::normal_distribution<double> g(0.0, 1.0);
    const double h = 1e-5;
    for (int probe = 0; probe < 100; ++probe) {
      fl::ModelParams p = task->Init(probe);
      std::vector<double> flat = p.Flatten();
      for (double& v : flat) v += 0.5 * g(rng);
      p.Assign(flat);
      std::vector<double> dir(flat.size());
      for (double& v : dir) v = g(rng);
      std::vector<double> grad = task->Gradient(p, batch).Flatten();
      double analytic = 0;
      for (std::size_t i = 0; i < dir.size(); ++i) analytic += grad[i] * dir[i];
      fl::ModelParams plus = p, minus = p;
      std::vector<double> fp = flat, fm = flat;
      for (std::size_t i = 0; i < dir.size(); ++i) {
        fp[i] += h * dir[i];
        fm[i] -= h * dir[i];
      }
      plus.Assign(fp);
      minus.Assign(fm);
      double numeric = (task->Loss(plus, batch) - task->Loss(minus, batch)) / (2 * h);
      double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      worst_grad = std::max(worst_grad, std::abs(analytic - numeric) / scale);
    }
  }

  // sigma=0, S=inf through train_local_dp is the plain pipeline, bit for bit.
  bool identical = true;
  for (const char* model : {"logistic", "softmax", "mlp"}) {
    Rng rng(12);
    const int classes = std::string(model) == "logistic" ? 2 : 3;
    fl::Examples ex = RandomExamples(30, 4, classes, rng);
    auto task = fl::MakeTask(model, 4, classes, 5);
    fl::TrainConfig cfg{2, 0.2, 7, 3};
    fl::DpConfig off;
    fl::ModelParams plain = task->Init(1), dp = plain;
    for (int round = 0; round < 3; ++round) {
      fl::ModelParams s1 = plain.ZerosLike(), s2 = dp.ZerosLike();
      for (int u = 0; u < 3; ++u) {
        fl::TrainConfig c = cfg;
        c.seed = MixSeed({cfg.seed, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(u)});
        s1 = fl::Accumulate(s1, fl::Subtract(fl::TrainLocal(plain, ex, c, *task), plain));
        s2 = fl::Accumulate(s2, fl::TrainLocalDp(dp, ex, c, off, *task, 55));
      }
      plain = fl::Average(plain, s1, 1.0, 3);
      dp = fl::Average(dp, s2, 1.0, 3);
    }
    identical &= fl::EncodeModelParams(plain) == fl::EncodeModelParams(dp);
  }
  Outcome o;
  o.pass = worst_central <= kCentralizedTol && worst_grad <= kGradRelTol && identical;
  o.detail = Fmt("fed vs central max |diff| %.2e (limit %.0e); gradient max rel err %.2e (limit %.0e); "
                 "DP-off pipeline %s",
                 worst_central, kCentralizedTol, worst_grad, kGradRelTol,
                 identical ? "bit-identical" : "DIFFERS");
  return o;
}

// ---------------------------------------------------------------- 4
Outcome Clipping() {
  Rng rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  std::uniform_real_distribution<double> bound(1e-2, 1e2);
  double worst_excess = -std::numeric_limits<double>::infinity();
  long inside = 0, inside_changed = 0;
  for (int i = 0; i < kClipVectors; ++i) {
    std::vector<double> v(1 + i % 64);
    double s = scale(rng), S = bound(rng);
    for (double& x : v) x = s * g(rng);
    fl::ModelParams d({{"x", {v.size()}, v}});
    fl::ModelParams out = fl::ClipUpdate(d, S);
    double norm = 0;
    for (double x : out.Flatten()) norm += x * x;
    norm = std::sqrt(norm);
    worst_excess = std::max(worst_excess, norm - S);
    double in = 0;
    for (double x : v) in += x * x;
    if (std::sqrt(in) <= S) {
      ++inside;
      inside_changed += !(out == d);
    }
  }
  Outcome o;
  o.pass = worst_excess <= kClipTol && inside_changed == 0 && inside > 0;
  o.detail = Fmt("%d vectors; max(norm - S) = %.3e (limit %.0e); %ld inside the ball, %ld changed",
                 kClipVectors, worst_excess, kClipTol, inside, inside_changed);
  return o;
}

// ---------------------------------------------------------------- 5
app::ScenarioConfig TwoDpGroups(net::Strategy strategy, double sigma1, double sigma2, int rounds) {
  json j = {{"task", "classification-2class"}, {"n_users", 20}, {"rows_per_user", 20}, {"model", "logistic"},
            {"strategy", net::StrategyName(strategy)}, {"rounds", rounds}, {"round_size", 5}, {"eta", 1.0},
            {"divisor", "round"}, {"train", {{"epochs", 1}, {"local_lr", 0.5}, {"batch_size", 20}, {"seed", 0}}},
            {"seeds", {{"data", 5}, {"run", 6}}}, {"token", "tok"}};
  auto group = [](const char* id, double sigma, double eps) {
    return json{{"id", id}, {"policy", "get_data . runFLDP . return"}, {"fraction", 0.5}, {"max_epsilon", eps},
                {"dp", {{"clip_bound", 1.0}, {"noise_sigma", sigma}, {"round_size", 5}}}};
  };
  j["groups"] = {group("Gr1", sigma1, 1e6), group("Gr2", sigma2, 2e6)};
  return app::ScenarioFromJson(j);
}

app::ScenarioConfig OnlyGroup(app::ScenarioConfig c, const std::string& id) {
  // Same members, but the other group's users sit out.
  c.strategy = net::Strategy::kSubsetOnly;
  for (auto& g : c.groups) {
    if (g.id != id) g.max_epsilon = 0.5e6;
  }
  return c;
}

Outcome Accountant() {
  const auto& orders = dp::DefaultOrders();
  // (a) q = 1 is the plain Gaussian mechanism.
  bool closed = true;
  for (double z : {0.3, 0.7, 1.0, 2.5, 8.0}) {
    for (double a : orders) closed &= dp::RdpOneStep(1.0, z, a) == a / (2 * z * z);
  }
  // (b) integral oracle over a grid.
  double worst_rel = 0;
  for (double q : {1e-4, 1e-3, 1e-2, 5e-2}) {
    for (double z : {0.5, 1.0, 2.0}) {
      for (std::int64_t steps : {1, 100, 1000}) {
        auto lib = dp::RdpSubsampledGaussian(q, z, steps, orders);
        std::vector<double> ref;
        for (double a : orders) ref.push_back(steps * testing::OracleRdpOneStep(q, z, a));
        for (std::size_t i = 0; i < orders.size(); ++i) {
          if (ref[i] > 0) worst_rel = std::max(worst_rel, std::abs(lib[i] - ref[i]) / ref[i]);
        }
        double el = dp::EpsilonFromRdp(lib, orders, 1e-8).epsilon;
        double er = dp::EpsilonFromRdp(ref, orders, 1e-8).epsilon;
        worst_rel = std::max(worst_rel, std::abs(el - er) / er);
      }
    }
  }
  // (c) what happens after charging (averaging, the budget command, FINAL,
  // ledger serialization) leaves the spent epsilon unchanged.
  app::ScenarioConfig pc = TwoDpGroups(net::Strategy::kCascaded, 1.0, 0.5, 3);
  app::RunReport pr = app::Simulate(pc);
  bool post = pr.outcome.ok && !pr.outcome.rounds.empty();
  if (post) {
    const auto& last = pr.outcome.rounds.back().spent;
    dp::PrivacyLedger back = dp::PrivacyLedger::FromJsonLines(pr.outcome.ledger.ToJsonLines());
    for (const auto& g : {"Gr1", "Gr2"}) {
      double final_eps = pr.outcome.ledger.Spent(g).epsilon;
      post &= final_eps == last.at(g) && back.Spent(g).epsilon == final_eps;
    }
  }
  // (d) cascaded per-group spending equals each group's solo run.
  app::ScenarioConfig cc = TwoDpGroups(net::Strategy::kCascaded, 1.2, 0.6, 4);
  app::RunReport cas = app::Simulate(cc);
  bool consistent = cas.outcome.ok;
  std::string cascade_eps;
  for (const char* g : {"Gr1", "Gr2"}) {
    app::ScenarioConfig solo = cc;
    solo.groups.erase(std::remove_if(solo.groups.begin(), solo.groups.end(),
                                     [&](const app::GroupConfig& x) { return x.id != g; }),
                      solo.groups.end());
    solo.groups[0].fraction = 1.0;
    // Keep the same members: the solo population is the group's own users.
    app::Population pop = app::BuildPopulation(cc);
    const auto& members = pop.members.at(g);
    solo.data.n_users = static_cast<int>(members.size());
    app::RunReport sr = app::Simulate(solo);
    consistent &= sr.outcome.ok;
    if (!consistent) break;
    double a = cas.outcome.ledger.Spent(g).epsilon, b = sr.outcome.ledger.Spent(g).epsilon;
    consistent &= a == b;
    cascade_eps += Fmt(" %s %.6g/%.6g", g, a, b);
  }
  // Table parameters: q = 5000/1e8, delta = 1e-8, calibrated z.
  dp::PrivacyLedger cascade(testing::kTableDelta), solo1(testing::kTableDelta), solo2(testing::kTableDelta);
  cascade.ChargeRounds("Gr1", testing::kTableSamplingRate, testing::kCalibratedZ, 1000);
  cascade.ChargeRounds("Gr2", testing::kTableSamplingRate, testing::kCalibratedZ / 2, 1000);
  solo1.ChargeRounds("Gr1", testing::kTableSamplingRate, testing::kCalibratedZ, 1000);
  solo2.ChargeRounds("Gr2", testing::kTableSamplingRate, testing::kCalibratedZ / 2, 1000);
  double t1 = cascade.Spent("Gr1").epsilon, t2 = cascade.Spent("Gr2").epsilon;
  consistent &= t1 == solo1.Spent("Gr1").epsilon && t2 == solo2.Spent("Gr2").epsilon;
  // (e) 1000 rounds within budget 1, 2000 rounds over it.
  dp::PrivacyLedger short_run(testing::kTableDelta), long_run(testing::kTableDelta);
  short_run.ChargeRounds("Gr1", testing::kTableSamplingRate, testing::kCalibratedZ, 1000);
  long_run.ChargeRounds("Gr1", testing::kTableSamplingRate, testing::kCalibratedZ, 2000);
  dp::BudgetCheck e1000 = dp::EnforceDpBudget(short_run, "Gr1", 1.0);
  dp::BudgetCheck e2000 = dp::EnforceDpBudget(long_run, "Gr1", 1.0);
  bool yes_no = e1000.pass && !e2000.pass;

  bool ok_b = worst_rel <= kOracleRelTol;
  Outcome o;
  o.pass = closed && ok_b && post && consistent && yes_no;
  o.detail = Fmt("(a) %s; (b) max rel %.2e (limit %.0e) %s; (c) %s; (d) %s, cascaded/solo%s, "
                 "table z=%.11g Gr1 %.4f Gr2(z/2) %.4f; (e) eps(1000)=%.4f %s, eps(2000)=%.4f %s budget 1 -> %s",
                 closed ? "PASS" : "FAIL", worst_rel, kOracleRelTol, ok_b ? "PASS" : "FAIL",
                 post ? "PASS" : "FAIL", consistent ? "PASS" : "FAIL", cascade_eps.c_str(), testing::kCalibratedZ,
                 t1, t2, e1000.spent, e1000.pass ? "within" : "over", e2000.spent,
                 e2000.pass ? "within" : "over", yes_no ? "PASS" : "FAIL");
  return o;
}

// ---------------------------------------------------------------- 6
json MulticlassBase(int n_users, std::uint64_t seed) {
  return {{"task", "multiclass-10"}, {"n_users", n_users}, {"rows_per_user", 50}, {"separation", 5.5},
          {"dirichlet_alpha", 0.9}, {"model", "softmax"}, {"round_size", 10}, {"eta", 1.0},
          {"divisor", "round"}, {"train", {{"epochs", 1}, {"local_lr", 0.2}, {"batch_size", 10}, {"seed", 0}}},
          {"seeds", {{"data", seed}, {"run", seed + 100}}}, {"token", "tok"}};
}

constexpr double kSigmaLow = 0.3;
constexpr double kSigmaHigh = 3.0;
constexpr int kPhaseRounds = 50;

app::RunReport RunDpSchedule(net::Strategy strategy, std::uint64_t seed) {
  json j = MulticlassBase(100, seed);
  j["strategy"] = net::StrategyName(strategy);
  j["rounds"] = strategy == net::Strategy::kCascaded ? kPhaseRounds : 2 * kPhaseRounds;
  auto group = [](const char* id, double sigma) {
    return json{{"id", id}, {"policy", "get_data . runFLDP . return"}, {"fraction", 0.5},
                {"dp", {{"clip_bound", 1.0}, {"noise_sigma", sigma}, {"round_size", 10}}}};
  };
  // The high-privacy group comes first, so combined uses its noise.
  j["groups"] = {group("Gr1", kSigmaHigh), group("Gr2", kSigmaLow)};
  return app::Simulate(app::ScenarioFromJson(j));
}

Outcome Convergence() {
  auto start = Clock::now();
  json b = MulticlassBase(20, 1);
  b["strategy"] = "combined";
  b["rounds"] = kBaselineRounds;
  b["groups"] = {{{"id", "all"}, {"policy", "get_data . runFL . return"}, {"fraction", 1.0}}};
  app::RunReport base = app::Simulate(app::ScenarioFromJson(b));
  int reached = 0;
  for (std::size_t i = 0; i < base.metrics.size(); ++i) {
    if (base.metrics[i].metric >= kBaselineAccuracy) {
      reached = static_cast<int>(i) + 1;
      break;
    }
  }
  bool baseline = base.outcome.ok && base.metric_name == "accuracy" && reached > 0;
  std::string seeds;
  bool ordered = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    app::RunReport cas = RunDpSchedule(net::Strategy::kCascaded, seed);
    app::RunReport com = RunDpSchedule(net::Strategy::kCombined, seed);
    if (!cas.outcome.ok || !com.outcome.ok) {
      ordered = false;
      seeds += Fmt(" seed %llu rejected (%s / %s)", static_cast<unsigned long long>(seed),
                   cas.outcome.detail.c_str(), com.outcome.detail.c_str());
      continue;
    }
    double a = cas.metrics.back().metric, c = com.metrics.back().metric;
    ordered &= a >= c;
    seeds += Fmt(" seed %llu %.3f vs %.3f;", static_cast<unsigned long long>(seed), a, c);
  }
  double minutes = Seconds(start) / 60.0;
  Outcome o;
  o.pass = baseline && ordered && minutes <= kConvergenceMinutes;
  o.detail = Fmt("no-DP baseline %.3f at round %d (need >= %.2f within %d); cascaded vs combined-high "
                 "(sigma %.1f:%.1f) final accuracy:%s runtime %.2f min (limit %.0f)",
                 base.metrics.empty() ? 0.0 : base.metrics.back().metric, reached, kBaselineAccuracy,
                 kBaselineRounds, kSigmaHigh, kSigmaLow, seeds.c_str(), minutes, kConvergenceMinutes);
  return o;
}

// ---------------------------------------------------------------- 7
json BehaviorScenario() {
  return {{"task", "classification-2class"}, {"n_users", 40}, {"rows_per_user", 40}, {"model", "logistic"},
          {"strategy", "cascaded"}, {"rounds", 10}, {"round_size", 8}, {"eta", 1.0}, {"divisor", "round"},
          {"train", {{"epochs", 1}, {"local_lr", 0.5}, {"batch_size", 40}, {"seed", 0}}},
          {"seeds", {{"data", 8}, {"run", 9}}}, {"token", "tok"}, {"data_type", "MPU"},
          {"groups",
           {{{"id", "Gr1"}, {"policy", "get_data(data_type='MPU') . runFL . return"}, {"fraction", 0.5}},
            {{"id", "Gr2"},
             {"policy", "get_data(data_type='MPU') . filter(sensors=['mic','loc']) . runFL . return"},
             {"fraction", 0.5}}}}};
}

struct Fleet {
  app::Population pop;
  std::vector<std::shared_ptr<net::EdgeNode>> nodes;
  net::InProcessTransport transport;
};

std::unique_ptr<Fleet> MakeFleet(const app::ScenarioConfig& c) {
  auto f = std::make_unique<Fleet>();
  f->pop = app::BuildPopulation(c);
  for (const auto& u : f->pop.users) {
    f->nodes.push_back(std::make_shared<net::EdgeNode>(app::HostedUsers(c, f->pop, {u.user_id}),
                                                       app::BuildEdgeConfig(c)));
    f->transport.Attach(f->nodes.back());
  }
  return f;
}

Outcome AccessControl() {
  app::ScenarioConfig c = app::ScenarioFromJson(BehaviorScenario());
  auto ok_fleet = MakeFleet(c);
  app::RunReport ok = app::RunScenario(c, app::BuildRequest(c), {{"tok", "svc"}}, ok_fleet->transport);
  // Gr2's training ran on filtered rows: every Gr2 participant ran filter.
  long gr2_filters = 0, gr1_filters = 0;
  for (std::size_t i = 0; i < ok_fleet->nodes.size(); ++i) {
    const std::string& id = ok_fleet->pop.users[i].user_id;
    auto calls = ok_fleet->nodes[i]->hook_calls(id);
    long f = calls.count("filter") ? calls.at("filter") : 0;
    (ok_fleet->pop.group_of.at(id) == "Gr2" ? gr2_filters : gr1_filters) += f;
  }

  // The same scenario with a submitted program that skips the filter.
  app::ScenarioConfig bad = c;
  bad.local_program = dpp::RestrictedProgram::FromJson(
      R"({"role":"local","steps":[{"cmd":"get_data","args":{"data_type":"MPU"},"in":["data_src"],"out":"d"},)"
      R"({"cmd":"train_local","args":{},"in":["model","d"],"out":"u"}]})");
  auto bad_fleet = MakeFleet(bad);
  app::RunReport rej = app::RunScenario(bad, app::BuildRequest(bad), {{"tok", "svc"}}, bad_fleet->transport);
  long touched = 0;
  int gr2_users = 0;
  for (std::size_t i = 0; i < bad_fleet->nodes.size(); ++i) {
    const std::string& id = bad_fleet->pop.users[i].user_id;
    if (bad_fleet->pop.group_of.at(id) != "Gr2") continue;
    ++gr2_users;
    for (const auto& [hook, n] : bad_fleet->nodes[i]->hook_calls(id)) touched += n;
  }
  Outcome o;
  o.pass = ok.outcome.ok && gr2_filters > 0 && gr1_filters == 0 && !rej.outcome.ok &&
           rej.outcome.code == ErrorCode::kPolicyViolation && !rej.outcome.model && touched == 0;
  o.detail = Fmt("use-case policies: %s after %zu rounds (Gr2 filter runs %ld, Gr1 %ld); filter-less program: %s "
                 "(%s), model released: %s, Gr2 hook calls %ld over %d users",
                 ok.outcome.ok ? "FINAL" : ("rejected " + ok.outcome.detail).c_str(), ok.metrics.size(),
                 gr2_filters, gr1_filters, rej.outcome.ok ? "FINAL" : "rejected", ErrorCodeName(rej.outcome.code),
                 rej.outcome.model ? "yes" : "no", touched, gr2_users);
  return o;
}

// ---------------------------------------------------------------- 8
app::ScenarioConfig ScaleScenario() {
  json j = {{"task", "classification-2class"}, {"n_users", 100}, {"rows_per_user", 500}, {"model", "mlp"},
            {"hidden", 32}, {"strategy", "combined"}, {"rounds", 1}, {"round_size", 100}, {"eta", 1.0},
            {"divisor", "round"}, {"train", {{"epochs", 5}, {"local_lr", 0.1}, {"batch_size", 20}, {"seed", 0}}},
            {"seeds", {{"data", 12}, {"run", 13}}}, {"token", "tok"},
            {"groups", {{{"id", "all"}, {"policy", "get_data . runFL . return"}, {"fraction", 1.0}}}}};
  return app::ScenarioFromJson(j);
}

std::vector<std::uint8_t> ModelBytes(const std::optional<fl::ModelParams>& m) {
  return m ? fl::EncodeModelParams(*m) : std::vector<std::uint8_t>{};
}

Outcome Scale() {
  app::ScenarioConfig c = ScaleScenario();
  app::RunReport sim = app::Simulate(c);
  bool recorded = sim.outcome.ok && sim.outcome.rounds.size() == 1;
  double ttp = 0, span = 0;
  std::size_t timed = 0;
  if (recorded) {
    const auto& r = sim.outcome.rounds[0];
    ttp = r.ttp_ms;
    span = r.span_ms;
    timed = r.timings.size();
    recorded &= timed == 100 && r.failures.empty();
    for (const auto& t : r.timings) recorded &= t.ttd_ms >= 0 && t.tte_ms > 0 && t.ttr_ms >= 0;
  }
  // One round, so the median span over rounds is this round's span.
  bool fast_server = recorded && ttp < kTtpFraction * span;

  // Socketed loopback: coordinator server and ten edge processes' worth of
  // clients on threads, ten users each.
  app::ServeConfig sc;
  sc.tokens = {{"tok", "svc"}};
  sc.wait_timeout = std::chrono::seconds(30);
  net::CoordinatorServer server("127.0.0.1", 0, [&](const net::SubmitMessage& m, net::TcpTransport& t) {
    return app::ServeSubmit(m, t, sc, 0);
  });
  server.Start();
  std::atomic<bool> stop{false};
  std::vector<std::unique_ptr<net::EdgeNode>> nodes;
  std::vector<std::thread> edges;
  for (int i = 0; i < 10; ++i) {
    app::EdgeSetup setup{c, {}, std::chrono::seconds(10)};
    for (int u = i; u < c.data.n_users; u += 10) setup.user_ids.push_back(data::UserId(u));
    nodes.push_back(app::MakeEdgeNode(setup));
  }
  for (auto& n : nodes) {
    net::EdgeNode* node = n.get();
    edges.emplace_back([node, &server, &stop] {
      try {
        net::RunEdgeClient(*node, "127.0.0.1", server.port(), stop);
      } catch (const Error&) {
      }
    });
  }
  net::FinalMessage fin =
      net::SubmitRequest("127.0.0.1", server.port(), app::MakeSubmit(c, "tok"), std::chrono::seconds(120));
  stop = true;
  server.Stop();
  for (auto& t : edges) t.join();
  bool identical = fin.ok && sim.outcome.ok && ModelBytes(fin.model) == ModelBytes(sim.outcome.model);

  Outcome o;
  o.pass = recorded && fast_server && identical;
  o.detail = Fmt("100 nodes, %zu participant timings; TTP %.3f ms vs round span %.1f ms (%.3f%%, limit %.0f%%); "
                 "socketed FINAL %s simulate (%zu bytes)",
                 timed, ttp, span, span > 0 ? 100 * ttp / span : 0.0, 100 * kTtpFraction,
                 identical ? "byte-identical to" : "DIFFERS from", ModelBytes(sim.outcome.model).size());
  return o;
}

// ---------------------------------------------------------------- 9
bool Contains(const std::vector<std::uint8_t>& hay, std::span<const std::uint8_t> needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

struct ScanResult {
  bool inner_b64 = false;
  bool raw_values = false;
  std::size_t frames = 0;
};

// Runs one round where u0001's policy decides release; scans what u0001 sent.
ScanResult ScanRound(bool allow) {
  json j = {{"task", "classification-2class"}, {"n_users", 3}, {"rows_per_user", 30}, {"model", "logistic"},
            {"strategy", "combined"}, {"rounds", 1}, {"round_size", 3}, {"eta", 1.0}, {"divisor", "round"},
            {"train", {{"epochs", 1}, {"local_lr", 0.5}, {"batch_size", 30}, {"seed", 0}}},
            {"seeds", {{"data", 4}, {"run", 44}}}, {"token", "tok"},
            {"groups", {{{"id", "g"}, {"policy", "get_data . runFL . return"}, {"fraction", 1.0}}}}};
  app::ScenarioConfig c = app::ScenarioFromJson(j);
  app::Population pop = app::BuildPopulation(c);
  net::InProcessTransport transport;
  for (const auto& u : pop.users) {
    auto hosted = app::HostedUsers(c, pop, {u.user_id});
    if (u.user_id == "u0001" && !allow) hosted[0].policy = policy::CompilePolicy("get_data . train_local . average");
    transport.Attach(std::make_shared<net::EdgeNode>(hosted, app::BuildEdgeConfig(c)));
  }
  std::vector<std::uint8_t> from_node;
  ScanResult res;
  transport.set_tap([&](net::Direction d, const std::string& u, std::span<const std::uint8_t> f) {
    if (d == net::Direction::kFromNode && u == "u0001") {
      from_node.insert(from_node.end(), f.begin(), f.end());
      ++res.frames;
    }
  });
  net::CoordinatorConfig cc = app::BuildCoordinatorConfig(c);
  cc.tokens = {{"tok", "svc"}};
  net::Coordinator coord(cc, transport);
  fl::ModelParams g = app::InitialModel(c);
  std::vector<std::string> users = {"u0000", "u0001", "u0002"};
  std::map<std::string, std::string> group_of;
  for (const auto& u : users) group_of[u] = "g";
  coord.RunRound(1, g, users, group_of, {{"g", policy::Top()}}, app::BuildRequest(c), {}, std::chrono::seconds(10));

  // The update u0001 computes, derived independently of the node.
  net::ModelSpec spec = app::BuildModelSpec(c);
  auto task = fl::MakeTask(spec.model, spec.dim, spec.classes, spec.hidden);
  fl::TrainConfig tc = cc.train;
  tc.seed = net::ParticipantSeed(cc.seed, 1, "u0001", 1);
  fl::ModelParams upd = fl::Subtract(fl::TrainLocal(g, data::ToExamples(pop.users[1], spec.features), tc, *task), g);
  std::vector<std::uint8_t> raw = fl::EncodeModelParams(upd);
  std::string b64 = net::Base64Encode(raw);
  std::string inner = b64.substr(8, 40);
  res.inner_b64 = Contains(from_node, std::span(reinterpret_cast<const std::uint8_t*>(inner.data()), inner.size()));
  res.raw_values = Contains(from_node, std::span(raw).last(24));
  return res;
}

Outcome FailClosed() {
  ScanResult control = ScanRound(true);
  ScanResult withheld = ScanRound(false);
  bool scan = control.inner_b64 && !withheld.inner_b64 && !withheld.raw_values && withheld.frames > 0;

  // Garbage and truncated frames against a node.
  json j = BehaviorScenario();
  app::ScenarioConfig c = app::ScenarioFromJson(j);
  app::Population pop = app::BuildPopulation(c);
  net::EdgeNode node(app::HostedUsers(c, pop, {"u0000"}), app::BuildEdgeConfig(c));
  Rng rng(99);
  long node_inputs = 0, node_errors = 0;
  net::TaskMessage t;
  t.round = 1;
  t.user_id = "u0000";
  t.model = app::InitialModel(c);
  t.model_policy = "!0";
  t.program = app::BuildRequest(c).group_programs.at(pop.group_of.at("u0000"));
  t.spec = app::BuildModelSpec(c);
  std::vector<std::uint8_t> valid = net::EncodeFrame(t.ToMessage());
  bool node_alive = true;
  for (int i = 0; i < 20000; ++i) {
    std::vector<std::uint8_t> in;
    if (i % 2 == 0) {
      in.resize(std::uniform_int_distribution<std::size_t>(0, 64)(rng));
      for (auto& b : in) b = static_cast<std::uint8_t>(rng());
    } else {
      in.assign(valid.begin(), valid.begin() + std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng));
    }
    ++node_inputs;
    try {
      std::vector<std::uint8_t> reply = node.HandleFrame(in);
      net::Message m = net::DecodePayload(std::span(reply).subspan(4));
      node_errors += m.kind == net::MessageKind::kError;
    } catch (...) {
      node_alive = false;
    }
  }
  try {
    std::vector<std::uint8_t> reply = node.HandleFrame(valid);
    net::Message m = net::DecodePayload(std::span(reply).subspan(4));
    node_alive &= m.kind == net::MessageKind::kResult && net::ResultMessage::FromMessage(m).ok;
  } catch (...) {
    node_alive = false;
  }

  // Garbage, truncated and oversized frames against a coordinator; then a
  // real submission still completes.
  app::ScenarioConfig small = app::ScenarioFromJson([] {
    json s = BehaviorScenario();
    s["n_users"] = 4;
    s["rounds"] = 1;
    s["round_size"] = 2;
    return s;
  }());
  app::ServeConfig sc;
  sc.tokens = {{"tok", "svc"}};
  sc.wait_timeout = std::chrono::seconds(20);
  net::CoordinatorServer server("127.0.0.1", 0, [&](const net::SubmitMessage& m, net::TcpTransport& tr) {
    return app::ServeSubmit(m, tr, sc, 0);
  });
  server.Start();
  int coord_errors = 0;
  auto deadline = [] { return Clock::now() + std::chrono::seconds(5); };
  try {
    {
      net::FramedConnection conn(net::Socket::Connect("127.0.0.1", server.port()));
      std::vector<std::uint8_t> junk = {0, 0, 0, 5, 7, 0x99, 'x', 'y', 'z'};
      conn.WriteRaw(junk);
      auto m = conn.Read(deadline());
      coord_errors += m && m->kind == net::MessageKind::kError;
    }
    {
      net::FramedConnection conn(net::Socket::Connect("127.0.0.1", server.port()));
      std::vector<std::uint8_t> f = net::EncodeFrame(net::HelloMessage{{"u0000"}}.ToMessage());
      conn.WriteRaw(std::span(f).first(f.size() - 3));
      conn.socket().Shutdown();
    }
    {
      net::FramedConnection conn(net::Socket::Connect("127.0.0.1", server.port()));
      std::vector<std::uint8_t> huge = {0x7f, 0xff, 0xff, 0xff, 1, 1};
      conn.WriteRaw(huge);
      auto m = conn.Read(deadline());
      coord_errors += m && m->kind == net::MessageKind::kError;
    }
    for (int i = 0; i < 50; ++i) {
      net::FramedConnection conn(net::Socket::Connect("127.0.0.1", server.port()));
      std::vector<std::uint8_t> junk(std::uniform_int_distribution<std::size_t>(1, 200)(rng));
      for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
      conn.WriteRaw(junk);
      conn.socket().Shutdown();
    }
  } catch (const Error&) {
  }
  std::atomic<bool> stop{false};
  auto edge_node = app::MakeEdgeNode(app::EdgeSetup{small, {"u0000", "u0001", "u0002", "u0003"}, std::chrono::seconds(5)});
  std::thread edge([&] {
    try {
      net::RunEdgeClient(*edge_node, "127.0.0.1", server.port(), stop);
    } catch (const Error&) {
    }
  });
  net::FinalMessage fin;
  try {
    fin = net::SubmitRequest("127.0.0.1", server.port(), app::MakeSubmit(small, "tok"), std::chrono::seconds(60));
  } catch (const Error& e) {
    fin.ok = false;
    fin.detail = e.what();
  }
  stop = true;
  server.Stop();
  edge.join();
  bool coordinator_alive = fin.ok && coord_errors == 2;

  Outcome o;
  o.pass = scan && node_alive && node_errors == node_inputs && coordinator_alive;
  o.detail = Fmt("sentinel: releasing node %s update bytes, withholding node %s (b64) / %s (raw) over %zu frames; "
                 "node: %ld/%ld bad inputs answered with ERROR, %s; coordinator: %d/2 ERROR replies, "
                 "submission afterwards %s",
                 control.inner_b64 ? "sent" : "did NOT send", withheld.inner_b64 ? "LEAKED" : "clean",
                 withheld.raw_values ? "LEAKED" : "clean", withheld.frames, node_errors, node_inputs,
                 node_alive ? "still serves tasks" : "BROKEN", coord_errors,
                 fin.ok ? "FINAL" : ("failed: " + fin.detail).c_str());
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace polifed::acceptance

int main(int argc, char** argv) {
  using namespace polifed::acceptance;
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0) only = std::atoi(argv[i + 1]);
  }
  const std::vector<Criterion> all = {
      {1, "policy oracle equivalence", PolicyOracle},
      {2, "reduction soundness and size bound", ReductionSoundness},
      {3, "FL correctness", FlCorrectness},
      {4, "clipping", Clipping},
      {5, "accountant", Accountant},
      {6, "end-to-end convergence", Convergence},
      {7, "heterogeneous access control", AccessControl},
      {8, "distributed round at scale", Scale},
      {9, "fail-closed wire check", FailClosed},
  };
  bool any_fail = false, ran = false;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    ran = true;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d (%s): %s - %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    any_fail |= !o.pass;
  }
  if (!ran) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return any_fail ? 1 : 0;
}
