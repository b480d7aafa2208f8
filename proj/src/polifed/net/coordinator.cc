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

#include "polifed/net/coordinator.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "polifed/common/rng.h"
#include "polifed/dpp/commands.h"
#include "polifed/net/edge.h"
#include "polifed/policy/parser.h"

namespace polifed::net {
namespace {

using Clock = std::chrono::steady_clock;
using policy::CommandInvocation;
using policy::Policy;

double Ms(Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

std::uint64_t UserHash(const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// The local step that consumes the global model.
const std::string& TrainCommandOf(const dpp::RestrictedProgram& prog) {
  for (const auto& s : prog.steps) {
    if (std::find(s.in.begin(), s.in.end(), kModelSlot) != s.in.end()) return s.cmd.name;
  }
  Fail(ErrorCode::kInvalidArgument, "local program never reads the 'model' slot");
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

const dpp::RestrictedProgram& TrainingRequest::LocalProgramFor(const std::string& group) const {
  auto it = group_programs.find(group);
  return it == group_programs.end() ? local_program : it->second;
}

dpp::RestrictedProgram DefaultGlobalProgram() {
  dpp::RestrictedProgram p;
  p.role = dpp::Role::kGlobal;
  p.steps.push_back({CommandInvocation("average"), {"model", "sum"}, "next"});
  return p;
}

const char* StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kSubsetOnly: return "subset-only";
    case Strategy::kCombined: return "combined";
    case Strategy::kCascaded: return "cascaded";
  }
  return "?";
}

Strategy ParseStrategy(const std::string& name) {
  for (Strategy s : {Strategy::kSubsetOnly, Strategy::kCombined, Strategy::kCascaded}) {
    if (name == StrategyName(s)) return s;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown strategy '" + name + "'");
}

void GroupSchedule::Validate() const {
  if (groups.empty()) Fail(ErrorCode::kInvalidArgument, "schedule has no groups");
  std::set<std::string> ids, users;
  for (const auto& g : groups) {
    if (g.id.empty() || !ids.insert(g.id).second) {
      Fail(ErrorCode::kInvalidArgument, "group ids must be unique and non-empty");
    }
    if (g.members.empty()) Fail(ErrorCode::kInvalidArgument, "group '" + g.id + "' has no members");
    for (const auto& u : g.members) {
      if (!users.insert(u).second) {
        Fail(ErrorCode::kInvalidArgument, "user '" + u + "' belongs to more than one group");
      }
    }
    if (g.rounds < 1) Fail(ErrorCode::kInvalidArgument, "group '" + g.id + "': rounds < 1");
    if (g.round_size < 1 || g.round_size > static_cast<int>(g.members.size())) {
      Fail(ErrorCode::kInvalidArgument, "group '" + g.id + "': round size out of range");
    }
    if (g.max_epsilon && !(*g.max_epsilon > 0)) {
      Fail(ErrorCode::kInvalidArgument, "group '" + g.id + "': max_epsilon must be positive");
    }
    g.dp.Validate();
  }
  if (strategy == Strategy::kCombined) {
    if (combined_rounds < 1) Fail(ErrorCode::kInvalidArgument, "rounds < 1");
    if (combined_round_size < 1 || combined_round_size > static_cast<int>(users.size())) {
      Fail(ErrorCode::kInvalidArgument, "round size out of range");
    }
  }
}

std::vector<const GroupSpec*> RestrictivenessOrder(const GroupSchedule& s) {
  std::vector<const GroupSpec*> order;
  for (const auto& g : s.groups) order.push_back(&g);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::stable_sort(order.begin(), order.end(), [&](const GroupSpec* a, const GroupSpec* b) {
    double ea = a->max_epsilon.value_or(kInf), eb = b->max_epsilon.value_or(kInf);
    if (ea != eb) return ea < eb;
    return a->filtered_tags > b->filtered_tags;
  });
  return order;
}

std::vector<Phase> PlanPhases(const GroupSchedule& s) {
  s.Validate();
  std::vector<const GroupSpec*> order = RestrictivenessOrder(s);
  auto single = [](const GroupSpec& g) {
    Phase p;
    p.groups = {g.id};
    p.pool = g.members;
    std::sort(p.pool.begin(), p.pool.end());
    p.rounds = g.rounds;
    p.round_size = g.round_size;
    p.dp = g.dp;
    p.dp.round_size = g.round_size;
    p.charged = {g.id};
    return p;
  };
  std::vector<Phase> phases;
  switch (s.strategy) {
    case Strategy::kCascaded:
      for (const GroupSpec* g : order) phases.push_back(single(*g));
      break;
    case Strategy::kSubsetOnly:
      phases.push_back(single(*order.back()));
      break;
    case Strategy::kCombined: {
      Phase p;
      for (const auto& g : s.groups) {
        p.groups.push_back(g.id);
        p.charged.push_back(g.id);
        p.pool.insert(p.pool.end(), g.members.begin(), g.members.end());
      }
      std::sort(p.pool.begin(), p.pool.end());
      p.rounds = s.combined_rounds;
      p.round_size = s.combined_round_size;
      p.dp = order.front()->dp;
      p.dp.round_size = p.round_size;
      phases.push_back(std::move(p));
      break;
    }
  }
  return phases;
}

std::vector<std::string> SampleParticipants(const std::vector<std::string>& members, int m,
                                            int round, std::uint64_t seed) {
  if (m < 1 || m > static_cast<int>(members.size())) {
    Fail(ErrorCode::kInvalidArgument, "round size " + std::to_string(m) + " exceeds group of " +
                                          std::to_string(members.size()));
  }
  std::vector<std::string> pool = members;
  std::sort(pool.begin(), pool.end());
  Rng rng(MixSeed({seed, static_cast<std::uint64_t>(round), 0x73616d70ULL}));
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(m));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::uint64_t ParticipantSeed(std::uint64_t seed, int round, const std::string& user_id,
                              int stream) {
  return MixSeed({seed, static_cast<std::uint64_t>(round), UserHash(user_id),
                  static_cast<std::uint64_t>(stream)});
}

Coordinator::Coordinator(CoordinatorConfig config, Transport& transport)
    : config_(std::move(config)), transport_(transport) {}

std::string Coordinator::Authenticate(const std::string& token) const {
  if (token.empty()) Fail(ErrorCode::kInvalidToken, "empty application token");
  auto it = config_.tokens.find(token);
  if (it == config_.tokens.end()) Fail(ErrorCode::kInvalidToken, "unknown application token");
  return it->second;
}

RoundResult Coordinator::RunRound(int round, const fl::ModelParams& model,
                                  const std::vector<std::string>& participants,
                                  const std::map<std::string, std::string>& group_of,
                                  const std::map<std::string, Policy>& views,
                                  const TrainingRequest& request, const fl::DpConfig& dp,
                                  std::chrono::milliseconds timeout) {
  std::vector<std::string> ids = participants;
  std::sort(ids.begin(), ids.end());
  std::vector<Exchange> xs;
  for (const auto& u : ids) {
    const std::string& g = group_of.at(u);
    TaskMessage t;
    t.round = round;
    t.user_id = u;
    t.model = model;
    t.model_policy = views.at(g).ToString();
    t.program = request.LocalProgramFor(g);
    t.spec = config_.spec;
    t.train = config_.train;
    t.train.seed = ParticipantSeed(config_.seed, round, u, 1);
    t.dp = dp;
    t.noise_seed = ParticipantSeed(config_.seed, round, u, 2);
    xs.push_back({u, t.ToMessage()});
  }

  RoundResult rr;
  auto t0 = Clock::now();
  std::vector<ExchangeOutcome> outcomes = transport_.ExchangeAll(xs, timeout);
  rr.span_ms = Ms(Clock::now() - t0);

  std::vector<std::pair<std::string, dpp::DataPolicyPair>> updates;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string& u = ids[i];
    ExchangeOutcome& o = outcomes[i];
    if (!o.reply) {
      rr.failures.push_back({u, o.code, o.detail});
      continue;
    }
    try {
      if (o.reply->kind == MessageKind::kError) {
        ErrorMessage e = ErrorMessage::FromMessage(*o.reply);
        rr.failures.push_back({u, e.code, e.detail});
        continue;
      }
      ResultMessage r = ResultMessage::FromMessage(*o.reply);
      if (r.user_id != u || r.round != round) Fail(ErrorCode::kProtocol, "RESULT for another task");
      if (r.tte_ms < 0) Fail(ErrorCode::kProtocol, "negative TTE");
      ParticipantTiming pt{u, o.ttd_ms, r.tte_ms, std::max(0.0, o.wait_ms - r.tte_ms),
                           o.ttd_ms + o.wait_ms};
      rr.timings.push_back(pt);
      if (!r.ok) {
        rr.failures.push_back({u, r.code, r.detail});
        continue;
      }
      Policy p = policy::ParsePolicy(r.update_policy);
      if (!ReleasableToCoordinator(p)) {
        Fail(ErrorCode::kPolicyViolation, "released update is not accumulable");
      }
      if (!r.update->ConformableWith(model)) {
        Fail(ErrorCode::kShapeMismatch, "update does not match the model layout");
      }
      updates.emplace_back(u, dpp::DataPolicyPair(dpp::Payload::Update(*r.update), p));
    } catch (const Error& e) {
      rr.failures.push_back({u, e.code(), e.what()});
    }
  }

  auto a0 = Clock::now();
  dpp::FlContext ctx;
  ctx.round = round;
  dpp::DataPolicyPair sum(dpp::Payload::Update(model.ZerosLike()), policy::Top());
  for (const auto& [u, upd] : updates) {
    const dpp::DataPolicyPair* in[] = {&sum, &upd};
    const std::string& g = group_of.at(u);
    try {
      dpp::DataPolicyPair next =
          dpp::Invoke(in, CommandInvocation("accumulate"), dpp::FlRegistry(), ctx, dpp::Role::kGlobal);
      auto [it, fresh] = rr.group_sums.try_emplace(g, policy::Top());
      Policy ps[] = {it->second, upd.policy()};
      it->second = dpp::CheckInvocation(ps, CommandInvocation("accumulate"));
      sum = std::move(next);
      rr.contributors.push_back(u);
    } catch (const Error& e) {
      rr.failures.push_back({u, e.code(), e.what()});
    }
  }
  rr.accumulate_ms = Ms(Clock::now() - a0);
  if (!rr.contributors.empty()) rr.sum = std::move(sum);
  return rr;
}

ScheduleOutcome Coordinator::RunSchedule(const TrainingRequest& request,
                                         const GroupSchedule& schedule,
                                         const fl::ModelParams& initial,
                                         const RoundObserver& observer) {
  ScheduleOutcome out;
  const dpp::CommandRegistry& registry = dpp::FlRegistry();
  try {
    out.service = Authenticate(request.token);
    std::vector<Phase> phases = PlanPhases(schedule);

    if (request.global_program.role != dpp::Role::kGlobal) {
      Fail(ErrorCode::kInvalidArgument, "global program must have role global");
    }
    if (request.global_program.steps.empty()) Fail(ErrorCode::kInvalidArgument, "empty global program");
    const std::string& global_out = request.global_program.steps.back().out;
    dpp::PreflightProgram(request.global_program, {{"model", policy::Top()}, {"sum", policy::Top()}},
                          registry);

    std::map<std::string, std::string> group_of;
    std::map<std::string, std::string> train_cmd;
    std::map<std::string, Policy> views;
    for (const auto& g : schedule.groups) {
      const dpp::RestrictedProgram& local = request.LocalProgramFor(g.id);
      if (local.role != dpp::Role::kLocal) {
        Fail(ErrorCode::kInvalidArgument, "local program must have role local");
      }
      if (local.steps.empty()) Fail(ErrorCode::kInvalidArgument, "empty local program");
      train_cmd[g.id] = TrainCommandOf(local);
      // Policy-only check against the group's data policy; no node is
      // contacted when it fails.
      dpp::PolicyMap pm =
          dpp::PreflightProgram(local, {{kDataSlot, g.policy}, {kModelSlot, policy::Top()}}, registry);
      const Policy& released = pm.at(local.steps.back().out);
      if (!ReleasableToCoordinator(released)) {
        throw PolicyViolation("release", released.ToString());
      }
      for (const auto& u : g.members) {
        group_of[u] = g.id;
        if (!transport_.Hosts(u)) Fail(ErrorCode::kTransport, "no edge node hosts '" + u + "'");
      }
      views.emplace(g.id, policy::Top());
      out.ledger.RegisterGroup(g.id);
    }

    fl::ModelParams model = initial;
    std::set<std::string> non_private;
    std::chrono::milliseconds timeout = config_.timeout.value_or(std::chrono::seconds(30));
    int t = 0;
    for (std::size_t pi = 0; pi < phases.size(); ++pi) {
      const Phase& phase = phases[pi];
      std::set<std::string> phase_train;
      for (const auto& g : phase.groups) phase_train.insert(train_cmd.at(g));
      double q = static_cast<double>(phase.round_size) / static_cast<double>(phase.pool.size());
      for (int r = 0; r < phase.rounds; ++r) {
        ++t;
        // Every group's view must allow the model to be trained again.
        std::map<std::string, Policy> advanced;
        for (const auto& [g, v] : views) {
          Policy a = v;
          for (const auto& c : phase_train) {
            a = dpp::CheckInvocation(std::span(&a, 1), CommandInvocation(c));
          }
          for (const char* c : {"accumulate", "average"}) {
            a = dpp::CheckInvocation(std::span(&a, 1), CommandInvocation(c));
          }
          advanced.emplace(g, a);
        }

        RoundRecord rec;
        rec.round = t;
        rec.phase = static_cast<int>(pi);
        rec.participants = SampleParticipants(phase.pool, phase.round_size, t, config_.seed);
        RoundResult rr =
            RunRound(t, model, rec.participants, group_of, views, request, phase.dp, timeout);
        rec.timings = rr.timings;
        rec.failures = rr.failures;
        rec.span_ms = rr.span_ms;
        if (!rr.sum) {
          Fail(ErrorCode::kRoundFailed,
               "round " + std::to_string(t) + ": no participant returned a usable update");
        }

        auto p0 = Clock::now();
        dpp::FlContext gctx;
        gctx.round = t;
        gctx.eta = config_.eta;
        gctx.n = config_.divisor == Divisor::kTotal ? static_cast<int>(phase.pool.size())
                                                    : static_cast<int>(rr.contributors.size());
        if (phase.dp.enabled() && phase.dp.placement == fl::NoisePlacement::kServer) {
          gctx.server_noise_std = phase.dp.ServerNoiseStd();
          gctx.server_noise_seed = MixSeed({config_.seed, static_cast<std::uint64_t>(t), 3});
        }
        std::map<std::string, Policy> next_views;
        std::optional<fl::ModelParams> next_model;
        for (const auto& g : schedule.groups) {
          auto gs = rr.group_sums.find(g.id);
          if (gs == rr.group_sums.end()) {
            next_views.emplace(g.id, advanced.at(g.id));
            continue;
          }
          if (!next_model) {
            dpp::SlotMap slots;
            slots.emplace("model", dpp::DataPolicyPair(dpp::Payload::Model(model), views.at(g.id)));
            slots.emplace("sum", rr.sum->WithPolicy(gs->second));
            dpp::SlotMap o = dpp::RunProgram(request.global_program, std::move(slots), registry, gctx);
            const dpp::DataPolicyPair& res = o.at(global_out);
            if (res.kind() != dpp::PayloadKind::kModel) {
              Fail(ErrorCode::kInvalidArgument, "global program must produce a model");
            }
            next_model = dpp::TrustedAccess::value(res).params();
            next_views.emplace(g.id, res.policy());
          } else {
            dpp::PolicyMap pm = dpp::PreflightProgram(
                request.global_program, {{"model", views.at(g.id)}, {"sum", gs->second}}, registry);
            next_views.emplace(g.id, pm.at(global_out));
          }
        }
        rec.ttp_ms = rr.accumulate_ms + Ms(Clock::now() - p0);
        model = std::move(*next_model);
        views = std::move(next_views);

        if (phase.dp.enabled()) {
          double z = phase.dp.EffectiveNoiseMultiplier();
          for (const auto& g : phase.charged) out.ledger.ChargeRound(g, q, z);
        } else {
          for (const auto& [g, p] : rr.group_sums) non_private.insert(g);
        }
        for (const auto& g : schedule.groups) {
          rec.spent[g.id] = non_private.count(g.id) ? std::numeric_limits<double>::infinity()
                                                    : out.ledger.Spent(g.id).epsilon;
        }
        if (!config_.timeout) {
          std::vector<double> tte;
          for (const auto& pt : rr.timings) tte.push_back(pt.tte_ms);
          auto adaptive = std::chrono::milliseconds(static_cast<long>(10 * Median(tte)));
          timeout = std::max<std::chrono::milliseconds>(std::chrono::seconds(1), adaptive);
        }
        out.rounds.push_back(std::move(rec));
        if (observer) observer(out.rounds.back(), model);
      }
    }

    // Terminal requirements of every group's view of the model.
    dpp::FlContext fctx;
    fctx.ledger = &out.ledger;
    for (const auto& g : schedule.groups) {
      Policy v = views.at(g.id);
      if (g.max_epsilon) {
        if (non_private.count(g.id)) {
          throw BudgetExceeded(g.id, std::numeric_limits<double>::infinity(), *g.max_epsilon);
        }
        CommandInvocation inv = dpp::EnforceBudgetInvocation(*g.max_epsilon, g.id);
        if (!policy::Derive(v, inv).is_zero()) {
          dpp::DataPolicyPair d(dpp::Payload::Model(model), v);
          const dpp::DataPolicyPair* in[] = {&d};
          v = dpp::Invoke(in, inv, registry, fctx, dpp::Role::kGlobal).policy();
        } else {
          dp::BudgetCheck c = dp::EnforceDpBudget(out.ledger, g.id, *g.max_epsilon);
          if (!c.pass) throw BudgetExceeded(g.id, c.spent, c.max_epsilon);
        }
      }
      if (!dpp::CanReturn(v)) throw PolicyViolation("return", v.ToString());
      out.final_views[g.id] = v.ToString();
    }
    out.ok = true;
    out.model = std::move(model);
  } catch (const Error& e) {
    out.ok = false;
    out.code = e.code();
    out.detail = e.what();
    out.model.reset();
    out.final_views.clear();
  }
  return out;
}

}  // namespace polifed::net
