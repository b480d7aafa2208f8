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

#include "polifed/app/run.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "polifed/common/error.h"
#include "polifed/net/edge.h"

namespace polifed::app {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string Num(double v) { return std::isfinite(v) ? Fmt("%.10g", v) : "inf"; }

json JsonNum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write '" + p.string() + "'");
  out << text;
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + p.string() + "'");
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> ReadCsvRows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(ReadFile(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

double ParseNum(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    Fail(ErrorCode::kParse, "not a number: '" + s + "'");
  }
}

double Quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json SpentJson(const std::map<std::string, double>& spent) {
  json j = json::object();
  for (const auto& [g, e] : spent) j[g] = JsonNum(e);
  return j;
}

}  // namespace

Evaluator::Evaluator(const ScenarioConfig& c, const Population& pop) : name_(MetricName(c)) {
  net::ModelSpec s = BuildModelSpec(c);
  task_ = fl::MakeTask(s.model, s.dim, s.classes, s.hidden);
  pooled_.dim = s.dim;
  for (const auto& u : pop.users) {
    fl::Examples ex = data::ToExamples(u, s.features);
    pooled_.features.insert(pooled_.features.end(), ex.features.begin(), ex.features.end());
    pooled_.labels.insert(pooled_.labels.end(), ex.labels.begin(), ex.labels.end());
  }
}

double Evaluator::operator()(const fl::ModelParams& m) const {
  return name_ == "auc" ? fl::RocAuc(*task_, m, pooled_) : fl::Accuracy(*task_, m, pooled_);
}

RunReport RunScenario(const ScenarioConfig& c, const net::TrainingRequest& request,
                      const std::map<std::string, std::string>& tokens,
                      net::Transport& transport) {
  Population pop = BuildPopulation(c);
  Evaluator eval(c, pop);
  RunReport r;
  r.scenario = c;
  r.metric_name = eval.name();
  net::CoordinatorConfig cc = BuildCoordinatorConfig(c);
  cc.tokens = tokens;
  net::Coordinator coord(cc, transport);
  net::GroupSchedule sched = BuildSchedule(c, pop);
  r.outcome = coord.RunSchedule(request, sched, InitialModel(c),
                                [&](const net::RoundRecord& rec, const fl::ModelParams& m) {
                                  r.metrics.push_back({rec.round, rec.phase, eval(m), rec.spent});
                                });
  return r;
}

RunReport Simulate(const ScenarioConfig& c) {
  Population pop = BuildPopulation(c);
  net::InProcessTransport transport;
  net::EdgeConfig ec = BuildEdgeConfig(c);
  for (const auto& u : pop.users) {
    transport.Attach(std::make_shared<net::EdgeNode>(HostedUsers(c, pop, {u.user_id}), ec));
  }
  return RunScenario(c, BuildRequest(c), {{c.token, "simulate"}}, transport);
}

net::FinalMessage ToFinal(const RunReport& r) {
  net::FinalMessage f;
  f.ok = r.outcome.ok;
  f.model = r.outcome.model;
  f.code = r.outcome.code;
  f.detail = r.outcome.detail;
  std::map<std::string, double> spent;
  if (!r.metrics.empty()) spent = r.metrics.back().spent;
  json series = json::array();
  for (const auto& m : r.metrics) series.push_back(m.metric);
  f.report = {{"metric", r.metric_name},
              {"rounds_completed", r.metrics.size()},
              {"spent", SpentJson(spent)},
              {"metric_series", series}};
  return f;
}

void WriteRunDir(const std::string& dir, const RunReport& r) {
  fs::path d(dir);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create '" + dir + "': " + ec.message());

  WriteFile(d / "config.json", ScenarioToJson(r.scenario).dump(2) + "\n");

  std::string timings = "round,participant,ttd_ms,tte_ms,ttr_ms,ttp_ms\n";
  for (const auto& rec : r.outcome.rounds) {
    for (const auto& t : rec.timings) {
      timings += std::to_string(rec.round) + "," + t.user_id + "," + Fmt("%.6f", t.ttd_ms) + "," +
                 Fmt("%.6f", t.tte_ms) + "," + Fmt("%.6f", t.ttr_ms) + "," +
                 Fmt("%.6f", rec.ttp_ms) + "\n";
    }
  }
  WriteFile(d / "timings.csv", timings);

  std::string metrics = "round,phase," + r.metric_name;
  for (const auto& g : r.scenario.groups) metrics += ",eps_" + g.id;
  metrics += "\n";
  for (const auto& m : r.metrics) {
    metrics += std::to_string(m.round) + "," + std::to_string(m.phase) + "," + Num(m.metric);
    for (const auto& g : r.scenario.groups) {
      auto it = m.spent.find(g.id);
      metrics += "," + (it == m.spent.end() ? std::string("0") : Num(it->second));
    }
    metrics += "\n";
  }
  WriteFile(d / "metrics.csv", metrics);

  WriteFile(d / "ledger.jsonl", r.outcome.ledger.ToJsonLines());

  if (r.outcome.ok) {
    std::vector<std::uint8_t> bytes = fl::EncodeModelParams(*r.outcome.model);
    WriteFile(d / "final.model", std::string(bytes.begin(), bytes.end()));
  } else {
    fs::remove(d / "final.model", ec);
  }

  json rep;
  rep["verdict"] = r.outcome.ok ? "FINAL" : "rejected";
  if (!r.outcome.ok) {
    rep["rejection"] = {{"code", ErrorCodeName(r.outcome.code)}, {"detail", r.outcome.detail}};
  }
  rep["metric"] = r.metric_name;
  rep["rounds_completed"] = r.metrics.size();
  rep["final_metric"] = r.metrics.empty() ? json(nullptr) : JsonNum(r.metrics.back().metric);
  rep["spent"] = SpentJson(r.metrics.empty() ? std::map<std::string, double>{} : r.metrics.back().spent);
  rep["delta"] = r.outcome.ledger.target_delta();
  rep["strategy"] = net::StrategyName(r.scenario.strategy);
  std::size_t failures = 0;
  for (const auto& rec : r.outcome.rounds) failures += rec.failures.size();
  rep["participant_failures"] = failures;
  rep["timing_csv"] = "timings.csv";
  rep["metrics_csv"] = "metrics.csv";
  rep["final_model"] = r.outcome.ok ? json("final.model") : json(nullptr);
  rep["final_views"] = r.outcome.final_views;
  WriteFile(d / "report.json", rep.dump(2) + "\n");
}

std::string ReportJson(const std::string& dir) {
  fs::path d(dir);
  json rep = json::parse(ReadFile(d / "report.json"), nullptr, false);
  if (rep.is_discarded()) Fail(ErrorCode::kParse, "report.json is not valid JSON");
  auto metrics = ReadCsvRows(d / "metrics.csv");
  auto timings = ReadCsvRows(d / "timings.csv");
  if (metrics.empty() || timings.empty()) Fail(ErrorCode::kParse, "missing CSV header");

  json out;
  out["verdict"] = rep.value("verdict", "");
  if (rep.contains("rejection")) out["rejection"] = rep["rejection"];
  out["strategy"] = rep.value("strategy", "");
  out["metric"] = rep.value("metric", "");
  out["final_metric"] = rep.value("final_metric", json(nullptr));
  out["spent"] = rep.value("spent", json::object());
  out["rounds_completed"] = metrics.size() - 1;
  json series = json::array();
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    if (metrics[i].size() < 3) Fail(ErrorCode::kParse, "short metrics row");
    series.push_back(JsonNum(ParseNum(metrics[i][2])));
  }
  out["metric_series"] = series;

  std::vector<double> ttd, tte, ttr;
  std::map<long, double> ttp;
  for (std::size_t i = 1; i < timings.size(); ++i) {
    const auto& row = timings[i];
    if (row.size() != 6) Fail(ErrorCode::kParse, "timings row needs 6 fields");
    ttd.push_back(ParseNum(row[2]));
    tte.push_back(ParseNum(row[3]));
    ttr.push_back(ParseNum(row[4]));
    ttp[std::stol(row[0])] = ParseNum(row[5]);
  }
  std::vector<double> ttp_v;
  for (const auto& [r, v] : ttp) ttp_v.push_back(v);
  auto stats = [](const std::vector<double>& v) {
    return json{{"median", Quantile(v, 0.5)}, {"p90", Quantile(v, 0.9)}, {"count", v.size()}};
  };
  out["timing_ms"] = {{"ttd", stats(ttd)}, {"tte", stats(tte)}, {"ttr", stats(ttr)}, {"ttp", stats(ttp_v)}};
  return out.dump(2) + "\n";
}

std::string ReportCsv(const std::string& dir) {
  fs::path d(dir);
  auto metrics = ReadCsvRows(d / "metrics.csv");
  auto timings = ReadCsvRows(d / "timings.csv");
  if (metrics.empty() || timings.empty()) Fail(ErrorCode::kParse, "missing CSV header");
  std::map<long, std::vector<double>> ttd, tte, ttr;
  std::map<long, double> ttp;
  for (std::size_t i = 1; i < timings.size(); ++i) {
    const auto& row = timings[i];
    if (row.size() != 6) Fail(ErrorCode::kParse, "timings row needs 6 fields");
    long r = std::stol(row[0]);
    ttd[r].push_back(ParseNum(row[2]));
    tte[r].push_back(ParseNum(row[3]));
    ttr[r].push_back(ParseNum(row[4]));
    ttp[r] = ParseNum(row[5]);
  }
  std::string out;
  for (std::size_t i = 0; i < metrics[0].size(); ++i) out += (i ? "," : "") + metrics[0][i];
  out += ",median_ttd_ms,median_tte_ms,median_ttr_ms,ttp_ms\n";
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    const auto& row = metrics[i];
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + row[k];
    long r = std::stol(row[0]);
    out += "," + Fmt("%.6f", Quantile(ttd[r], 0.5)) + "," + Fmt("%.6f", Quantile(tte[r], 0.5)) + "," +
           Fmt("%.6f", Quantile(ttr[r], 0.5)) + "," + Fmt("%.6f", ttp.count(r) ? ttp[r] : 0.0) + "\n";
  }
  return out;
}

}  // namespace polifed::app
