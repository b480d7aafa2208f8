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

// Operator command line. Talks to the library only through the C API.

#include <chrono>
#include <csignal>
#include <filesystem>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polifed/polifed_c.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRejected = 3;
constexpr std::uint16_t kDefaultPort = 7070;

volatile std::sig_atomic_t g_stop = 0;

void OnSignal(int) { g_stop = 1; }

void InstallSignals() {
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
}

int Report(polifed_status s, const std::string& detail) {
  nlohmann::json j = {{"error", {{"code", polifed_status_name(s)}, {"detail", detail}}}};
  std::cerr << j.dump() << "\n";
  return kExitError;
}

int Report(polifed_status s) { return Report(s, polifed_last_error()); }

std::string Take(char* s) {
  std::string out = s ? s : "";
  polifed_string_free(s);
  return out;
}

bool SplitHostPort(const std::string& text, std::string& host, std::uint16_t& port) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) return false;
  host = text.substr(0, colon);
  try {
    int p = std::stoi(text.substr(colon + 1));
    if (p < 1 || p > 65535) return false;
    port = static_cast<std::uint16_t>(p);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

// Splits on commas outside quotes, parentheses and brackets.
std::vector<std::string> SplitTrace(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  char quote = 0;
  for (char ch : text) {
    if (quote) {
      if (ch == quote) quote = 0;
    } else if (ch == '\'' || ch == '"') {
      quote = ch;
    } else if (ch == '(' || ch == '[') {
      ++depth;
    } else if (ch == ')' || ch == ']') {
      --depth;
    } else if (ch == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
      continue;
    }
    cur += ch;
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

// Prints the run summary; rejected runs also put an error object on stderr.
// Policy and budget refusals exit with kExitRejected.
int FinishRun(polifed_run* run) {
  char* summary = nullptr;
  polifed_status s = polifed_run_summary_json(run, &summary);
  if (s != POLIFED_OK) return Report(s);
  std::cout << Take(summary) << "\n";
  polifed_status verdict = polifed_run_verdict(run);
  if (verdict == POLIFED_OK) return 0;
  Report(verdict, polifed_run_detail(run));
  bool refused = verdict == POLIFED_POLICY_VIOLATION || verdict == POLIFED_BUDGET_EXCEEDED;
  return refused ? kExitRejected : kExitError;
}

// A trace naming a macro is checked against the unexpanded policy.
int PolicyCheck(const std::string& text, const std::string& trace) {
  std::vector<std::string> steps = SplitTrace(trace);
  bool symbolic = false;
  for (const auto& cmd : steps) {
    symbolic |= polifed_is_macro_name(cmd.substr(0, cmd.find('(')).c_str()) == 1;
  }
  polifed_policy* p = nullptr;
  polifed_status s = symbolic ? polifed_policy_parse(text.c_str(), &p)
                              : polifed_policy_compile(text.c_str(), &p);
  if (s != POLIFED_OK) return Report(s);
  auto show = [](const polifed_policy* q) {
    char* str = nullptr;
    polifed_policy_to_string(q, &str);
    return Take(str);
  };
  std::cout << "start: " << show(p) << "\n";
  int step = 0;
  for (const auto& cmd : steps) {
    polifed_policy* next = nullptr;
    s = polifed_policy_derive(p, cmd.c_str(), &next);
    if (s != POLIFED_OK) {
      polifed_policy_free(p);
      return Report(s);
    }
    polifed_policy_free(p);
    p = next;
    std::cout << "step " << ++step << " " << cmd << ": " << show(p) << "\n";
  }
  bool accept = polifed_policy_nullable(p) == 1;
  polifed_policy_free(p);
  std::cout << (accept ? "accept" : "reject") << "\n";
  return accept ? 0 : kExitRejected;
}

int Serve(const std::string& config, const std::string& host, std::uint16_t port) {
  polifed_server* server = nullptr;
  polifed_status s = polifed_server_start(config.c_str(), host.c_str(), port, &server);
  if (s != POLIFED_OK) return Report(s);
  InstallSignals();
  std::cout << nlohmann::json({{"listening", host}, {"port", polifed_server_port(server)}}).dump()
            << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  polifed_server_free(server);
  return 0;
}

int Edge(const std::string& config, const std::string& coordinator) {
  std::string host;
  std::uint16_t port = 0;
  if (!SplitHostPort(coordinator, host, port)) {
    return Report(POLIFED_INVALID_ARGUMENT, "coordinator must be HOST:PORT");
  }
  polifed_edge* edge = nullptr;
  polifed_status s = polifed_edge_start(config.c_str(), host.c_str(), port, &edge);
  if (s != POLIFED_OK) return Report(s);
  InstallSignals();
  std::cout << nlohmann::json({{"coordinator", coordinator}, {"users", polifed_edge_users(edge)}}).dump()
            << std::endl;
  while (!g_stop && polifed_edge_running(edge)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  s = polifed_edge_stop(edge);
  int rc = s == POLIFED_OK ? 0 : Report(s);
  polifed_edge_free(edge);
  return rc;
}

int Submit(const std::string& scenario_path, std::string token, const std::string& coordinator,
           unsigned timeout_ms, const std::string& out_dir) {
  std::string host;
  std::uint16_t port = 0;
  if (!SplitHostPort(coordinator, host, port)) {
    return Report(POLIFED_INVALID_ARGUMENT, "coordinator must be HOST:PORT");
  }
  if (token.empty()) {
    if (const char* env = std::getenv("POLIFED_TOKEN")) token = env;
  }
  if (token.empty()) return Report(POLIFED_INVALID_ARGUMENT, "no token: pass --token or set POLIFED_TOKEN");
  polifed_scenario* sc = nullptr;
  polifed_status s = polifed_scenario_load(scenario_path.c_str(), &sc);
  if (s != POLIFED_OK) return Report(s);
  polifed_run* run = nullptr;
  s = polifed_submit(sc, token.c_str(), host.c_str(), port, timeout_ms, &run);
  polifed_scenario_free(sc);
  if (s != POLIFED_OK) return Report(s);
  if (!out_dir.empty() && polifed_run_verdict(run) == POLIFED_OK) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    s = polifed_run_write_model(run, (std::filesystem::path(out_dir) / "final.model").c_str());
    if (s != POLIFED_OK) {
      polifed_run_free(run);
      return Report(s);
    }
  }
  int rc = FinishRun(run);
  polifed_run_free(run);
  return rc;
}

int Simulate(const std::string& scenario_path, std::string out_dir) {
  polifed_scenario* sc = nullptr;
  polifed_status s = polifed_scenario_load(scenario_path.c_str(), &sc);
  if (s != POLIFED_OK) return Report(s);
  if (out_dir.empty()) out_dir = polifed_scenario_output_dir(sc);
  polifed_run* run = nullptr;
  s = polifed_simulate(sc, &run);
  polifed_scenario_free(sc);
  if (s != POLIFED_OK) return Report(s);
  if (!out_dir.empty()) {
    s = polifed_run_write_dir(run, out_dir.c_str());
    if (s != POLIFED_OK) {
      polifed_run_free(run);
      return Report(s);
    }
  }
  int rc = FinishRun(run);
  polifed_run_free(run);
  return rc;
}

int RunReport(const std::string& dir, const std::string& format) {
  char* text = nullptr;
  polifed_status s = format == "csv" ? polifed_report_csv(dir.c_str(), &text)
                                     : polifed_report_json(dir.c_str(), &text);
  if (s != POLIFED_OK) return Report(s);
  std::cout << Take(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PoliFed: policy-governed federated learning"};
  app.require_subcommand(1);
  int rc = 0;

  std::string config, host = "127.0.0.1", coordinator = "127.0.0.1:" + std::to_string(kDefaultPort);
  std::string scenario, token, out_dir, policy_text, trace, run_dir, format = "json";
  std::uint16_t port = kDefaultPort;
  unsigned timeout_ms = 600000;

  auto* serve = app.add_subcommand("serve", "Run the coordinator");
  serve->add_option("--config", config, "Serve config JSON (tokens, wait_timeout_ms, run_root)")
      ->required()
      ->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port; 0 picks a free one")->capture_default_str();
  serve->add_option("--host", host, "Address to bind")->capture_default_str();
  serve->callback([&] { rc = Serve(config, host, port); });

  auto* edge = app.add_subcommand("edge", "Run an edge node");
  edge->add_option("--config", config, "Edge config JSON (scenario, users or shard)")
      ->required()
      ->check(CLI::ExistingFile);
  edge->add_option("--coordinator", coordinator, "HOST:PORT")->required();
  edge->callback([&] { rc = Edge(config, coordinator); });

  auto* submit = app.add_subcommand("submit", "Submit a scenario to a coordinator");
  submit->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  submit->add_option("--token", token, "Access token (default: $POLIFED_TOKEN)");
  submit->add_option("--coordinator", coordinator, "HOST:PORT")->capture_default_str();
  submit->add_option("--timeout-ms", timeout_ms, "Overall wait for FINAL")->capture_default_str();
  submit->add_option("--out", out_dir, "Directory for final.model");
  submit->callback([&] { rc = Submit(scenario, token, coordinator, timeout_ms, out_dir); });

  auto* simulate = app.add_subcommand("simulate", "Run a scenario in one process");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Run directory (default: the scenario's output_dir)");
  simulate->callback([&] { rc = Simulate(scenario, out_dir); });

  auto* policy = app.add_subcommand("policy", "Offline policy tools");
  policy->require_subcommand(1);
  auto* check = policy->add_subcommand("check", "Derive a policy along a trace");
  check->add_option("--policy", policy_text, "Policy text")->required();
  check->add_option("--trace", trace, "Comma-separated commands")->required();
  check->callback([&] { rc = PolicyCheck(policy_text, trace); });

  auto* report = app.add_subcommand("report", "Summarize a run directory");
  report->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  report->callback([&] { rc = RunReport(run_dir, format); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Report(POLIFED_INVALID_ARGUMENT, e.what());
    return kExitUsage;
  }
  return rc;
}
