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

#include "polifed/polifed_c.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "polifed/app/deploy.h"
#include "polifed/app/run.h"
#include "polifed/app/scenario.h"
#include "polifed/common/error.h"
#include "polifed/fl/model_params.h"
#include "polifed/net/tcp.h"
#include "polifed/policy/macros.h"
#include "polifed/policy/parser.h"
#include "polifed/policy/policy.h"

using namespace polifed;

struct polifed_policy {
  policy::Policy p;
};

struct polifed_scenario {
  app::ScenarioConfig c;
};

struct polifed_run {
  net::FinalMessage final;
  std::vector<std::uint8_t> model;
  std::optional<app::RunReport> report;
};

struct polifed_server {
  app::ServeConfig config;
  std::unique_ptr<net::CoordinatorServer> server;
  std::atomic<int> submissions{0};
};

struct polifed_edge {
  std::unique_ptr<net::EdgeNode> node;
  std::atomic<bool> stop{false};
  std::atomic<bool> running{true};
  polifed_status status = POLIFED_OK;
  std::string error;
  std::thread thread;
};

namespace {

thread_local std::string last_error;

polifed_status Status(ErrorCode c) { return static_cast<polifed_status>(static_cast<int>(c)); }

polifed_status Record(polifed_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
polifed_status Guard(F&& f) {
  try {
    last_error.clear();
    f();
    return POLIFED_OK;
  } catch (const Error& e) {
    return Record(Status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Record(POLIFED_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Record(POLIFED_INTERNAL, e.what());
  } catch (...) {
    return Record(POLIFED_INTERNAL, "unknown failure");
  }
}

void Require(bool ok, const char* what) {
  if (!ok) Fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::unique_ptr<polifed_run> MakeRun(net::FinalMessage f) {
  auto r = std::make_unique<polifed_run>();
  if (f.ok && f.model) r->model = fl::EncodeModelParams(*f.model);
  r->final = std::move(f);
  return r;
}

}  // namespace

extern "C" {

const char* polifed_status_name(polifed_status status) {
  if (status == POLIFED_OK) return "OK";
  if (status < POLIFED_INVALID_ARGUMENT || status > POLIFED_INTERNAL) return "Unknown";
  return ErrorCodeName(static_cast<ErrorCode>(static_cast<int>(status)));
}

const char* polifed_last_error(void) { return last_error.c_str(); }

void polifed_string_free(char* s) { std::free(s); }

polifed_status polifed_policy_compile(const char* text, polifed_policy** out) {
  return Guard([&] {
    Require(text && out, "text and out");
    *out = new polifed_policy{policy::CompilePolicy(text)};
  });
}

polifed_status polifed_policy_parse(const char* text, polifed_policy** out) {
  return Guard([&] {
    Require(text && out, "text and out");
    *out = new polifed_policy{policy::Reduce(policy::ParsePolicy(text))};
  });
}

int polifed_is_macro_name(const char* name) {
  return name && policy::MacroTable::IsMacroName(name) ? 1 : 0;
}

polifed_status polifed_policy_derive(const polifed_policy* p, const char* invocation,
                                     polifed_policy** out) {
  return Guard([&] {
    Require(p && invocation && out, "policy, invocation and out");
    *out = new polifed_policy{policy::Derive(p->p, policy::ParseInvocation(invocation))};
  });
}

polifed_status polifed_policy_to_string(const polifed_policy* p, char** out) {
  return Guard([&] {
    Require(p && out, "policy and out");
    *out = Dup(p->p.ToString());
  });
}

int polifed_policy_is_zero(const polifed_policy* p) { return p && p->p.is_zero() ? 1 : 0; }

int polifed_policy_nullable(const polifed_policy* p) { return p && policy::Emptiness(p->p) ? 1 : 0; }

void polifed_policy_free(polifed_policy* p) { delete p; }

polifed_status polifed_scenario_load(const char* path, polifed_scenario** out) {
  return Guard([&] {
    Require(path && out, "path and out");
    *out = new polifed_scenario{app::LoadScenario(path)};
  });
}

polifed_status polifed_scenario_parse(const char* json, polifed_scenario** out) {
  return Guard([&] {
    Require(json && out, "json and out");
    nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
    if (j.is_discarded()) Fail(ErrorCode::kParse, "scenario is not valid JSON");
    *out = new polifed_scenario{app::ScenarioFromJson(j)};
  });
}

polifed_status polifed_scenario_to_json(const polifed_scenario* s, char** out) {
  return Guard([&] {
    Require(s && out, "scenario and out");
    *out = Dup(app::ScenarioToJson(s->c).dump(2));
  });
}

const char* polifed_scenario_output_dir(const polifed_scenario* s) {
  return s ? s->c.output_dir.c_str() : "";
}

const char* polifed_scenario_token(const polifed_scenario* s) { return s ? s->c.token.c_str() : ""; }

void polifed_scenario_free(polifed_scenario* s) { delete s; }

polifed_status polifed_simulate(const polifed_scenario* s, polifed_run** out) {
  return Guard([&] {
    Require(s && out, "scenario and out");
    app::RunReport rep = app::Simulate(s->c);
    auto r = MakeRun(app::ToFinal(rep));
    r->report = std::move(rep);
    *out = r.release();
  });
}

polifed_status polifed_submit(const polifed_scenario* s, const char* token, const char* host,
                              uint16_t port, uint32_t timeout_ms, polifed_run** out) {
  return Guard([&] {
    Require(s && token && host && out, "scenario, token, host and out");
    net::SubmitMessage m = app::MakeSubmit(s->c, token);
    *out = MakeRun(net::SubmitRequest(host, port, m, std::chrono::milliseconds(timeout_ms))).release();
  });
}

polifed_status polifed_run_verdict(const polifed_run* r) {
  if (!r) return POLIFED_INVALID_ARGUMENT;
  return r->final.ok ? POLIFED_OK : Status(r->final.code);
}

const char* polifed_run_detail(const polifed_run* r) { return r ? r->final.detail.c_str() : ""; }

polifed_status polifed_run_summary_json(const polifed_run* r, char** out) {
  return Guard([&] {
    Require(r && out, "run and out");
    nlohmann::json j = {{"ok", r->final.ok}, {"report", r->final.report}};
    if (!r->final.ok) {
      j["code"] = ErrorCodeName(r->final.code);
      j["detail"] = r->final.detail;
    }
    *out = Dup(j.dump(2));
  });
}

void polifed_run_model(const polifed_run* r, const uint8_t** data, size_t* len) {
  if (data) *data = r && !r->model.empty() ? r->model.data() : nullptr;
  if (len) *len = r ? r->model.size() : 0;
}

polifed_status polifed_run_write_model(const polifed_run* r, const char* path) {
  return Guard([&] {
    Require(r && path, "run and path");
    if (r->model.empty()) Fail(ErrorCode::kInvalidArgument, "run released no model");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(r->model.data()), static_cast<std::streamsize>(r->model.size()));
    if (!f) Fail(ErrorCode::kIo, std::string("cannot write '") + path + "'");
  });
}

polifed_status polifed_run_write_dir(const polifed_run* r, const char* dir) {
  return Guard([&] {
    Require(r && dir, "run and dir");
    if (!r->report) Fail(ErrorCode::kInvalidArgument, "run has no local report");
    app::WriteRunDir(dir, *r->report);
  });
}

void polifed_run_free(polifed_run* r) { delete r; }

polifed_status polifed_report_json(const char* dir, char** out) {
  return Guard([&] {
    Require(dir && out, "dir and out");
    *out = Dup(app::ReportJson(dir));
  });
}

polifed_status polifed_report_csv(const char* dir, char** out) {
  return Guard([&] {
    Require(dir && out, "dir and out");
    *out = Dup(app::ReportCsv(dir));
  });
}

polifed_status polifed_server_start(const char* config_path, const char* host, uint16_t port,
                                    polifed_server** out) {
  return Guard([&] {
    Require(config_path && host && out, "config, host and out");
    auto s = std::make_unique<polifed_server>();
    s->config = app::LoadServeConfig(config_path);
    polifed_server* raw = s.get();
    s->server = std::make_unique<net::CoordinatorServer>(
        host, port, [raw](const net::SubmitMessage& m, net::TcpTransport& t) {
          return app::ServeSubmit(m, t, raw->config, raw->submissions++);
        });
    s->server->Start();
    *out = s.release();
  });
}

uint16_t polifed_server_port(const polifed_server* s) { return s ? s->server->port() : 0; }

size_t polifed_server_edges(const polifed_server* s) { return s ? s->server->transport().num_edges() : 0; }

void polifed_server_stop(polifed_server* s) {
  if (s) s->server->Stop();
}

void polifed_server_free(polifed_server* s) { delete s; }

polifed_status polifed_edge_start(const char* config_path, const char* host, uint16_t port,
                                  polifed_edge** out) {
  return Guard([&] {
    Require(config_path && host && out, "config, host and out");
    auto e = std::make_unique<polifed_edge>();
    app::EdgeSetup setup = app::LoadEdgeSetup(config_path);
    e->node = app::MakeEdgeNode(setup);
    polifed_edge* raw = e.get();
    std::string h = host;
    net::EdgeClientOptions opts;
    opts.connect_timeout = setup.connect_timeout;
    e->thread = std::thread([raw, h, port, opts] {
      try {
        net::RunEdgeClient(*raw->node, h, port, raw->stop, opts);
      } catch (const Error& err) {
        raw->status = Status(err.code());
        raw->error = err.what();
      } catch (const std::exception& err) {
        raw->status = POLIFED_INTERNAL;
        raw->error = err.what();
      }
      raw->running = false;
    });
    *out = e.release();
  });
}

size_t polifed_edge_users(const polifed_edge* e) { return e ? e->node->user_ids().size() : 0; }

int polifed_edge_running(const polifed_edge* e) { return e && e->running ? 1 : 0; }

polifed_status polifed_edge_stop(polifed_edge* e) {
  if (!e) return POLIFED_INVALID_ARGUMENT;
  e->stop = true;
  if (e->thread.joinable()) e->thread.join();
  if (e->status != POLIFED_OK) return Record(e->status, e->error);
  return POLIFED_OK;
}

void polifed_edge_free(polifed_edge* e) {
  if (!e) return;
  polifed_edge_stop(e);
  delete e;
}

}  // extern "C"
