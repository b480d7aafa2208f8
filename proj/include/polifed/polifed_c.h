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

// C interface to the policy engine, scenario runner, coordinator and edge
// node. Every handle is opaque and owned by the caller; strings returned
// through char** are heap-allocated and released with polifed_string_free.
// Functions returning polifed_status leave a message retrievable with
// polifed_last_error() on the calling thread when they fail.

#ifndef POLIFED_POLIFED_C_H_
#define POLIFED_POLIFED_C_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define POLIFED_API __declspec(dllexport)
#else
#define POLIFED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum polifed_status {
  POLIFED_OK = 0,
  POLIFED_INVALID_ARGUMENT = 1,
  POLIFED_PARSE = 2,
  POLIFED_POLICY_VIOLATION = 3,
  POLIFED_BUDGET_EXCEEDED = 4,
  POLIFED_UNKNOWN_COMMAND = 5,
  POLIFED_UNKNOWN_GROUP = 6,
  POLIFED_SLOT_REUSE = 7,
  POLIFED_MISSING_SLOT = 8,
  POLIFED_SHAPE_MISMATCH = 9,
  POLIFED_DIVERGENCE = 10,
  POLIFED_INVALID_TOKEN = 11,
  POLIFED_PROTOCOL = 12,
  POLIFED_TRANSPORT = 13,
  POLIFED_ROUND_FAILED = 14,
  POLIFED_IO = 15,
  POLIFED_INTERNAL = 16
} polifed_status;

typedef struct polifed_policy polifed_policy;
typedef struct polifed_scenario polifed_scenario;
typedef struct polifed_run polifed_run;
typedef struct polifed_server polifed_server;
typedef struct polifed_edge polifed_edge;

// Stable name such as "PolicyViolation"; "OK" for POLIFED_OK.
POLIFED_API const char* polifed_status_name(polifed_status status);
POLIFED_API const char* polifed_last_error(void);
POLIFED_API void polifed_string_free(char* s);

// Policies. Macros such as runFL are expanded by compile.
POLIFED_API polifed_status polifed_policy_compile(const char* text, polifed_policy** out);
// Parses without expanding macros; a macro name then derives like any command.
POLIFED_API polifed_status polifed_policy_parse(const char* text, polifed_policy** out);
// 1 if `name` has the shape of a macro such as runFL.
POLIFED_API int polifed_is_macro_name(const char* name);
// Reduced derivative by one command invocation, e.g. "filter(sensors=['mic'])".
POLIFED_API polifed_status polifed_policy_derive(const polifed_policy* p, const char* invocation,
                                                 polifed_policy** out);
POLIFED_API polifed_status polifed_policy_to_string(const polifed_policy* p, char** out);
POLIFED_API int polifed_policy_is_zero(const polifed_policy* p);
// 1 if the empty trace is accepted.
POLIFED_API int polifed_policy_nullable(const polifed_policy* p);
POLIFED_API void polifed_policy_free(polifed_policy* p);

// Scenarios.
POLIFED_API polifed_status polifed_scenario_load(const char* path, polifed_scenario** out);
POLIFED_API polifed_status polifed_scenario_parse(const char* json, polifed_scenario** out);
POLIFED_API polifed_status polifed_scenario_to_json(const polifed_scenario* s, char** out);
// Empty string when the scenario names none. Valid until the handle is freed.
POLIFED_API const char* polifed_scenario_output_dir(const polifed_scenario* s);
// Token the scenario carries; used when no other token is supplied.
POLIFED_API const char* polifed_scenario_token(const polifed_scenario* s);
POLIFED_API void polifed_scenario_free(polifed_scenario* s);

// Runs. A run that completes with a rejection still returns POLIFED_OK;
// polifed_run_verdict reports the rejection code.
POLIFED_API polifed_status polifed_simulate(const polifed_scenario* s, polifed_run** out);
POLIFED_API polifed_status polifed_submit(const polifed_scenario* s, const char* token,
                                          const char* host, uint16_t port, uint32_t timeout_ms,
                                          polifed_run** out);
POLIFED_API polifed_status polifed_run_verdict(const polifed_run* r);
POLIFED_API const char* polifed_run_detail(const polifed_run* r);
// {"ok", "code", "detail", "report"} without model bytes.
POLIFED_API polifed_status polifed_run_summary_json(const polifed_run* r, char** out);
// Encoded final model; *len is 0 when none was released.
POLIFED_API void polifed_run_model(const polifed_run* r, const uint8_t** data, size_t* len);
POLIFED_API polifed_status polifed_run_write_model(const polifed_run* r, const char* path);
// Full run directory; only for runs produced by polifed_simulate.
POLIFED_API polifed_status polifed_run_write_dir(const polifed_run* r, const char* dir);
POLIFED_API void polifed_run_free(polifed_run* r);

// Summaries of a run directory.
POLIFED_API polifed_status polifed_report_json(const char* dir, char** out);
POLIFED_API polifed_status polifed_report_csv(const char* dir, char** out);

// Coordinator. Serves in background threads until stopped; port 0 binds an
// ephemeral port.
POLIFED_API polifed_status polifed_server_start(const char* config_path, const char* host,
                                                uint16_t port, polifed_server** out);
POLIFED_API uint16_t polifed_server_port(const polifed_server* s);
POLIFED_API size_t polifed_server_edges(const polifed_server* s);
POLIFED_API void polifed_server_stop(polifed_server* s);
POLIFED_API void polifed_server_free(polifed_server* s);

// Edge node. Connects in a background thread and serves tasks.
POLIFED_API polifed_status polifed_edge_start(const char* config_path, const char* host,
                                              uint16_t port, polifed_edge** out);
POLIFED_API size_t polifed_edge_users(const polifed_edge* e);
// 1 while connected or retrying; 0 once the client exited.
POLIFED_API int polifed_edge_running(const polifed_edge* e);
// Stops the client and returns how it ended.
POLIFED_API polifed_status polifed_edge_stop(polifed_edge* e);
POLIFED_API void polifed_edge_free(polifed_edge* e);

#ifdef __cplusplus
}
#endif

#endif  // POLIFED_POLIFED_C_H_
