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

// Typed bodies of the wire messages.

#ifndef POLIFED_NET_MESSAGES_H_
#define POLIFED_NET_MESSAGES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polifed/common/error.h"
#include "polifed/dpp/runtime.h"
#include "polifed/fl/model_params.h"
#include "polifed/fl/training.h"
#include "polifed/net/wire.h"

namespace polifed::net {

nlohmann::json TrainConfigToJson(const fl::TrainConfig& c);
fl::TrainConfig TrainConfigFromJson(const nlohmann::json& j);
// clip_bound null means unbounded.
nlohmann::json DpConfigToJson(const fl::DpConfig& c);
fl::DpConfig DpConfigFromJson(const nlohmann::json& j);

nlohmann::json ProgramToJson(const dpp::RestrictedProgram& p);
dpp::RestrictedProgram ProgramFromJson(const nlohmann::json& j);

std::string ModelToBase64(const fl::ModelParams& m);
fl::ModelParams ModelFromBase64(const std::string& text);

// What an edge node needs to rebuild the model task.
struct ModelSpec {
  std::string model = "logistic";
  std::size_t dim = 0;
  int classes = 2;
  std::size_t hidden = 16;
  std::vector<std::string> features;

  bool operator==(const ModelSpec&) const = default;
};

nlohmann::json ModelSpecToJson(const ModelSpec& s);
ModelSpec ModelSpecFromJson(const nlohmann::json& j);

struct SubmitMessage {
  std::string token;
  dpp::RestrictedProgram global_program;
  dpp::RestrictedProgram local_program;
  // Per-group replacements for local_program.
  std::map<std::string, dpp::RestrictedProgram> group_programs;
  nlohmann::json scenario = nlohmann::json::object();

  Message ToMessage() const;
  static SubmitMessage FromMessage(const Message& m);
};

struct TaskMessage {
  int round = 0;
  std::string user_id;
  fl::ModelParams model;
  std::string model_policy;
  dpp::RestrictedProgram program;
  ModelSpec spec;
  fl::TrainConfig train;
  fl::DpConfig dp;
  std::uint64_t noise_seed = 0;

  Message ToMessage() const;
  static TaskMessage FromMessage(const Message& m);
};

struct ResultMessage {
  int round = 0;
  std::string user_id;
  bool ok = false;
  // Present only when ok.
  std::optional<fl::ModelParams> update;
  std::string update_policy;
  ErrorCode code = ErrorCode::kInternal;
  std::string detail;
  double tte_ms = 0;

  Message ToMessage() const;
  static ResultMessage FromMessage(const Message& m);
};

struct FinalMessage {
  bool ok = false;
  std::optional<fl::ModelParams> model;
  ErrorCode code = ErrorCode::kInternal;
  std::string detail;
  nlohmann::json report = nlohmann::json::object();

  Message ToMessage() const;
  static FinalMessage FromMessage(const Message& m);
};

struct ErrorMessage {
  ErrorCode code = ErrorCode::kProtocol;
  std::string detail;

  Message ToMessage() const;
  static ErrorMessage FromMessage(const Message& m);
};

struct HelloMessage {
  std::vector<std::string> users;

  Message ToMessage() const;
  static HelloMessage FromMessage(const Message& m);
};

}  // namespace polifed::net

#endif  // POLIFED_NET_MESSAGES_H_
