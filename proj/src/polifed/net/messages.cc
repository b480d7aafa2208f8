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

#include "polifed/net/messages.h"

#include <cmath>
#include <limits>

namespace polifed::net {
namespace {

using nlohmann::json;

template <typename F>
auto Decode(const Message& m, MessageKind want, F&& body) {
  if (m.kind != want) {
    Fail(ErrorCode::kProtocol, std::string("expected ") + MessageKindName(want) + ", got " +
                                   MessageKindName(m.kind));
  }
  try {
    return body(m.body);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kProtocol, std::string(MessageKindName(want)) + " body: " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProtocol) throw;
    Fail(ErrorCode::kProtocol, std::string(MessageKindName(want)) + " body: " + e.what());
  }
}

}  // namespace

json TrainConfigToJson(const fl::TrainConfig& c) {
  return {{"epochs", c.epochs}, {"local_lr", c.local_lr}, {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

fl::TrainConfig TrainConfigFromJson(const json& j) {
  fl::TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.local_lr = j.value("local_lr", c.local_lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

json DpConfigToJson(const fl::DpConfig& c) {
  json j = {{"noise_sigma", c.noise_sigma},
            {"round_size", c.round_size},
            {"placement", c.placement == fl::NoisePlacement::kLocal ? "local" : "server"}};
  j["clip_bound"] = std::isinf(c.clip_bound) ? json(nullptr) : json(c.clip_bound);
  if (c.noise_multiplier) j["noise_multiplier"] = *c.noise_multiplier;
  return j;
}

fl::DpConfig DpConfigFromJson(const json& j) {
  fl::DpConfig c;
  if (j.contains("clip_bound") && !j["clip_bound"].is_null()) {
    c.clip_bound = j["clip_bound"].get<double>();
  }
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.round_size = j.value("round_size", c.round_size);
  std::string placement = j.value("placement", std::string("local"));
  if (placement == "local") {
    c.placement = fl::NoisePlacement::kLocal;
  } else if (placement == "server") {
    c.placement = fl::NoisePlacement::kServer;
  } else {
    Fail(ErrorCode::kInvalidArgument, "placement must be 'local' or 'server'");
  }
  if (j.contains("noise_multiplier") && !j["noise_multiplier"].is_null()) {
    c.noise_multiplier = j["noise_multiplier"].get<double>();
  }
  c.Validate();
  return c;
}

json ProgramToJson(const dpp::RestrictedProgram& p) { return json::parse(p.ToJson()); }

dpp::RestrictedProgram ProgramFromJson(const json& j) {
  return dpp::RestrictedProgram::FromJson(j.dump());
}

std::string ModelToBase64(const fl::ModelParams& m) {
  return Base64Encode(fl::EncodeModelParams(m));
}

fl::ModelParams ModelFromBase64(const std::string& text) {
  return fl::DecodeModelParams(Base64Decode(text));
}

json ModelSpecToJson(const ModelSpec& s) {
  return {{"model", s.model}, {"dim", s.dim}, {"classes", s.classes},
          {"hidden", s.hidden}, {"features", s.features}};
}

ModelSpec ModelSpecFromJson(const json& j) {
  ModelSpec s;
  s.model = j.at("model").get<std::string>();
  s.dim = j.at("dim").get<std::size_t>();
  s.classes = j.at("classes").get<int>();
  s.hidden = j.value("hidden", s.hidden);
  s.features = j.at("features").get<std::vector<std::string>>();
  return s;
}

Message SubmitMessage::ToMessage() const {
  json groups = json::object();
  for (const auto& [g, p] : group_programs) groups[g] = ProgramToJson(p);
  return {MessageKind::kSubmit,
          {{"token", token},
           {"global_program", ProgramToJson(global_program)},
           {"local_program", ProgramToJson(local_program)},
           {"group_programs", groups},
           {"scenario", scenario}}};
}

SubmitMessage SubmitMessage::FromMessage(const Message& m) {
  return Decode(m, MessageKind::kSubmit, [](const json& b) {
    SubmitMessage s;
    s.token = b.at("token").get<std::string>();
    s.global_program = ProgramFromJson(b.at("global_program"));
    s.local_program = ProgramFromJson(b.at("local_program"));
    if (b.contains("group_programs")) {
      for (const auto& [g, p] : b["group_programs"].items()) {
        s.group_programs.emplace(g, ProgramFromJson(p));
      }
    }
    s.scenario = b.value("scenario", json::object());
    return s;
  });
}

Message TaskMessage::ToMessage() const {
  return {MessageKind::kTask,
          {{"round", round},
           {"user_id", user_id},
           {"model", ModelToBase64(model)},
           {"policy", model_policy},
           {"local_program", ProgramToJson(program)},
           {"spec", ModelSpecToJson(spec)},
           {"train", TrainConfigToJson(train)},
           {"dp", DpConfigToJson(dp)},
           {"noise_seed", noise_seed}}};
}

TaskMessage TaskMessage::FromMessage(const Message& m) {
  return Decode(m, MessageKind::kTask, [](const json& b) {
    TaskMessage t;
    t.round = b.at("round").get<int>();
    t.user_id = b.at("user_id").get<std::string>();
    t.model = ModelFromBase64(b.at("model").get<std::string>());
    t.model_policy = b.at("policy").get<std::string>();
    t.program = ProgramFromJson(b.at("local_program"));
    t.spec = ModelSpecFromJson(b.at("spec"));
    t.train = TrainConfigFromJson(b.at("train"));
    t.dp = DpConfigFromJson(b.at("dp"));
    t.noise_seed = b.at("noise_seed").get<std::uint64_t>();
    return t;
  });
}

Message ResultMessage::ToMessage() const {
  json b = {{"round", round}, {"user_id", user_id}, {"ok", ok}, {"tte_ms", tte_ms}};
  if (ok) {
    b["update"] = ModelToBase64(*update);
    b["policy"] = update_policy;
  } else {
    b["error"] = {{"code", ErrorCodeName(code)}, {"detail", detail}};
  }
  return {MessageKind::kResult, b};
}

ResultMessage ResultMessage::FromMessage(const Message& m) {
  return Decode(m, MessageKind::kResult, [](const json& b) {
    ResultMessage r;
    r.round = b.at("round").get<int>();
    r.user_id = b.at("user_id").get<std::string>();
    r.ok = b.at("ok").get<bool>();
    r.tte_ms = b.at("tte_ms").get<double>();
    if (r.ok) {
      r.update = ModelFromBase64(b.at("update").get<std::string>());
      r.update_policy = b.at("policy").get<std::string>();
    } else {
      r.code = ParseErrorCode(b.at("error").at("code").get<std::string>());
      r.detail = b.at("error").at("detail").get<std::string>();
    }
    return r;
  });
}

Message FinalMessage::ToMessage() const {
  json b = {{"ok", ok}, {"report", report}};
  if (ok) {
    b["model"] = ModelToBase64(*model);
  } else {
    b["rejection"] = {{"code", ErrorCodeName(code)}, {"detail", detail}};
  }
  return {MessageKind::kFinal, b};
}

FinalMessage FinalMessage::FromMessage(const Message& m) {
  return Decode(m, MessageKind::kFinal, [](const json& b) {
    FinalMessage f;
    f.ok = b.at("ok").get<bool>();
    f.report = b.value("report", json::object());
    if (f.ok) {
      f.model = ModelFromBase64(b.at("model").get<std::string>());
    } else {
      f.code = ParseErrorCode(b.at("rejection").at("code").get<std::string>());
      f.detail = b.at("rejection").at("detail").get<std::string>();
    }
    return f;
  });
}

Message ErrorMessage::ToMessage() const {
  return {MessageKind::kError, {{"code", ErrorCodeName(code)}, {"detail", detail}}};
}

ErrorMessage ErrorMessage::FromMessage(const Message& m) {
  return Decode(m, MessageKind::kError, [](const json& b) {
    return ErrorMessage{ParseErrorCode(b.at("code").get<std::string>()),
                        b.at("detail").get<std::string>()};
  });
}

Message HelloMessage::ToMessage() const {
  return {MessageKind::kHello, {{"users", users}}};
}

HelloMessage HelloMessage::FromMessage(const Message& m) {
  return Decode(m, MessageKind::kHello, [](const json& b) {
    return HelloMessage{b.at("users").get<std::vector<std::string>>()};
  });
}

}  // namespace polifed::net
