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

#include "polifed/net/edge.h"

#include <chrono>

#include "polifed/dpp/commands.h"
#include "polifed/fl/task.h"
#include "polifed/policy/parser.h"

namespace polifed::net {
namespace {

ResultMessage Rejected(const TaskMessage& t, ErrorCode code, const std::string& detail) {
  ResultMessage r;
  r.round = t.round;
  r.user_id = t.user_id;
  r.ok = false;
  r.code = code;
  r.detail = detail;
  return r;
}

}  // namespace

bool ReleasableToCoordinator(const policy::Policy& p) {
  if (dpp::CanReturn(p)) return true;
  return !policy::Derive(p, policy::CommandInvocation("accumulate")).is_zero();
}

EdgeNode::EdgeNode(std::vector<HostedUser> users, EdgeConfig config) : config_(std::move(config)) {
  for (auto& u : users) {
    std::string id = u.user_id;
    if (!users_.emplace(id, std::move(u)).second) {
      Fail(ErrorCode::kInvalidArgument, "user '" + id + "' hosted twice");
    }
    hook_calls_[id];
  }
}

std::vector<std::string> EdgeNode::user_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, u] : users_) ids.push_back(id);
  return ids;
}

ResultMessage EdgeNode::HandleTask(const TaskMessage& task) {
  std::lock_guard lock(mu_);
  auto start = std::chrono::steady_clock::now();
  auto finish = [&](ResultMessage r) {
    r.tte_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                   .count();
    return r;
  };

  auto it = users_.find(task.user_id);
  if (it == users_.end()) {
    return finish(Rejected(task, ErrorCode::kInvalidArgument,
                           "user '" + task.user_id + "' is not hosted here"));
  }
  const HostedUser& user = it->second;
  if (task.program.role != dpp::Role::kLocal) {
    return finish(Rejected(task, ErrorCode::kInvalidArgument, "TASK program must be local"));
  }
  if (task.program.steps.empty()) {
    return finish(Rejected(task, ErrorCode::kInvalidArgument, "empty local program"));
  }
  try {
    std::unique_ptr<fl::DifferentiableTask> model_task =
        fl::MakeTask(task.spec.model, task.spec.dim, task.spec.classes, task.spec.hidden);
    dpp::FlContext ctx;
    ctx.round = task.round;
    ctx.hook_calls = &hook_calls_[user.user_id];
    ctx.task = model_task.get();
    ctx.features = task.spec.features;
    ctx.train = task.train;
    ctx.dp = task.dp;
    ctx.noise_seed = task.noise_seed;
    ctx.data_type = config_.data_type;
    ctx.geofences = config_.geofences;

    dpp::SlotMap slots;
    slots.emplace(kDataSlot, dpp::DataPolicyPair(dpp::Payload::Dataset(user.data), user.policy));
    slots.emplace(kModelSlot, dpp::DataPolicyPair(dpp::Payload::Model(task.model),
                                                  policy::ParsePolicy(task.model_policy)));
    dpp::SlotMap out = dpp::RunProgram(task.program, std::move(slots), dpp::FlRegistry(), ctx);
    const dpp::DataPolicyPair& result = out.at(task.program.steps.back().out);
    if (result.kind() != dpp::PayloadKind::kUpdate) {
      return finish(Rejected(task, ErrorCode::kInvalidArgument,
                             std::string("local program produced a ") +
                                 dpp::PayloadKindName(result.kind()) + ", not an update"));
    }
    if (!ReleasableToCoordinator(result.policy())) {
      return finish(Rejected(task, ErrorCode::kPolicyViolation,
                             "policy '" + result.policy().ToString() +
                                 "' forbids release to the coordinator"));
    }
    ResultMessage r;
    r.round = task.round;
    r.user_id = task.user_id;
    r.ok = true;
    r.update = dpp::TrustedAccess::value(result).params();
    r.update_policy = result.policy().ToString();
    return finish(std::move(r));
  } catch (const Error& e) {
    return finish(Rejected(task, e.code(), e.what()));
  } catch (const std::exception& e) {
    return finish(Rejected(task, ErrorCode::kInternal, e.what()));
  }
}

Message EdgeNode::Handle(const Message& msg) {
  try {
    return HandleTask(TaskMessage::FromMessage(msg)).ToMessage();
  } catch (const Error& e) {
    return ErrorMessage{e.code(), e.what()}.ToMessage();
  }
}

std::vector<std::uint8_t> EdgeNode::HandleFrame(std::span<const std::uint8_t> frame) {
  try {
    FrameDecoder dec;
    dec.Feed(frame);
    std::optional<Message> m = dec.Next();
    if (!m || dec.buffered() != 0) {
      return EncodeFrame(ErrorMessage{ErrorCode::kProtocol, "expected exactly one frame"}.ToMessage());
    }
    return EncodeFrame(Handle(*m));
  } catch (const Error& e) {
    return EncodeFrame(ErrorMessage{e.code(), e.what()}.ToMessage());
  }
}

std::map<std::string, long> EdgeNode::hook_calls(const std::string& user_id) const {
  std::lock_guard lock(mu_);
  auto it = hook_calls_.find(user_id);
  if (it == hook_calls_.end()) Fail(ErrorCode::kInvalidArgument, "unknown user '" + user_id + "'");
  return it->second;
}

}  // namespace polifed::net
