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

#include "polifed/net/transport.h"

namespace polifed::net {
namespace {

using Clock = std::chrono::steady_clock;

double Ms(Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

}  // namespace

void InProcessTransport::Attach(std::shared_ptr<EdgeNode> node) {
  for (const std::string& id : node->user_ids()) {
    if (!nodes_.emplace(id, node).second) {
      Fail(ErrorCode::kInvalidArgument, "user '" + id + "' attached twice");
    }
  }
}

void InProcessTransport::SetDown(const std::string& user_id, bool down) {
  if (down) {
    down_.insert(user_id);
  } else {
    down_.erase(user_id);
  }
}

bool InProcessTransport::Hosts(const std::string& user_id) const {
  return nodes_.count(user_id) > 0;
}

std::vector<ExchangeOutcome> InProcessTransport::ExchangeAll(const std::vector<Exchange>& xs,
                                                             std::chrono::milliseconds timeout) {
  std::vector<ExchangeOutcome> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Exchange& x = xs[i];
    ExchangeOutcome& o = out[i];
    auto node = nodes_.find(x.user_id);
    if (node == nodes_.end()) {
      o.detail = "no node hosts '" + x.user_id + "'";
      continue;
    }
    auto t0 = Clock::now();
    std::vector<std::uint8_t> frame = EncodeFrame(x.task);
    Tap(Direction::kToNode, x.user_id, frame);
    auto t1 = Clock::now();
    o.ttd_ms = Ms(t1 - t0);
    if (down_.count(x.user_id)) {
      o.detail = "connection to '" + x.user_id + "' lost";
      continue;
    }
    std::vector<std::uint8_t> reply = node->second->HandleFrame(frame);
    Tap(Direction::kFromNode, x.user_id, reply);
    try {
      FrameDecoder dec;
      dec.Feed(reply);
      o.reply = dec.Next();
      if (!o.reply) Fail(ErrorCode::kProtocol, "incomplete reply frame");
    } catch (const Error& e) {
      o.reply.reset();
      o.code = e.code();
      o.detail = e.what();
    }
    auto t2 = Clock::now();
    o.wait_ms = Ms(t2 - t1);
    if (t2 - t0 > timeout) {
      o.reply.reset();
      o.code = ErrorCode::kTransport;
      o.detail = "timed out";
    }
  }
  return out;
}

}  // namespace polifed::net
