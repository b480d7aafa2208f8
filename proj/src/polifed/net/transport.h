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

#ifndef POLIFED_NET_TRANSPORT_H_
#define POLIFED_NET_TRANSPORT_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "polifed/common/error.h"
#include "polifed/net/edge.h"
#include "polifed/net/wire.h"

namespace polifed::net {

struct Exchange {
  std::string user_id;
  Message task;
};

struct ExchangeOutcome {
  // Unset on timeout or transport failure.
  std::optional<Message> reply;
  ErrorCode code = ErrorCode::kTransport;
  std::string detail;
  // From start of sending to send completion.
  double ttd_ms = 0;
  // From send completion to the reply being decoded.
  double wait_ms = 0;
};

// Observes every frame crossing the transport, in either direction.
enum class Direction { kToNode, kFromNode };
using FrameTap = std::function<void(Direction, const std::string& user_id,
                                    std::span<const std::uint8_t> frame)>;

class Transport {
 public:
  virtual ~Transport() = default;

  virtual bool Hosts(const std::string& user_id) const = 0;
  // Delivers every task and collects replies until `timeout` has passed
  // since the call. Outcomes are in input order; late replies are dropped.
  virtual std::vector<ExchangeOutcome> ExchangeAll(const std::vector<Exchange>& xs,
                                                   std::chrono::milliseconds timeout) = 0;

  void set_tap(FrameTap tap) { tap_ = std::move(tap); }

 protected:
  void Tap(Direction d, const std::string& user, std::span<const std::uint8_t> frame) const {
    if (tap_) tap_(d, user, frame);
  }

 private:
  FrameTap tap_;
};

// Edge nodes living in this process. Frames are still fully encoded and
// decoded. Exchanges run one after another on the calling thread, so the
// timeout bounds each exchange on its own.
class InProcessTransport : public Transport {
 public:
  void Attach(std::shared_ptr<EdgeNode> node);
  // A down user's exchanges fail as if its node had crashed.
  void SetDown(const std::string& user_id, bool down);

  bool Hosts(const std::string& user_id) const override;
  std::vector<ExchangeOutcome> ExchangeAll(const std::vector<Exchange>& xs,
                                           std::chrono::milliseconds timeout) override;

 private:
  std::map<std::string, std::shared_ptr<EdgeNode>> nodes_;
  std::set<std::string> down_;
};

}  // namespace polifed::net

#endif  // POLIFED_NET_TRANSPORT_H_
