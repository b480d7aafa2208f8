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

// Length-prefixed frames carrying canonical JSON messages.

#ifndef POLIFED_NET_WIRE_H_
#define POLIFED_NET_WIRE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace polifed::net {

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 4;
inline constexpr std::size_t kMaxPayloadBytes = std::size_t{64} << 20;

enum class MessageKind : std::uint8_t {
  kSubmit = 1,
  kTask = 2,
  kResult = 3,
  kFinal = 4,
  kError = 5,
  // Edge node announcing the users it hosts.
  kHello = 6,
};

const char* MessageKindName(MessageKind kind);
bool IsMessageKind(std::uint8_t raw);

struct Message {
  MessageKind kind = MessageKind::kError;
  nlohmann::json body = nlohmann::json::object();

  bool operator==(const Message&) const = default;
};

// u32 big-endian payload length | version | kind | JSON body (sorted keys).
std::vector<std::uint8_t> EncodeFrame(const Message& msg);
// Decodes one payload (no length prefix). Throws ProtocolError.
Message DecodePayload(std::span<const std::uint8_t> payload);

// Incremental frame splitter for stream transports.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_payload = kMaxPayloadBytes) : max_payload_(max_payload) {}

  void Feed(std::span<const std::uint8_t> bytes);
  // Next complete message, if any. Throws ProtocolError on an oversized
  // length, bad version, unknown kind or malformed JSON; the decoder is
  // unusable afterwards.
  std::optional<Message> Next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::size_t max_payload_;
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

std::string Base64Encode(std::span<const std::uint8_t> bytes);
// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> Base64Decode(std::string_view text);

}  // namespace polifed::net

#endif  // POLIFED_NET_WIRE_H_
