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

#include "polifed/net/wire.h"

#include <openssl/evp.h>

#include "polifed/common/error.h"

namespace polifed::net {

const char* MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kSubmit: return "SUBMIT";
    case MessageKind::kTask: return "TASK";
    case MessageKind::kResult: return "RESULT";
    case MessageKind::kFinal: return "FINAL";
    case MessageKind::kError: return "ERROR";
    case MessageKind::kHello: return "HELLO";
  }
  return "?";
}

bool IsMessageKind(std::uint8_t raw) { return raw >= 1 && raw <= 6; }

std::vector<std::uint8_t> EncodeFrame(const Message& msg) {
  std::string body = msg.body.dump();
  std::size_t n = body.size() + 2;
  if (n > kMaxPayloadBytes) Fail(ErrorCode::kProtocol, "message too large");
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + n);
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.push_back(kWireVersion);
  out.push_back(static_cast<std::uint8_t>(msg.kind));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Message DecodePayload(std::span<const std::uint8_t> payload) {
  if (payload.size() < 2) Fail(ErrorCode::kProtocol, "short payload");
  if (payload[0] != kWireVersion) {
    Fail(ErrorCode::kProtocol, "unsupported wire version " + std::to_string(payload[0]));
  }
  if (!IsMessageKind(payload[1])) {
    Fail(ErrorCode::kProtocol, "unknown message kind " + std::to_string(payload[1]));
  }
  Message m;
  m.kind = static_cast<MessageKind>(payload[1]);
  m.body = nlohmann::json::parse(payload.begin() + 2, payload.end(), nullptr, false);
  if (m.body.is_discarded() || !m.body.is_object()) {
    Fail(ErrorCode::kProtocol, "message body is not a JSON object");
  }
  return m;
}

void FrameDecoder::Feed(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameDecoder::Next() {
  std::size_t avail = buf_.size() - pos_;
  if (avail < kFrameHeaderBytes) return std::nullopt;
  const std::uint8_t* p = buf_.data() + pos_;
  std::size_t n = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) |
                  (std::size_t{p[2]} << 8) | std::size_t{p[3]};
  if (n > max_payload_) Fail(ErrorCode::kProtocol, "frame length " + std::to_string(n) + " over limit");
  if (avail < kFrameHeaderBytes + n) return std::nullopt;
  std::span<const std::uint8_t> payload(p + kFrameHeaderBytes, n);
  pos_ += kFrameHeaderBytes + n;
  Message m = DecodePayload(payload);
  if (pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  return m;
}

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) Fail(ErrorCode::kProtocol, "base64 length not a multiple of 4");
  std::size_t pad = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
              c == '+' || c == '/';
    if (c == '=' && i + 2 >= text.size()) {
      ++pad;
      continue;
    }
    if (!ok || pad > 0) Fail(ErrorCode::kProtocol, "malformed base64");
  }
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  if (text.empty()) return out;
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) Fail(ErrorCode::kProtocol, "malformed base64");
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace polifed::net
