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

#include "polifed/common/error.h"

namespace polifed {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kPolicyViolation: return "PolicyViolation";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kUnknownCommand: return "UnknownCommand";
    case ErrorCode::kUnknownGroup: return "UnknownGroup";
    case ErrorCode::kSlotReuse: return "SlotReuse";
    case ErrorCode::kMissingSlot: return "MissingSlot";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kInvalidToken: return "InvalidToken";
    case ErrorCode::kProtocol: return "ProtocolError";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kRoundFailed: return "RoundFailed";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "Unknown";
}

ErrorCode ParseErrorCode(const std::string& name) {
  for (int c = static_cast<int>(ErrorCode::kInvalidArgument);
       c <= static_cast<int>(ErrorCode::kInternal); ++c) {
    if (name == ErrorCodeName(static_cast<ErrorCode>(c))) return static_cast<ErrorCode>(c);
  }
  return ErrorCode::kInternal;
}

}  // namespace polifed
