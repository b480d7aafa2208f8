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

#ifndef POLIFED_COMMON_ERROR_H_
#define POLIFED_COMMON_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polifed {

// Error categories shared by every module. The C API maps these one-to-one
// onto polifed_status values.
enum class ErrorCode {
  kInvalidArgument = 1,
  kParse,
  kPolicyViolation,
  kBudgetExceeded,
  kUnknownCommand,
  kUnknownGroup,
  kSlotReuse,
  kMissingSlot,
  kShapeMismatch,
  kDivergence,
  kInvalidToken,
  kProtocol,
  kTransport,
  kRoundFailed,
  kIo,
  kInternal,
};

const char* ErrorCodeName(ErrorCode code);
// Inverse of ErrorCodeName; unknown names map to kInternal.
ErrorCode ParseErrorCode(const std::string& name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Syntax error in policy text; offset is a byte index into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(ErrorCode::kParse,
              message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A program tried to apply a command its inputs' policies do not authorize.
class PolicyViolation : public Error {
 public:
  PolicyViolation(std::string command, std::string policy)
      : Error(ErrorCode::kPolicyViolation,
              "policy violation: '" + command + "' not permitted by policy '" +
                  policy + "'"),
        command_(std::move(command)),
        policy_(std::move(policy)) {}

  const std::string& command() const { return command_; }
  const std::string& policy() const { return policy_; }

 private:
  std::string command_;
  std::string policy_;
};

class BudgetExceeded : public Error {
 public:
  BudgetExceeded(std::string group, double spent, double max_epsilon)
      : Error(ErrorCode::kBudgetExceeded,
              "privacy budget exceeded for group '" + group +
                  "': spent=" + std::to_string(spent) +
                  " max=" + std::to_string(max_epsilon)),
        group_(std::move(group)),
        spent_(spent),
        max_epsilon_(max_epsilon) {}

  const std::string& group() const { return group_; }
  double spent() const { return spent_; }
  double max_epsilon() const { return max_epsilon_; }

 private:
  std::string group_;
  double spent_;
  double max_epsilon_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace polifed

#endif  // POLIFED_COMMON_ERROR_H_
