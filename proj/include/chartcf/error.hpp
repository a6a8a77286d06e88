// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chartcf {

enum class ErrorCode {
  kMissingSlot,
  kAuthError,
  kTransientExhausted,
  kMalformedReply,
  kParseError,
  kInconsistentResponse,
  kInvalidImage,
  kWorkerDead,
  kPathMismatch,
  kManifestError,
  kJudgeParseError,
  kEmptyInput,
  kMissingImage,
  kFormattingError,
  kNonFinite,
  kInvalidArgument,
  kIoError,
  kConfigError,
  kProtocolError,
};

std::string_view to_string(ErrorCode code);

// Every failure the library raises carries a machine-checkable code. Callers
// that need to branch (retry loops, the CLI's exit-code mapping) switch on
// code(); the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chartcf
