// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/error.hpp"

namespace chartcf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingSlot: return "MissingSlot";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kTransientExhausted: return "TransientExhausted";
    case ErrorCode::kMalformedReply: return "MalformedReply";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInconsistentResponse: return "InconsistentResponse";
    case ErrorCode::kInvalidImage: return "InvalidImage";
    case ErrorCode::kWorkerDead: return "WorkerDead";
    case ErrorCode::kPathMismatch: return "PathMismatch";
    case ErrorCode::kManifestError: return "ManifestError";
    case ErrorCode::kJudgeParseError: return "JudgeParseError";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMissingImage: return "MissingImage";
    case ErrorCode::kFormattingError: return "FormattingError";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

}  // namespace chartcf
