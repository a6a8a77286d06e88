// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "chartcf/dataset.hpp"

namespace chartcf {

enum class Feasibility { kYes, kNo };

struct ModifierResponse {
  Feasibility feasibility = Feasibility::kNo;
  std::string rationale;
  std::optional<std::string> modified_code;
  std::optional<std::string> new_answer;
  std::optional<std::string> new_reasoning;
  std::string raw;
};

// Splits a code modifier reply into its Feasibility / Rationale of
// Modification / Modified Code / New Answer sections. Headers match
// case-insensitively, bold or plain. Only the first fenced block after the
// Modified Code header is taken as the code. For reasoning questions the New
// Answer section is split at the "Reasoning Process:" and "Answer:" markers.
//
// Throws kParseError when a required header is missing and
// kInconsistentResponse when a feasible reply lacks code or an answer.
ModifierResponse parse_modifier_response(std::string_view raw,
                                         QuestionType kind);

// Renders a response in the reply layout the prompts ask for. The mock
// transcripts are built with it, and parse_modifier_response() inverts it.
std::string format_modifier_response(const ModifierResponse& response,
                                     QuestionType kind);

}  // namespace chartcf
