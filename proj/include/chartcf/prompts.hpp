// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <string>
#include <string_view>

#include "chartcf/dataset.hpp"

namespace chartcf {

enum class TemplateKind { kDescriptive, kReasoning, kDistractor };

std::string to_string(TemplateKind kind);

// A code-modification prompt with `{{ slot }}` markers. Recognised slots are
// python_code, question, current_answer and current_reasoning_process.
struct PromptTemplate {
  TemplateKind kind = TemplateKind::kDescriptive;
  std::string body;

  std::set<std::string> slots() const;
};

PromptTemplate descriptive_template();
PromptTemplate reasoning_template();
PromptTemplate default_template_for(QuestionType type);

// Judge rubric sent alongside the original and modified chart images.
std::string_view similarity_prompt();

// Substitutes seed fields into the template in a single pass, so text coming
// from the seed is never rescanned for markers. Throws kMissingSlot when the
// template needs a field the seed does not have.
std::string render_prompt(const PromptTemplate& tmpl, const SeedSample& seed);

}  // namespace chartcf
