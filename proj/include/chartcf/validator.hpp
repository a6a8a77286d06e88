// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Execution-free checks on a modified plotting script. Syntax checking is
// the render sandbox's job; these only look at text.

#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace chartcf {

// Declaration order is the reporting order.
enum class Violation {
  kSavePathChanged,
  kSavePathMalformed,
  kSeedFunctionModified,
  kEmptyCode,
};

std::string to_string(Violation v);

struct ValidationVerdict {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// All distinct `rendered_images/NNNNNN.png` occurrences (six ASCII digits).
std::set<std::string> extract_save_paths(std::string_view code);

// Text of the top-level `def set_random_seed` block, from its def line up to
// the next top-level statement, trailing blank lines dropped. Empty when the
// function is absent.
std::string seed_function_block(std::string_view code);

// Argument text of every `set_random_seed(<literal>)` call outside the
// definition, in source order.
std::vector<std::string> seed_call_literals(std::string_view code);

std::vector<Violation> check_save_path(std::string_view original,
                                       std::string_view modified);
std::vector<Violation> check_seed_preserved(std::string_view original,
                                            std::string_view modified);

ValidationVerdict validate(std::string_view original, std::string_view modified);

}  // namespace chartcf
