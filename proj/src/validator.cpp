// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/validator.hpp"

#include <algorithm>
#include <regex>

namespace chartcf {

namespace {

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start + 1));
    start = nl + 1;
  }
  return lines;
}

bool is_seed_def(std::string_view line) {
  static const std::regex kDef(R"(^def[ \t]+set_random_seed[ \t]*\()");
  return std::regex_search(line.begin(), line.end(), kDef);
}

bool is_literal(std::string_view arg) {
  static const std::regex kLiteral(
      R"(^\s*(?:seed\s*=\s*)?[-+]?(?:0[xX][0-9a-fA-F_]+|[0-9][0-9_]*(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?)\s*$)");
  return std::regex_match(arg.begin(), arg.end(), kLiteral);
}

}  // namespace

std::string to_string(Violation v) {
  switch (v) {
    case Violation::kSavePathChanged: return "SavePathChanged";
    case Violation::kSavePathMalformed: return "SavePathMalformed";
    case Violation::kSeedFunctionModified: return "SeedFunctionModified";
    case Violation::kEmptyCode: return "EmptyCode";
  }
  return "Unknown";
}

std::set<std::string> extract_save_paths(std::string_view code) {
  static const std::regex kPath(R"(rendered_images/[0-9]{6}\.png)");
  std::set<std::string> paths;
  for (auto it = std::cregex_iterator(code.data(), code.data() + code.size(), kPath);
       it != std::cregex_iterator(); ++it) {
    paths.insert(it->str());
  }
  return paths;
}

std::string seed_function_block(std::string_view code) {
  const auto lines = split_lines(code);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_seed_def(lines[i])) continue;
    std::size_t end = i + 1;
    while (end < lines.size()) {
      std::string_view l = lines[end];
      const bool top_level = !blank(l) && l.front() != ' ' && l.front() != '\t';
      if (top_level) break;
      ++end;
    }
    while (end > i + 1 && blank(lines[end - 1])) --end;
    std::string block;
    for (std::size_t k = i; k < end; ++k) block += lines[k];
    while (!block.empty() && (block.back() == '\n' || block.back() == '\r')) block.pop_back();
    return block;
  }
  return {};
}

std::vector<std::string> seed_call_literals(std::string_view code) {
  static const std::regex kCall(R"(set_random_seed[ \t]*\(([^()\n]*)\))");
  std::vector<std::string> literals;
  for (std::string_view line : split_lines(code)) {
    if (is_seed_def(line)) continue;
    for (auto it = std::cregex_iterator(line.data(), line.data() + line.size(), kCall);
         it != std::cregex_iterator(); ++it) {
      const std::string arg = (*it)[1].str();
      if (is_literal(arg)) {
        std::string compact;
        for (char c : arg) {
          if (c != ' ' && c != '\t') compact += c;
        }
        literals.push_back(compact);
      }
    }
  }
  return literals;
}

std::vector<Violation> check_save_path(std::string_view original,
                                       std::string_view modified) {
  if (blank(original) || blank(modified)) return {Violation::kEmptyCode};
  const auto before = extract_save_paths(original);
  const auto after = extract_save_paths(modified);
  if (after.empty()) return {Violation::kSavePathMalformed};
  if (before != after) return {Violation::kSavePathChanged};
  return {};
}

std::vector<Violation> check_seed_preserved(std::string_view original,
                                            std::string_view modified) {
  if (blank(original) || blank(modified)) return {Violation::kEmptyCode};
  const std::string block = seed_function_block(original);
  if (block.empty()) return {};
  if (seed_function_block(modified) != block ||
      seed_call_literals(original) != seed_call_literals(modified)) {
    return {Violation::kSeedFunctionModified};
  }
  return {};
}

ValidationVerdict validate(std::string_view original, std::string_view modified) {
  ValidationVerdict verdict;
  if (blank(original) || blank(modified)) {
    verdict.violations.push_back(Violation::kEmptyCode);
    return verdict;
  }
  for (auto v : check_save_path(original, modified)) verdict.violations.push_back(v);
  for (auto v : check_seed_preserved(original, modified)) verdict.violations.push_back(v);
  std::sort(verdict.violations.begin(), verdict.violations.end());
  return verdict;
}

}  // namespace chartcf
