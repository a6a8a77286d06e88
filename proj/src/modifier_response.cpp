// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/modifier_response.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "chartcf/error.hpp"

namespace chartcf {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kWhitespace);
  return s.substr(first, last - first + 1);
}

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (lower(text[pos + i]) != lower(word[i])) return false;
  }
  return true;
}

struct HeaderHit {
  std::size_t begin = std::string_view::npos;  // first byte of the header
  std::size_t end = std::string_view::npos;    // first byte of the content
  bool found() const { return begin != std::string_view::npos; }
};

// Matches `**Name:**`, `**Name**:` or, at the start of a line, `Name:`.
HeaderHit find_header(std::string_view text, std::string_view name,
                      std::size_t from) {
  for (std::size_t pos = from; pos < text.size(); ++pos) {
    std::size_t p = pos;
    bool bold = false;
    if (text.compare(p, 2, "**") == 0) {
      bold = true;
      p += 2;
      while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    } else {
      const bool line_start = pos == 0 || text[pos - 1] == '\n';
      if (!line_start) continue;
      while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    }
    if (!iequals_at(text, p, name)) continue;
    p += name.size();
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (bold) {
      if (text.compare(p, 3, ":**") == 0) {
        p += 3;
      } else if (text.compare(p, 3, "**:") == 0) {
        p += 3;
      } else {
        continue;
      }
    } else {
      if (p >= text.size() || text[p] != ':') continue;
      ++p;
    }
    return {pos, p};
  }
  return {};
}

struct Fence {
  std::size_t open = std::string_view::npos;
  std::size_t content_begin = 0;
  std::size_t content_end = 0;
  std::size_t close_end = 0;
  bool found() const { return open != std::string_view::npos; }
};

// First ``` block starting at or after `from`; the info string after the
// opening fence is skipped. An unterminated block runs to end of text.
Fence find_fence(std::string_view text, std::size_t from,
                 std::size_t limit = std::string_view::npos) {
  Fence f;
  const std::size_t open = text.find("```", from);
  if (open == std::string_view::npos || open >= limit) return f;
  f.open = open;
  std::size_t eol = text.find('\n', open + 3);
  if (eol == std::string_view::npos) {
    f.content_begin = f.content_end = f.close_end = text.size();
    return f;
  }
  f.content_begin = eol + 1;
  std::size_t close = text.find("```", f.content_begin);
  if (close == std::string_view::npos) {
    f.content_end = f.close_end = text.size();
  } else {
    f.content_end = close;
    f.close_end = close + 3;
  }
  return f;
}

bool is_none(std::string_view s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '.')) {
    s.remove_suffix(1);
  }
  return s.empty() || (s.size() == 4 && iequals_at(s, 0, "none"));
}

Feasibility parse_feasibility(std::string_view section) {
  std::string_view s = trim(section);
  std::size_t i = 0;
  while (i < s.size() && !std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
  std::size_t j = i;
  while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
  std::string_view word = s.substr(i, j - i);
  if (word.size() == 3 && iequals_at(word, 0, "yes")) return Feasibility::kYes;
  if (word.size() == 2 && iequals_at(word, 0, "no")) return Feasibility::kNo;
  throw Error(ErrorCode::kParseError,
              "feasibility is neither YES nor NO: '" +
                  std::string(s.substr(0, 40)) + "'");
}

// Last line-initial occurrence of `marker` (case-insensitive).
std::size_t find_marker_line(std::string_view text, std::string_view marker,
                             std::size_t from) {
  std::size_t found = std::string_view::npos;
  for (std::size_t pos = from; pos < text.size(); ++pos) {
    if (pos != 0 && text[pos - 1] != '\n') continue;
    std::size_t p = pos;
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (iequals_at(text, p, marker)) found = p;
  }
  return found;
}

}  // namespace

ModifierResponse parse_modifier_response(std::string_view raw,
                                         QuestionType kind) {
  ModifierResponse out;
  out.raw = std::string(raw);

  const HeaderHit feasibility = find_header(raw, "Feasibility", 0);
  if (!feasibility.found()) {
    throw Error(ErrorCode::kParseError, "missing Feasibility header");
  }
  const HeaderHit rationale =
      find_header(raw, "Rationale of Modification", feasibility.end);
  const std::size_t code_search_from =
      rationale.found() ? rationale.end : feasibility.end;
  const HeaderHit code = find_header(raw, "Modified Code", code_search_from);

  const std::size_t feasibility_end =
      rationale.found() ? rationale.begin
                        : (code.found() ? code.begin : raw.size());
  out.feasibility = parse_feasibility(
      raw.substr(feasibility.end, feasibility_end - feasibility.end));

  if (rationale.found()) {
    const std::size_t end = code.found() ? code.begin : raw.size();
    out.rationale = std::string(trim(raw.substr(rationale.end, end - rationale.end)));
  }

  HeaderHit answer;
  if (code.found()) {
    const HeaderHit answer_guess = find_header(raw, "New Answer", code.end);
    const Fence fence = find_fence(raw, code.end, answer_guess.begin);
    if (fence.found()) {
      std::string_view body =
          raw.substr(fence.content_begin, fence.content_end - fence.content_begin);
      if (body.ends_with('\n')) body.remove_suffix(1);
      if (body.ends_with('\r')) body.remove_suffix(1);
      if (!is_none(body)) out.modified_code = std::string(body);
      answer = find_header(raw, "New Answer", fence.close_end);
    } else {
      answer = answer_guess;
      const std::size_t end = answer.found() ? answer.begin : raw.size();
      std::string_view body = raw.substr(code.end, end - code.end);
      if (!is_none(body)) out.modified_code = std::string(trim(body));
    }
  }

  if (answer.found()) {
    std::string_view section = trim(raw.substr(answer.end));
    if (kind == QuestionType::kReasoning) {
      const std::size_t reasoning_at =
          find_marker_line(section, "Reasoning Process:", 0);
      const std::size_t answer_at = find_marker_line(
          section, "Answer:",
          reasoning_at == std::string_view::npos ? 0 : reasoning_at + 18);
      if (answer_at != std::string_view::npos) {
        std::string_view value = trim(section.substr(answer_at + 7));
        if (!is_none(value)) out.new_answer = std::string(value);
        if (reasoning_at != std::string_view::npos) {
          std::string_view process = trim(section.substr(
              reasoning_at + 18, answer_at - (reasoning_at + 18)));
          if (!is_none(process)) out.new_reasoning = std::string(process);
        }
      } else if (!is_none(section)) {
        out.new_answer = std::string(section);
      }
    } else if (!is_none(section)) {
      out.new_answer = std::string(section);
    }
  }

  if (out.feasibility == Feasibility::kNo) {
    out.modified_code.reset();
    out.new_answer.reset();
    out.new_reasoning.reset();
    return out;
  }
  if (!code.found()) {
    throw Error(ErrorCode::kParseError, "missing Modified Code header");
  }
  if (!answer.found()) {
    throw Error(ErrorCode::kParseError, "missing New Answer header");
  }
  if (!out.modified_code || trim(*out.modified_code).empty()) {
    throw Error(ErrorCode::kInconsistentResponse,
                "feasible reply without modified code");
  }
  if (!out.new_answer || trim(*out.new_answer).empty()) {
    throw Error(ErrorCode::kInconsistentResponse,
                "feasible reply without a new answer");
  }
  if (kind == QuestionType::kReasoning &&
      (!out.new_reasoning || trim(*out.new_reasoning).empty())) {
    throw Error(ErrorCode::kInconsistentResponse,
                "feasible reasoning reply without a reasoning process");
  }
  return out;
}

std::string format_modifier_response(const ModifierResponse& r,
                                     QuestionType kind) {
  const bool yes = r.feasibility == Feasibility::kYes;
  std::string out;
  out += "**Feasibility:**\n";
  out += yes ? "YES" : "NO";
  out += "\n\n**Rationale of Modification:**\n";
  out += r.rationale;
  out += "\n\n**Modified Code:**\n```python\n";
  if (r.modified_code) {
    out += *r.modified_code;
    out += '\n';
  } else {
    out += "None\n";
  }
  out += "```\n**New Answer:**\n";
  if (kind == QuestionType::kReasoning) {
    out += "Reasoning Process: ";
    out += r.new_reasoning.value_or("None");
    out += "\nAnswer: ";
  }
  out += r.new_answer.value_or("None");
  out += "\n";
  return out;
}

}  // namespace chartcf
