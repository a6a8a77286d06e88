// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/similarity.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <optional>
#include <regex>
#include <thread>

#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"
#include "chartcf/prompts.hpp"

namespace chartcf {

namespace {

std::vector<std::string> lines_without_bold(std::string_view raw) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : raw) {
    if (c == '\n') {
      lines.push_back(std::move(current));
      current.clear();
    } else if (c != '*' && c != '\r') {
      current += c;
    }
  }
  lines.push_back(std::move(current));
  return lines;
}

int to_int(const std::string& digits) {
  if (digits.size() > 6) return 1000000;
  return std::stoi(digits);
}

std::optional<int> subscore_from_comment(const std::string& comment) {
  static const std::regex kOutOf(R"((\d+)\s*(?:/|out\s+of)\s*20\b)", std::regex::icase);
  static const std::regex kInteger(R"(\d+)");
  std::smatch m;
  if (std::regex_search(comment, m, kOutOf)) return to_int(m[1].str());
  std::optional<int> last;
  for (auto it = std::sregex_iterator(comment.begin(), comment.end(), kInteger);
       it != std::sregex_iterator(); ++it) {
    last = to_int(it->str());
  }
  return last;
}

}  // namespace

SimilarityScore parse_judge_reply(std::string_view raw) {
  static const std::regex kScore(R"(^\s*score\s*:\s*(\d+)\b)", std::regex::icase);
  static const std::regex kCriterion(
      R"(^\s*-\s*(chart\s+types|layout|text\s+content|data|style)\s*:(.*)$)",
      std::regex::icase);

  SimilarityScore score;
  score.raw = std::string(raw);
  std::optional<int> total;
  for (const std::string& line : lines_without_bold(raw)) {
    if (line.size() > 4096) continue;
    std::smatch m;
    if (std::regex_search(line, m, kScore)) {
      total = to_int(m[1].str());
      continue;
    }
    if (!std::regex_match(line, m, kCriterion)) continue;
    std::string name = m[1].str();
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const std::optional<int> value = subscore_from_comment(m[2].str());
    if (!value) continue;
    if (*value < 0 || *value > 20) {
      throw Error(ErrorCode::kJudgeParseError,
                  "subscore out of range for " + name + ": " + std::to_string(*value));
    }
    if (name.starts_with("chart")) {
      score.chart_types = value;
    } else if (name == "layout") {
      score.layout = value;
    } else if (name.starts_with("text")) {
      score.text_content = value;
    } else if (name == "data") {
      score.data = value;
    } else {
      score.style = value;
    }
  }
  if (!total) throw Error(ErrorCode::kJudgeParseError, "no Score line");
  if (*total < 0 || *total > 100) {
    throw Error(ErrorCode::kJudgeParseError, "total out of range: " + std::to_string(*total));
  }
  score.total = *total;
  if (score.has_all_subscores()) {
    const int sum = *score.chart_types + *score.layout + *score.text_content +
                    *score.data + *score.style;
    if (sum != score.total) {
      throw Error(ErrorCode::kJudgeParseError,
                  "total " + std::to_string(score.total) + " != subscore sum " +
                      std::to_string(sum));
    }
  }
  return score;
}

SimilarityScore score_pair(const CounterfactualPair& pair, const ChatClient& judge) {
  ChatRequest request;
  request.tag = "judge/" + pair.id();
  request.content.push_back(ContentPart::text_part(std::string(similarity_prompt())));
  for (const auto& image : {pair.seed.image, pair.counterfactual.image}) {
    if (!std::filesystem::is_regular_file(image)) {
      throw Error(ErrorCode::kMissingImage, image.string());
    }
    request.content.push_back(ContentPart::image_part(read_text_file(image)));
  }
  std::string last_error;
  for (int ask = 0; ask < 2; ++ask) {
    const ChatReply reply = judge.complete(request);
    try {
      SimilarityScore score = parse_judge_reply(reply.text);
      score.judge_model = judge.config().model_id;
      return score;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kJudgeParseError) throw;
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::kJudgeParseError, pair.id() + ": " + last_error);
}

ScoringSummary score_pairs(std::vector<CounterfactualPair>& pairs, const ChatClient& judge,
                           int concurrency) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> scored{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  std::atomic<bool> abort{false};
  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= pairs.size()) return;
      try {
        pairs[i].similarity = score_pair(pairs[i], judge);
        ++scored;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kAuthError) {
          std::lock_guard lock(fatal_mutex);
          if (!fatal) fatal = std::current_exception();
          abort.store(true);
          return;
        }
        spdlog::warn("pair {} left unscored: {}", pairs[i].id(), e.what());
        pairs[i].similarity.reset();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < std::max(1, concurrency); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (fatal) std::rethrow_exception(fatal);
  return {scored.load(), pairs.size() - scored.load()};
}

}  // namespace chartcf
