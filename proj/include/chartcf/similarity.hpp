// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// LLM-judge visual similarity scoring and the retention strategies that
// consume the scores.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chartcf/chat_client.hpp"
#include "chartcf/dataset.hpp"

namespace chartcf {

// Reads the final "Score: N" line and the five "- <Criterion>: ..." comment
// lines. A subscore is the number written as "N/20" or "N out of 20" when
// present, else the last integer on the line. Throws kJudgeParseError on a
// missing score, an out-of-range value, or a total that disagrees with the
// five subscores.
SimilarityScore parse_judge_reply(std::string_view raw);

// Sends [rubric, original image, modified image]; re-asks once on a
// malformed reply, then throws kJudgeParseError.
SimilarityScore score_pair(const CounterfactualPair& pair, const ChatClient& judge);

struct ScoringSummary {
  std::size_t scored = 0;
  std::size_t unscored = 0;
};

// Scores every pair in place (unscored pairs keep similarity = nullopt).
ScoringSummary score_pairs(std::vector<CounterfactualPair>& pairs,
                           const ChatClient& judge, int concurrency);

enum class SelectionStrategy { kKeepLow, kRandom, kKeepHigh };

std::string to_string(SelectionStrategy strategy);
SelectionStrategy parse_selection_strategy(const std::string& text);

struct SelectionConfig {
  SelectionStrategy strategy = SelectionStrategy::kKeepLow;
  double rho = 40.0;  // percent, in (0, 100]
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct ScoredEntry {
  std::string id;
  int total = 0;
};

// k = round(rho / 100 * n) half away from zero, at least 1 when n >= 1.
std::size_t retained_count(std::size_t n, double rho);

// Returns the selected ids in ascending id order. Ties on the score are
// broken by ascending id. Throws kEmptyInput on an empty input.
std::vector<std::string> select_ids(const std::vector<ScoredEntry>& entries,
                                    const SelectionConfig& config);

// Pairs must all be scored.
std::vector<CounterfactualPair> select(const std::vector<CounterfactualPair>& pairs,
                                       const SelectionConfig& config);

// Median split by score with the same tie rule; the lower half gets the
// extra element on odd counts. Throws kEmptyInput below two entries.
std::pair<std::vector<std::string>, std::vector<std::string>> partition_halves(
    const std::vector<ScoredEntry>& entries);

std::vector<ScoredEntry> scored_entries(const std::vector<CounterfactualPair>& pairs);

}  // namespace chartcf
