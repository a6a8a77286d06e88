// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "chartcf/error.hpp"
#include "chartcf/similarity.hpp"

namespace chartcf {

namespace {

bool lower_first(const ScoredEntry& a, const ScoredEntry& b) {
  return a.total != b.total ? a.total < b.total : a.id < b.id;
}

bool higher_first(const ScoredEntry& a, const ScoredEntry& b) {
  return a.total != b.total ? a.total > b.total : a.id < b.id;
}

// Uniform integer in [0, bound) by rejection, so the stream of draws is
// identical on every standard library (std distributions are not).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t draw = rng();
    if (draw < limit) return draw % bound;
  }
}

std::vector<std::string> sorted_ids(std::vector<ScoredEntry> entries) {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (auto& e : entries) ids.push_back(std::move(e.id));
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::string to_string(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::kKeepLow: return "keep_low";
    case SelectionStrategy::kRandom: return "random";
    case SelectionStrategy::kKeepHigh: return "keep_high";
  }
  return "unknown";
}

SelectionStrategy parse_selection_strategy(const std::string& text) {
  if (text == "keep_low") return SelectionStrategy::kKeepLow;
  if (text == "random") return SelectionStrategy::kRandom;
  if (text == "keep_high") return SelectionStrategy::kKeepHigh;
  throw Error(ErrorCode::kInvalidArgument, "unknown strategy '" + text + "'");
}

void SelectionConfig::validate() const {
  if (!(rho > 0.0 && rho <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho must be in (0, 100]");
  }
}

std::size_t retained_count(std::size_t n, double rho) {
  if (n == 0) return 0;
  const long long k = std::llround(rho / 100.0 * static_cast<double>(n));
  return static_cast<std::size_t>(std::clamp<long long>(k, 1, static_cast<long long>(n)));
}

std::vector<std::string> select_ids(const std::vector<ScoredEntry>& entries,
                                    const SelectionConfig& config) {
  config.validate();
  if (entries.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to select from");
  const std::size_t k = retained_count(entries.size(), config.rho);
  std::vector<ScoredEntry> ordered = entries;
  switch (config.strategy) {
    case SelectionStrategy::kKeepLow:
      std::sort(ordered.begin(), ordered.end(), lower_first);
      break;
    case SelectionStrategy::kKeepHigh:
      std::sort(ordered.begin(), ordered.end(), higher_first);
      break;
    case SelectionStrategy::kRandom: {
      std::sort(ordered.begin(), ordered.end(),
                [](const ScoredEntry& a, const ScoredEntry& b) { return a.id < b.id; });
      std::mt19937_64 rng(config.rng_seed);
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + bounded(rng, ordered.size() - i);
        std::swap(ordered[i], ordered[j]);
      }
      break;
    }
  }
  ordered.resize(k);
  return sorted_ids(std::move(ordered));
}

std::vector<CounterfactualPair> select(const std::vector<CounterfactualPair>& pairs,
                                       const SelectionConfig& config) {
  const auto ids = select_ids(scored_entries(pairs), config);
  std::map<std::string, const CounterfactualPair*> by_id;
  for (const auto& p : pairs) by_id[p.id()] = &p;
  std::vector<CounterfactualPair> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(*by_id.at(id));
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> partition_halves(
    const std::vector<ScoredEntry>& entries) {
  if (entries.size() < 2) {
    throw Error(ErrorCode::kEmptyInput, "need at least two scored pairs to split");
  }
  std::vector<ScoredEntry> ordered = entries;
  std::sort(ordered.begin(), ordered.end(), lower_first);
  const std::size_t lower_size = (ordered.size() + 1) / 2;
  std::vector<ScoredEntry> low(ordered.begin(), ordered.begin() + lower_size);
  std::vector<ScoredEntry> high(ordered.begin() + lower_size, ordered.end());
  return {sorted_ids(std::move(low)), sorted_ids(std::move(high))};
}

std::vector<ScoredEntry> scored_entries(const std::vector<CounterfactualPair>& pairs) {
  std::vector<ScoredEntry> entries;
  entries.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.similarity) {
      throw Error(ErrorCode::kInvalidArgument, "pair " + p.id() + " is unscored");
    }
    entries.push_back({p.id(), p.similarity->total});
  }
  return entries;
}

}  // namespace chartcf
