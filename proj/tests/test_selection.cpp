// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "chartcf/error.hpp"
#include "chartcf/similarity.hpp"

using namespace chartcf;

namespace {

std::vector<ScoredEntry> random_index(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<ScoredEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "%06zu", i);
    out.push_back({id, static_cast<int>(40 + rng() % 61)});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

SelectionConfig config(SelectionStrategy s, double rho, std::uint64_t seed = 0) {
  SelectionConfig c;
  c.strategy = s;
  c.rho = rho;
  c.rng_seed = seed;
  return c;
}

bool subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("retained count") {
  CHECK(retained_count(10428, 40) == 4171);
  CHECK(retained_count(10428, 100) == 10428);
  CHECK(retained_count(4, 50) == 2);
  CHECK(retained_count(5, 50) == 3);  // 2.5 rounds away from zero
  CHECK(retained_count(3, 1) == 1);   // never empty
  CHECK(retained_count(0, 40) == 0);
}

TEST_CASE("keep_low at rho 40 over 10,428 entries") {
  const auto entries = random_index(10428, 1);
  const auto ids = select_ids(entries, config(SelectionStrategy::kKeepLow, 40));
  CHECK(ids.size() == 4171);
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  std::set<std::string> chosen(ids.begin(), ids.end());
  int max_kept = 0;
  int min_dropped = 101;
  for (const auto& e : entries) {
    if (chosen.count(e.id)) max_kept = std::max(max_kept, e.total);
    else min_dropped = std::min(min_dropped, e.total);
  }
  CHECK(max_kept <= min_dropped);
}

TEST_CASE("case-study fixture at rho 50") {
  const std::vector<ScoredEntry> entries{{"case1", 93}, {"case2", 90}, {"case3", 90}, {"case4", 76}};
  CHECK(select_ids(entries, config(SelectionStrategy::kKeepLow, 50)) ==
        std::vector<std::string>{"case2", "case4"});
  CHECK(select_ids(entries, config(SelectionStrategy::kKeepHigh, 50)) ==
        std::vector<std::string>{"case1", "case2"});
  const auto [low, high] = partition_halves(entries);
  CHECK(low == std::vector<std::string>{"case2", "case4"});
  CHECK(high == std::vector<std::string>{"case1", "case3"});
}

TEST_CASE("nesting across rho") {
  const auto entries = random_index(997, 2);
  for (auto s : {SelectionStrategy::kKeepLow, SelectionStrategy::kKeepHigh,
                 SelectionStrategy::kRandom}) {
    std::vector<std::string> previous;
    for (int rho = 10; rho <= 100; rho += 10) {
      const auto ids = select_ids(entries, config(s, rho, 99));
      CHECK(ids.size() == retained_count(entries.size(), rho));
      CHECK(subset(previous, ids));
      previous = ids;
    }
    CHECK(previous.size() == entries.size());
  }
}

TEST_CASE("random selection is reproducible and seed-dependent") {
  const auto entries = random_index(500, 3);
  const auto a = select_ids(entries, config(SelectionStrategy::kRandom, 40, 17));
  auto shuffled = entries;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(select_ids(shuffled, config(SelectionStrategy::kRandom, 40, 17)) == a);
  CHECK(select_ids(entries, config(SelectionStrategy::kRandom, 40, 18)) != a);
  CHECK(a.size() == 200);
}

TEST_CASE("input order does not matter for score strategies") {
  auto entries = random_index(300, 4);
  const auto a = select_ids(entries, config(SelectionStrategy::kKeepLow, 33));
  std::sort(entries.begin(), entries.end(), [](auto& x, auto& y) { return x.total < y.total; });
  CHECK(select_ids(entries, config(SelectionStrategy::kKeepLow, 33)) == a);
}

TEST_CASE("halves on odd counts") {
  const std::vector<ScoredEntry> entries{{"a", 50}, {"b", 60}, {"c", 70}};
  const auto [low, high] = partition_halves(entries);
  CHECK(low == std::vector<std::string>{"a", "b"});
  CHECK(high == std::vector<std::string>{"c"});
  CHECK_THROWS_AS(partition_halves({{"a", 1}}), Error);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(select_ids({}, config(SelectionStrategy::kKeepLow, 40)), Error);
  CHECK_THROWS_AS(config(SelectionStrategy::kKeepLow, 0).validate(), Error);
  CHECK_THROWS_AS(config(SelectionStrategy::kKeepLow, 100.5).validate(), Error);
  CHECK_THROWS_AS(parse_selection_strategy("median"), Error);
  CHECK(parse_selection_strategy("keep_high") == SelectionStrategy::kKeepHigh);
  CHECK(to_string(SelectionStrategy::kRandom) == "random");
}
