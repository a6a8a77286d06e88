// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Judge replies written in the rubric's output format.

#pragma once

#include <string>

namespace chartcf::testing {

inline std::string judge_reply(int types, int layout, int text, int data, int style,
                               int total) {
  auto n = [](int v) { return std::to_string(v); };
  return "### Evaluation\n\n"
         "Comments:\n"
         "- Chart Types: Both images are grouped bar charts. Subscore: " + n(types) + "/20\n"
         "- Layout: The arrangement of the panels is the same. " + n(layout) + " out of 20\n"
         "- Text Content: One legend label differs between the two charts. " + n(text) + "/20\n"
         "- Data: Most of the 12 plotted values match. " + n(data) + "/20\n"
         "- Style: Colors and markers are consistent. " + n(style) + "/20\n"
         "\n"
         "Score: " + n(total) + "\n";
}

// Totals of the published case-study pairs.
inline std::string reply_93() { return judge_reply(20, 20, 18, 17, 18, 93); }
inline std::string reply_90() { return judge_reply(20, 20, 17, 15, 18, 90); }
inline std::string reply_76() { return judge_reply(20, 14, 16, 12, 14, 76); }

inline std::string reply_without_score() {
  std::string r = reply_93();
  return r.substr(0, r.find("Score:"));
}

inline std::string reply_with_bad_sum() { return judge_reply(20, 20, 18, 17, 18, 95); }

}  // namespace chartcf::testing
