// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Preference losses over sequence-level log-probabilities.
//
//   margin = beta * ((policy_chosen - ref_chosen) - (policy_rejected - ref_rejected))
//   loss   = -log sigmoid(margin)
//
// The text loss compares A_o and A_c under the original image; the image loss
// compares A_o under the original and the counterfactual image. Both share
// this form, and the training objective is their unweighted sum.

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace chartcf::dpo {

// Default temperature for tooling. The loss itself always takes beta
// explicitly.
inline constexpr double kDefaultBeta = 0.1;

struct LossInput {
  double lp_policy_chosen = 0.0;
  double lp_ref_chosen = 0.0;
  double lp_policy_rejected = 0.0;
  double lp_ref_rejected = 0.0;
  double beta = kDefaultBeta;

  // kNonFinite for non-finite values, kInvalidArgument for beta <= 0.
  void validate() const;
};

// Gradient order matches LossInput: policy_chosen, ref_chosen,
// policy_rejected, ref_rejected.
struct LossOutput {
  double loss = 0.0;
  double margin = 0.0;
  std::array<double, 4> gradient{};
};

double margin(const LossInput& input);

// log(1 + exp(x)) without overflow.
double softplus(double x);

// 1 / (1 + exp(-x)) without overflow.
double sigmoid(double x);

LossOutput dpo_loss(const LossInput& input);

double total_loss(const LossInput& text, const LossInput& image);

// Central differences on each log-probability; returns the largest
// |analytic - numeric| / max(1, |analytic|).
double finite_diff_check(const LossInput& input, double h);

// Extension point for objectives that add terms to the text + image sum.
// Ships with no extra terms.
class LossCombinator {
 public:
  using Term = std::function<double(const LossInput& text, const LossInput& image)>;

  void add_term(std::string name, Term term);

  double evaluate(const LossInput& text, const LossInput& image) const;

  std::size_t term_count() const { return terms_.size(); }

 private:
  std::vector<std::pair<std::string, Term>> terms_;
};

}  // namespace chartcf::dpo
