// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/dpo.hpp"

#include <algorithm>
#include <cmath>

#include "chartcf/error.hpp"

namespace chartcf::dpo {

void LossInput::validate() const {
  for (double v : {lp_policy_chosen, lp_ref_chosen, lp_policy_rejected, lp_ref_rejected, beta}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "log-probability or beta is not finite");
  }
  if (beta <= 0.0) throw Error(ErrorCode::kInvalidArgument, "beta must be > 0");
}

double margin(const LossInput& in) {
  return in.beta * ((in.lp_policy_chosen - in.lp_ref_chosen) -
                    (in.lp_policy_rejected - in.lp_ref_rejected));
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LossOutput dpo_loss(const LossInput& input) {
  input.validate();
  LossOutput out;
  out.margin = margin(input);
  if (!std::isfinite(out.margin)) throw Error(ErrorCode::kNonFinite, "margin overflowed");
  out.loss = softplus(-out.margin);
  const double g = input.beta * sigmoid(-out.margin);
  out.gradient = {-g, g, g, -g};
  return out;
}

double total_loss(const LossInput& text, const LossInput& image) {
  return dpo_loss(text).loss + dpo_loss(image).loss;
}

double finite_diff_check(const LossInput& input, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be > 0");
  }
  const LossOutput analytic = dpo_loss(input);
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    LossInput plus = input;
    LossInput minus = input;
    double* fields_plus[] = {&plus.lp_policy_chosen, &plus.lp_ref_chosen,
                             &plus.lp_policy_rejected, &plus.lp_ref_rejected};
    double* fields_minus[] = {&minus.lp_policy_chosen, &minus.lp_ref_chosen,
                              &minus.lp_policy_rejected, &minus.lp_ref_rejected};
    *fields_plus[i] += h;
    *fields_minus[i] -= h;
    // Divide by the step actually taken after rounding, not the nominal 2h.
    const double step = *fields_plus[i] - *fields_minus[i];
    const double numeric = (dpo_loss(plus).loss - dpo_loss(minus).loss) / step;
    const double a = analytic.gradient[i];
    worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

void LossCombinator::add_term(std::string name, Term term) {
  terms_.emplace_back(std::move(name), std::move(term));
}

double LossCombinator::evaluate(const LossInput& text, const LossInput& image) const {
  double value = total_loss(text, image);
  for (const auto& [name, term] : terms_) value += term(text, image);
  return value;
}

}  // namespace chartcf::dpo
