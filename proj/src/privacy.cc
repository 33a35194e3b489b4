// Copyright 2026 The dipsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dipsynth/privacy.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "dipsynth/error.h"
#include "dipsynth/format.h"

namespace dipsynth {
namespace {

// Relative slack when comparing cumulative spend against the total, so that
// m charges of total/m are never refused because of rounding.
constexpr double kBudgetSlack = 1e-9;

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void Add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

nlohmann::json EpsilonJson(double eps) {
  if (std::isinf(eps)) return "inf";
  return eps;
}

}  // namespace

void PrivacyBudget::Validate() const {
  if (std::isnan(epsilon) || epsilon < 0.0 || epsilon == -kNonPrivateEpsilon) {
    throw InvalidArgument("privacy budget: epsilon must be >= 0 (or inf)");
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw InvalidArgument("privacy budget: delta must lie in [0, 1)");
  }
}

double HistogramSensitivity(NeighborSemantics semantics) {
  return semantics == NeighborSemantics::kReplacement ? 2.0 : 1.0;
}

BudgetLedger::BudgetLedger(PrivacyBudget total) : total_(total) { total_.Validate(); }

PrivacyBudget BudgetLedger::Accumulate(const std::vector<LedgerEntry>& entries) {
  CompensatedSum eps;
  CompensatedSum delta;
  std::map<std::string, PrivacyBudget> groups;
  for (const LedgerEntry& e : entries) {
    if (e.non_private) continue;
    if (e.composition.is_sequential()) {
      eps.Add(e.spent.epsilon);
      delta.Add(e.spent.delta);
    } else {
      PrivacyBudget& g = groups[*e.composition.parallel_group];
      g.epsilon = std::max(g.epsilon, e.spent.epsilon);
      g.delta = std::max(g.delta, e.spent.delta);
    }
  }
  for (const auto& [id, g] : groups) {
    eps.Add(g.epsilon);
    delta.Add(g.delta);
  }
  return {eps.value(), delta.value()};
}

BudgetLedger& BudgetLedger::Charge(const std::string& label, PrivacyBudget spend,
                                   Composition composition) {
  spend.Validate();
  if (spend.epsilon == 0.0 && spend.delta == 0.0) return *this;

  LedgerEntry entry{label, spend, std::move(composition)};
  if (spend.is_non_private()) {
    if (!total_.is_non_private()) {
      throw BudgetExceeded("over budget: '" + label +
                           "' requests a non-private (epsilon = inf) release "
                           "against a finite total of epsilon = " +
                           FormatDouble(total_.epsilon));
    }
    entry.non_private = true;
    entry.spent = {0.0, spend.delta};
  }

  std::vector<LedgerEntry> next = entries_;
  next.push_back(entry);
  const PrivacyBudget cumulative = Accumulate(next);
  if (!total_.is_non_private()) {
    const double eps_limit = total_.epsilon * (1.0 + kBudgetSlack);
    const double delta_limit = total_.delta * (1.0 + kBudgetSlack);
    if (cumulative.epsilon > eps_limit || cumulative.delta > delta_limit) {
      const PrivacyBudget spent = Spent();
      throw BudgetExceeded("over budget: '" + label + "' requests epsilon = " +
                           FormatDouble(spend.epsilon) + ", delta = " +
                           FormatDouble(spend.delta) + " but only epsilon = " +
                           FormatDouble(total_.epsilon - spent.epsilon) +
                           ", delta = " + FormatDouble(total_.delta - spent.delta) +
                           " remains");
    }
  }
  next.back().running_epsilon = cumulative.epsilon;
  next.back().running_delta = cumulative.delta;
  entries_ = std::move(next);
  return *this;
}

PrivacyBudget BudgetLedger::Spent() const { return Accumulate(entries_); }

PrivacyBudget BudgetLedger::Remaining() const {
  if (total_.is_non_private()) return PrivacyBudget::NonPrivate();
  const PrivacyBudget spent = Spent();
  return {std::max(0.0, total_.epsilon - spent.epsilon),
          std::max(0.0, total_.delta - spent.delta)};
}

nlohmann::json BudgetLedger::ToJson() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const LedgerEntry& e : entries_) {
    nlohmann::json j = {{"label", e.label},
                        {"epsilon", e.spent.epsilon},
                        {"delta", e.spent.delta},
                        {"composition", e.composition.is_sequential() ? "sequential"
                                                                      : "parallel"},
                        {"running_epsilon", e.running_epsilon},
                        {"running_delta", e.running_delta}};
    if (e.composition.parallel_group) j["parallel_group"] = *e.composition.parallel_group;
    if (e.non_private) j["non_private"] = true;
    entries.push_back(std::move(j));
  }
  const PrivacyBudget spent = Spent();
  return {{"total", {{"epsilon", EpsilonJson(total_.epsilon)}, {"delta", total_.delta}}},
          {"spent", {{"epsilon", spent.epsilon}, {"delta", spent.delta}}},
          {"entries", std::move(entries)}};
}

PrivacyBudget SplitBudget(const PrivacyBudget& total, std::size_t m) {
  if (m == 0) throw InvalidArgument("SplitBudget: m must be at least 1");
  total.Validate();
  if (total.is_non_private()) return {kNonPrivateEpsilon, total.delta / static_cast<double>(m)};
  return {total.epsilon / static_cast<double>(m), total.delta / static_cast<double>(m)};
}

std::vector<double> LaplaceMechanism(RngStream& rng,
                                     std::span<const double> true_values,
                                     double l1_sensitivity, double epsilon) {
  if (!(l1_sensitivity > 0.0) || !std::isfinite(l1_sensitivity)) {
    throw InvalidArgument("LaplaceMechanism: sensitivity must be positive and finite");
  }
  if (std::isnan(epsilon) || !(epsilon > 0.0)) {
    throw InvalidArgument("LaplaceMechanism: epsilon must be positive");
  }
  std::vector<double> out(true_values.begin(), true_values.end());
  if (epsilon == kNonPrivateEpsilon) return out;
  const double scale = l1_sensitivity / epsilon;
  for (double& v : out) v += rng.Laplace(scale);
  return out;
}

std::size_t ExponentialMechanism(RngStream& rng, std::span<const double> scores,
                                 double score_sensitivity, double epsilon) {
  if (scores.empty()) throw InvalidArgument("ExponentialMechanism: no candidates");
  if (!(score_sensitivity > 0.0) || !std::isfinite(score_sensitivity)) {
    throw InvalidArgument("ExponentialMechanism: sensitivity must be positive and finite");
  }
  if (std::isnan(epsilon) || !(epsilon > 0.0)) {
    throw InvalidArgument("ExponentialMechanism: epsilon must be positive");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("ExponentialMechanism: scores must be finite");
  }
  const auto best = std::max_element(scores.begin(), scores.end());
  if (epsilon == kNonPrivateEpsilon) {
    return static_cast<std::size_t>(best - scores.begin());
  }
  // Weights relative to the best score keep exp() in range.
  const double factor = epsilon / (2.0 * score_sensitivity);
  std::vector<double> cumulative(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += std::exp(factor * (scores[i] - *best));
    cumulative[i] = total;
  }
  return rng.Categorical(cumulative);
}

}  // namespace dipsynth
