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

// Privacy primitives: budgets, a composition ledger, and the Laplace and
// exponential mechanisms. Every implemented mechanism is pure epsilon-DP; the
// delta field is carried for bookkeeping only.

#ifndef DIPSYNTH_PRIVACY_H_
#define DIPSYNTH_PRIVACY_H_

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipsynth/error.h"
#include "dipsynth/rng.h"

namespace dipsynth {

inline constexpr double kNonPrivateEpsilon = std::numeric_limits<double>::infinity();

// An (epsilon, delta) pair. epsilon == +inf is the "no privacy" sentinel:
// mechanisms bypass noise entirely and the ledger records zero spend.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  // Default delta when modelling an approximate-DP budget.
  static constexpr double kDefaultApproxDelta = 1e-6;

  static PrivacyBudget NonPrivate() { return {kNonPrivateEpsilon, 0.0}; }
  bool is_non_private() const { return epsilon == kNonPrivateEpsilon; }
  // Throws InvalidArgument unless epsilon >= 0 (or +inf) and 0 <= delta < 1.
  void Validate() const;

  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;
};

// Neighbouring-dataset semantics; fixes the L1 sensitivity of histograms.
enum class NeighborSemantics { kReplacement, kAddRemove };

// L1 sensitivity of a full contingency table: 2 when one record may be
// replaced, 1 when one record may be added or removed.
double HistogramSensitivity(NeighborSemantics semantics);

// How a ledger entry composes with the others. Sequential entries add;
// entries sharing a parallel group id contribute their maximum.
struct Composition {
  std::optional<std::string> parallel_group;

  static Composition Sequential() { return {}; }
  static Composition Parallel(std::string group) { return {std::move(group)}; }
  bool is_sequential() const { return !parallel_group.has_value(); }
};

struct LedgerEntry {
  std::string label;
  PrivacyBudget spent;
  Composition composition;
  bool non_private = false;   // recorded under the +inf sentinel, zero spend
  double running_epsilon = 0;  // cumulative epsilon after this entry
  double running_delta = 0;
};

// Composition accountant. Single-writer: each experiment owns its ledger.
class BudgetLedger {
 public:
  explicit BudgetLedger(PrivacyBudget total);

  const PrivacyBudget& total() const { return total_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }

  // Records a charge. A charge of +inf epsilon is accepted only by a ledger
  // whose total is the non-private sentinel and is stored as zero spend. Any
  // charge that would push cumulative spend past the total is refused with
  // BudgetExceeded naming `label`; the ledger is left unchanged. Zero charges
  // leave the ledger unchanged.
  BudgetLedger& Charge(const std::string& label, PrivacyBudget spend,
                       Composition composition = Composition::Sequential());

  // Cumulative spend: sum of sequential entries plus the max of each
  // parallel group.
  PrivacyBudget Spent() const;
  PrivacyBudget Remaining() const;

  nlohmann::json ToJson() const;

 private:
  static PrivacyBudget Accumulate(const std::vector<LedgerEntry>& entries);

  PrivacyBudget total_;
  std::vector<LedgerEntry> entries_;
};

// Per-copy budget when m synthetic copies share `total` under sequential
// composition. Throws InvalidArgument for m == 0.
PrivacyBudget SplitBudget(const PrivacyBudget& total, std::size_t m);

// true_values + i.i.d. Laplace(l1_sensitivity / epsilon) noise. With the
// non-private sentinel the values are returned unchanged.
std::vector<double> LaplaceMechanism(RngStream& rng,
                                     std::span<const double> true_values,
                                     double l1_sensitivity, double epsilon);

// Index of the chosen candidate, sampled with probability proportional to
// exp(epsilon * score / (2 * score_sensitivity)). With the non-private
// sentinel the argmax is returned (lowest index on ties).
std::size_t ExponentialMechanism(RngStream& rng, std::span<const double> scores,
                                 double score_sensitivity, double epsilon);

template <typename T>
const T& ExponentialMechanism(RngStream& rng, std::span<const T> candidates,
                              std::span<const double> scores,
                              double score_sensitivity, double epsilon) {
  if (candidates.size() != scores.size()) {
    throw InvalidArgument("ExponentialMechanism: candidates/scores size mismatch");
  }
  return candidates[ExponentialMechanism(rng, scores, score_sensitivity, epsilon)];
}

}  // namespace dipsynth

#endif  // DIPSYNTH_PRIVACY_H_
