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

// Combining rules that pool m per-copy estimates into one inference.

#ifndef DIPSYNTH_COMBINE_H_
#define DIPSYNTH_COMBINE_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipsynth/estimators.h"

namespace dipsynth {

enum class VarianceRule { kTp, kTs, kTsPpd, kNaiveUbar };

// "tp", "ts", "tsppd", "naive".
std::string_view RuleName(VarianceRule rule);
VarianceRule ParseRule(std::string_view name);

double CombinePoint(std::span<const double> q);
double WithinVariance(std::span<const double> u);
// Sample variance with denominator m - 1. Requires m >= 2.
double BetweenVariance(std::span<const double> q);

// Tp: b_m / m + u_bar; Ts: u_bar (1 + 1/m); TsPpd: u_bar (1 + 2/m);
// NaiveUbar: u_bar.
double PooledVariance(double u_bar, double b_m, std::size_t m, VarianceRule rule);

// Tp: (m - 1)(1 + 1/r)^2 with r = b_m / (m u_bar); +inf when b_m == 0 and
// m - 1 when u_bar == 0. Every other rule returns +inf.
double DegreesFreedom(double u_bar, double b_m, std::size_t m, VarianceRule rule);

// q_bar -/+ t_{df, (1 + level) / 2} sqrt(variance); normal quantile if df
// is infinite.
std::pair<double, double> ConfidenceInterval(double q_bar, double variance, double df,
                                             double level);

struct CombinedInference {
  std::size_t m = 0;
  VarianceRule rule = VarianceRule::kTp;
  double q_bar = 0.0;
  double u_bar = 0.0;
  double b_m = 0.0;  // 0 when m == 1
  double variance = 0.0;
  double df = 0.0;
  double level = 0.95;
  double lo = 0.0;
  double hi = 0.0;

  bool Covers(double theta) const { return lo <= theta && theta <= hi; }
  // df is written as the string "inf" when infinite.
  nlohmann::json ToJson(std::string_view estimand = {}) const;
};

CombinedInference Combine(std::span<const EstimateResult> results, VarianceRule rule,
                          double level = 0.95);

}  // namespace dipsynth

#endif  // DIPSYNTH_COMBINE_H_
