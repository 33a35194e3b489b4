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

// Per-dataset point and variance estimates for means, proportions and OLS
// coefficients.

#ifndef DIPSYNTH_ESTIMATORS_H_
#define DIPSYNTH_ESTIMATORS_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dipsynth/tabular.h"

namespace dipsynth {

struct MeanEstimand {
  std::string column;
};

struct ProportionEstimand {
  std::string column;
  std::string level;
};

// Intercept-augmented least squares; coefficient 0 is the intercept and
// coefficient k >= 1 belongs to regressors[k - 1].
struct OlsEstimand {
  std::string response;
  std::vector<std::string> regressors;
  std::size_t coef_index = 0;
};

using Estimand = std::variant<MeanEstimand, ProportionEstimand, OlsEstimand>;

// Parses "mean:y1", "prop:y1=1" and "ols:y1~y2+y3#y2". The selector after '#'
// names a regressor or "intercept"; without it the first slope is used.
Estimand ParseEstimand(std::string_view spec);
// Canonical spec string; ParseEstimand(EstimandName(e)) reproduces e.
std::string EstimandName(const Estimand& estimand);

// Throws InvalidArgument when columns are missing or of the wrong kind.
void CheckEstimand(const Estimand& estimand, const Schema& schema);

struct EstimateResult {
  double q = 0.0;   // point estimate
  double u = 0.0;   // variance estimate of q
  std::size_t n_used = 0;
};

// q = sample mean, u = s^2 / n with the unbiased s^2. Requires n >= 2.
EstimateResult EstimateMean(const Dataset& ds, std::string_view column);

// q = share of rows equal to `level`, u = q(1 - q) / n.
EstimateResult EstimateProportion(const Dataset& ds, std::string_view column,
                                  std::string_view level);

// Column-pivoted QR least squares. u = sigma^2 [(X'X)^-1]_kk with
// sigma^2 = RSS / (n - p). Throws NumericalError on rank deficiency.
EstimateResult EstimateOls(const Dataset& ds, std::string_view response,
                           const std::vector<std::string>& regressors,
                           std::size_t coef_index);

EstimateResult Estimate(const Dataset& ds, const Estimand& estimand);

}  // namespace dipsynth

#endif  // DIPSYNTH_ESTIMATORS_H_
