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

#ifndef DIPSYNTH_MVN_H_
#define DIPSYNTH_MVN_H_

#include <Eigen/Dense>

#include "dipsynth/rng.h"

namespace dipsynth {

// Lower-triangular L with L * L^T == cov. Throws InvalidArgument for a
// non-square or asymmetric input and NumericalError when a pivot is <= 0.
Eigen::MatrixXd Cholesky(const Eigen::MatrixXd& cov);

// n x p matrix whose rows are i.i.d. N(mean, cov).
Eigen::MatrixXd SampleMvn(RngStream& rng, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov, int n);

// Same as SampleMvn but with a precomputed Cholesky factor.
Eigen::MatrixXd SampleMvnWithFactor(RngStream& rng, const Eigen::VectorXd& mean,
                                    const Eigen::MatrixXd& lower, int n);

struct PdProjection {
  Eigen::MatrixXd matrix;
  bool adjusted = false;  // true when eigenvalues had to be raised
};

// Raises eigenvalues below `min_eigenvalue` and rescales back to a unit
// diagonal. A matrix that is already PD with margin is returned unchanged.
PdProjection NearestCorrelationPd(const Eigen::MatrixXd& corr,
                                  double min_eigenvalue = 1e-8);

}  // namespace dipsynth

#endif  // DIPSYNTH_MVN_H_
