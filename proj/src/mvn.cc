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

#include "dipsynth/mvn.h"

#include <cmath>

#include "dipsynth/error.h"

namespace dipsynth {

Eigen::MatrixXd Cholesky(const Eigen::MatrixXd& cov) {
  const Eigen::Index p = cov.rows();
  if (p == 0 || cov.cols() != p) {
    throw InvalidArgument("Cholesky: matrix must be square and nonempty");
  }
  const double scale = cov.cwiseAbs().maxCoeff();
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale)) {
    throw InvalidArgument("Cholesky: matrix is not symmetric");
  }
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double pivot = cov(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > 0.0)) {
      throw NumericalError("Cholesky: matrix is not positive definite (pivot " +
                           std::to_string(j) + " <= 0)");
    }
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = cov(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / diag;
    }
  }
  return lower;
}

Eigen::MatrixXd SampleMvnWithFactor(RngStream& rng, const Eigen::VectorXd& mean,
                                    const Eigen::MatrixXd& lower, int n) {
  if (n < 1) throw InvalidArgument("SampleMvn: n must be at least 1");
  const Eigen::Index p = lower.rows();
  if (mean.size() != p) {
    throw InvalidArgument("SampleMvn: mean and covariance dimensions differ");
  }
  Eigen::MatrixXd out(n, p);
  Eigen::VectorXd z(p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.Normal();
    out.row(i) = (mean + lower.triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

Eigen::MatrixXd SampleMvn(RngStream& rng, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov, int n) {
  return SampleMvnWithFactor(rng, mean, Cholesky(cov), n);
}

PdProjection NearestCorrelationPd(const Eigen::MatrixXd& corr,
                                  double min_eigenvalue) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("NearestCorrelationPd: eigendecomposition failed");
  }
  if (eig.eigenvalues().minCoeff() >= min_eigenvalue) return {corr, false};
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(min_eigenvalue);
  Eigen::MatrixXd fixed =
      eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd inv_sd = fixed.diagonal().cwiseSqrt().cwiseInverse();
  fixed = inv_sd.asDiagonal() * fixed * inv_sd.asDiagonal();
  fixed = 0.5 * (fixed + fixed.transpose());
  return {fixed, true};
}

}  // namespace dipsynth
