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

// Special functions used for interval construction and for generating
// correlated binary data. All routines are self-contained.

#ifndef DIPSYNTH_SPECIAL_H_
#define DIPSYNTH_SPECIAL_H_

namespace dipsynth {

double NormalCdf(double x);
double NormalPdf(double x);

// Inverse standard-normal CDF. Absolute error below 1e-9 on (0, 1); throws
// InvalidArgument outside the open interval.
double QuantileNormal(double prob);

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double IncompleteBeta(double a, double b, double x);

// Student-t CDF with real-valued df > 0.
double StudentTCdf(double t, double df);

// Student-t quantile with real-valued df > 0 (df may be +inf, in which case
// the normal quantile is returned). Absolute error below 1e-7.
double QuantileT(double prob, double df);

// P(X <= x, Y <= y) for a standard bivariate normal with correlation rho.
// Drezner-Wesolowsky style Gauss-Legendre quadrature (Genz's refinement);
// absolute error below 1e-7. Throws InvalidArgument if |rho| > 1.
double BvnCdf(double x, double y, double rho);

// Pearson correlation of the binary pair (1{Z1 > t1}, 1{Z2 > t2}) where
// (Z1, Z2) is standard bivariate normal with correlation `latent_rho` and the
// thresholds are chosen so that P(success) = p1, p2.
double BinaryCorrFromLatent(double p1, double p2, double latent_rho);

// Latent Gaussian correlation that, after thresholding at
// QuantileNormal(1 - p), yields binary variables with Pearson correlation
// `binary_rho`. Solved by bisection to |residual| < 1e-8. Throws
// InvalidArgument when `binary_rho` is infeasible for the marginals.
double LatentCorrForBinary(double p1, double p2, double binary_rho);

}  // namespace dipsynth

#endif  // DIPSYNTH_SPECIAL_H_
