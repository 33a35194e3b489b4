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


#include "dipsynth/special.h"

#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "dipsynth/error.h"
#include "dipsynth/rng.h"
#include "oracle_values.h"

namespace dipsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(QuantileNormalTest, MatchesOracle) {
  for (const auto& pt : oracle::kNormalQuantile) {
    EXPECT_NEAR(QuantileNormal(pt.a), pt.value, 1e-9) << "p=" << pt.a;
  }
}

TEST(QuantileNormalTest, AgreesWithBoostOnDenseGrid) {
  const boost::math::normal_distribution<double> normal;
  for (int i = 1; i < 2000; ++i) {
    const double p = i / 2000.0;
    ASSERT_NEAR(QuantileNormal(p), boost::math::quantile(normal, p), 1e-9) << p;
  }
}

TEST(QuantileNormalTest, RejectsOutsideOpenInterval) {
  EXPECT_THROW(QuantileNormal(0.0), InvalidArgument);
  EXPECT_THROW(QuantileNormal(1.0), InvalidArgument);
  EXPECT_THROW(QuantileNormal(-0.1), InvalidArgument);
  EXPECT_THROW(QuantileNormal(std::nan("")), InvalidArgument);
}

TEST(NormalCdfTest, RoundTripsWithQuantile) {
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.8, 0.99}) {
    EXPECT_NEAR(NormalCdf(QuantileNormal(p)), p, 1e-12 + 1e-9 * p);
  }
  EXPECT_NEAR(NormalPdf(0.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-15);
}

TEST(IncompleteBetaTest, MatchesOracle) {
  for (const auto& pt : oracle::kIncompleteBeta) {
    EXPECT_NEAR(IncompleteBeta(pt.a, pt.b, pt.c), pt.value, 1e-12)
        << pt.a << " " << pt.b << " " << pt.c;
  }
  EXPECT_EQ(IncompleteBeta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(IncompleteBeta(2.0, 3.0, 1.0), 1.0);
  EXPECT_THROW(IncompleteBeta(0.0, 1.0, 0.5), InvalidArgument);
  EXPECT_THROW(IncompleteBeta(1.0, 1.0, 1.5), InvalidArgument);
}

TEST(StudentTTest, CdfMatchesOracle) {
  for (const auto& pt : oracle::kStudentTCdf) {
    EXPECT_NEAR(StudentTCdf(pt.a, pt.b), pt.value, 1e-10) << pt.a << " df=" << pt.b;
  }
}

TEST(StudentTTest, QuantileMatchesOracle) {
  for (const auto& pt : oracle::kStudentTQuantile) {
    // The 1e-7 contract is absolute; the df = 0.5 point lies far in the tail
    // (t ~ 4114), so it is checked relative to its magnitude.
    const double tol = std::max(1e-7, 1e-9 * std::abs(pt.value));
    EXPECT_NEAR(QuantileT(pt.a, pt.b), pt.value, tol) << "p=" << pt.a << " df=" << pt.b;
  }
}

TEST(StudentTTest, QuantileAgreesWithBoostOnGrid) {
  for (double df : {1.0, 1.7, 3.0, 4.0, 9.5, 25.0, 144.0, 1e4, 3e5}) {
    const boost::math::students_t_distribution<double> t(df);
    for (double p : {0.001, 0.01, 0.05, 0.2, 0.5, 0.65, 0.9, 0.975, 0.995}) {
      EXPECT_NEAR(QuantileT(p, df), boost::math::quantile(t, p), 1e-7)
          << "df=" << df << " p=" << p;
    }
  }
}

TEST(StudentTTest, ConvergesToNormal) {
  EXPECT_EQ(QuantileT(0.975, kInf), QuantileNormal(0.975));
  EXPECT_NEAR(QuantileT(0.975, 1e9), QuantileNormal(0.975), 1e-8);
  EXPECT_NEAR(QuantileT(0.975, 161604.0), oracle::kT975Df161604, 1e-9);
  EXPECT_EQ(QuantileT(0.5, 3.0), 0.0);
}

TEST(StudentTTest, RejectsInvalidArguments) {
  EXPECT_THROW(QuantileT(0.0, 4.0), InvalidArgument);
  EXPECT_THROW(QuantileT(1.0, 4.0), InvalidArgument);
  EXPECT_THROW(QuantileT(0.5, 0.0), InvalidArgument);
  EXPECT_THROW(QuantileT(0.5, -2.0), InvalidArgument);
  EXPECT_THROW(QuantileT(0.5, std::nan("")), InvalidArgument);
}

TEST(BvnCdfTest, MatchesOracle) {
  for (const auto& pt : oracle::kBvnCdf) {
    EXPECT_NEAR(BvnCdf(pt.a, pt.b, pt.c), pt.value, 1e-7)
        << pt.a << " " << pt.b << " rho=" << pt.c;
  }
}

TEST(BvnCdfTest, LimitsAndSymmetry) {
  EXPECT_NEAR(BvnCdf(0.4, -0.3, 0.0), NormalCdf(0.4) * NormalCdf(-0.3), 1e-15);
  EXPECT_NEAR(BvnCdf(0.4, -0.3, 1.0), NormalCdf(-0.3), 1e-15);
  EXPECT_NEAR(BvnCdf(0.4, -0.3, -1.0), std::max(0.0, NormalCdf(0.4) + NormalCdf(-0.3) - 1.0),
              1e-15);
  EXPECT_NEAR(BvnCdf(0.7, -0.2, 0.45), BvnCdf(-0.2, 0.7, 0.45), 1e-14);
  EXPECT_NEAR(BvnCdf(10.0, 0.3, 0.5), NormalCdf(0.3), 1e-12);
  EXPECT_THROW(BvnCdf(0.0, 0.0, 1.01), InvalidArgument);
}

TEST(BvnCdfTest, AgreesWithMonteCarlo) {
  RngStream rng(17, 0);
  const double rho = -0.35;
  const double x = 0.3;
  const double y = -0.8;
  const int n = 400000;
  int hits = 0;
  const double s = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    const double z1 = rng.Normal();
    const double z2 = rho * z1 + s * rng.Normal();
    hits += (z1 <= x && z2 <= y);
  }
  EXPECT_NEAR(hits / double(n), BvnCdf(x, y, rho), 0.003);
}

TEST(LatentCorrTest, MatchesOracle) {
  EXPECT_NEAR(LatentCorrForBinary(0.6, 0.6, 0.6), oracle::kLatentFor06, 1e-7);
  EXPECT_NEAR(LatentCorrForBinary(0.6, 0.6, 0.2), oracle::kLatentFor02, 1e-7);
  EXPECT_NEAR(LatentCorrForBinary(0.3, 0.8, 0.25), oracle::kLatentAsym, 1e-7);
  EXPECT_NEAR(BinaryCorrFromLatent(0.6, 0.6, 0.5), oracle::kBinaryFromLatentHalf, 1e-8);
}

TEST(LatentCorrTest, ResidualIsTiny) {
  for (double rho_b : {-0.5, -0.1, 0.0, 0.2, 0.6, 0.9}) {
    const double latent = LatentCorrForBinary(0.6, 0.6, rho_b);
    EXPECT_NEAR(BinaryCorrFromLatent(0.6, 0.6, latent), rho_b, 1e-8) << rho_b;
  }
  EXPECT_NEAR(LatentCorrForBinary(0.6, 0.6, 0.0), 0.0, 1e-8);
}

TEST(LatentCorrTest, RejectsInfeasibleTargets) {
  // With p1 = 0.1 and p2 = 0.9 the binary correlation cannot exceed 1/9.
  EXPECT_THROW(LatentCorrForBinary(0.1, 0.9, 0.5), InvalidArgument);
  EXPECT_THROW(LatentCorrForBinary(0.0, 0.5, 0.1), InvalidArgument);
  EXPECT_THROW(LatentCorrForBinary(0.5, 0.5, 1.5), InvalidArgument);
}

}  // namespace
}  // namespace dipsynth
