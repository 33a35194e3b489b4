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


#include "dipsynth/estimators.h"

#include <vector>

#include <gtest/gtest.h>

#include "dipsynth/error.h"
#include "oracle_values.h"

namespace dipsynth {
namespace {

Dataset SixRows() {
  Schema schema({{"y", ColumnKind::Continuous(-100, 100)},
                 {"x", ColumnKind::Continuous(-100, 100)},
                 {"z", ColumnKind::Continuous(-100, 100)},
                 {"b", ColumnKind::Binary()},
                 {"c", ColumnKind::Categorical({"lo", "mid", "hi"})}});
  Eigen::MatrixXd cells(6, 5);
  cells << 1.1, 1, 2, 1, 0,
           1.9, 2, 1, 0, 1,
           3.2, 3, 4, 1, 2,
           3.8, 4, 3, 1, 2,
           5.3, 5, 6, 0, 1,
           5.9, 6, 5, 1, 2;
  return Dataset(std::move(schema), std::move(cells));
}

TEST(ParseEstimandTest, Forms) {
  const auto mean = std::get<MeanEstimand>(ParseEstimand("mean:y"));
  EXPECT_EQ(mean.column, "y");
  const auto prop = std::get<ProportionEstimand>(ParseEstimand("prop:c=hi"));
  EXPECT_EQ(prop.column, "c");
  EXPECT_EQ(prop.level, "hi");
  const auto ols = std::get<OlsEstimand>(ParseEstimand("ols:y~x+z#z"));
  EXPECT_EQ(ols.response, "y");
  EXPECT_EQ(ols.regressors, (std::vector<std::string>{"x", "z"}));
  EXPECT_EQ(ols.coef_index, 2u);
  EXPECT_EQ(std::get<OlsEstimand>(ParseEstimand("ols:y~x+z")).coef_index, 1u);
  EXPECT_EQ(std::get<OlsEstimand>(ParseEstimand("ols:y~x+z#intercept")).coef_index, 0u);
}

TEST(ParseEstimandTest, CanonicalNamesRoundTrip) {
  for (const char* spec : {"mean:y", "prop:b=1", "ols:y~x+z#intercept", "ols:y~x+z#x"}) {
    EXPECT_EQ(EstimandName(ParseEstimand(spec)), spec);
  }
  EXPECT_EQ(EstimandName(ParseEstimand("ols:y~x+z")), "ols:y~x+z#x");
}

TEST(ParseEstimandTest, Errors) {
  for (const char* spec : {"", "mean", "mean:", "median:y", "prop:b", "prop:=1",
                           "ols:y", "ols:y~", "ols:y~x#w", "ols:~x"}) {
    EXPECT_THROW(ParseEstimand(spec), InvalidArgument) << spec;
  }
}

TEST(CheckEstimandTest, KindsAndNames) {
  const Schema schema = SixRows().schema();
  EXPECT_NO_THROW(CheckEstimand(ParseEstimand("mean:b"), schema));
  EXPECT_NO_THROW(CheckEstimand(ParseEstimand("prop:c=mid"), schema));
  EXPECT_THROW(CheckEstimand(ParseEstimand("mean:c"), schema), InvalidArgument);
  EXPECT_THROW(CheckEstimand(ParseEstimand("mean:w"), schema), InvalidArgument);
  EXPECT_THROW(CheckEstimand(ParseEstimand("prop:y=1"), schema), InvalidArgument);
  EXPECT_THROW(CheckEstimand(ParseEstimand("prop:c=top"), schema), InvalidArgument);
  EXPECT_THROW(CheckEstimand(ParseEstimand("ols:y~c"), schema), InvalidArgument);
}

TEST(EstimateTest, MeanAndVariance) {
  const auto r = EstimateMean(SixRows(), "y");
  EXPECT_NEAR(r.q, 21.2 / 6, 1e-14);
  const Eigen::VectorXd y = SixRows().column(0);
  const double s2 = (y.array() - y.mean()).square().sum() / 5;
  EXPECT_NEAR(r.u, s2 / 6, 1e-14);
  EXPECT_EQ(r.n_used, 6u);
}

TEST(EstimateTest, Proportion) {
  const auto b = EstimateProportion(SixRows(), "b", "1");
  EXPECT_NEAR(b.q, 4.0 / 6, 1e-15);
  EXPECT_NEAR(b.u, (4.0 / 6) * (2.0 / 6) / 6, 1e-15);
  EXPECT_NEAR(EstimateProportion(SixRows(), "c", "hi").q, 0.5, 1e-15);
}

TEST(EstimateTest, OlsMatchesReference) {
  const Dataset ds = SixRows();
  const std::vector<std::string> regs = {"x", "z"};
  const auto b0 = EstimateOls(ds, "y", regs, 0);
  const auto b1 = EstimateOls(ds, "y", regs, 1);
  const auto b2 = EstimateOls(ds, "y", regs, 2);
  EXPECT_NEAR(b0.q, oracle::kOlsBetaIntercept, 1e-12);
  EXPECT_NEAR(b1.q, oracle::kOlsBetaX, 1e-12);
  EXPECT_NEAR(b2.q, oracle::kOlsBetaZ, 1e-12);
  EXPECT_NEAR(b0.u, oracle::kOlsVarIntercept, 1e-13);
  EXPECT_NEAR(b1.u, oracle::kOlsVarX, 1e-13);
  EXPECT_NEAR(b2.u, oracle::kOlsVarZ, 1e-13);
  // Regressor order does not change a named coefficient.
  const auto swapped = Estimate(ds, ParseEstimand("ols:y~z+x#x"));
  EXPECT_NEAR(swapped.q, oracle::kOlsBetaX, 1e-12);
  EXPECT_NEAR(swapped.u, oracle::kOlsVarX, 1e-13);
}

TEST(EstimateTest, OlsErrors) {
  const Dataset ds = SixRows();
  EXPECT_THROW(EstimateOls(ds, "y", {"x", "x"}, 1), NumericalError);
  EXPECT_THROW(EstimateOls(ds, "y", {"x"}, 2), InvalidArgument);
  EXPECT_THROW(EstimateOls(Dataset(ds.schema(), ds.cells().topRows(3)), "y", {"x", "z"}, 1),
               InvalidArgument);
}

TEST(EstimateTest, DispatchMatchesDirectCalls) {
  const Dataset ds = SixRows();
  EXPECT_EQ(Estimate(ds, ParseEstimand("mean:x")).q, EstimateMean(ds, "x").q);
  EXPECT_EQ(Estimate(ds, ParseEstimand("prop:c=lo")).q, EstimateProportion(ds, "c", "lo").q);
  EXPECT_THROW(Estimate(ds, ParseEstimand("mean:c")), InvalidArgument);
  EXPECT_THROW(EstimateMean(Dataset(ds.schema(), ds.cells().topRows(1)), "y"),
               InvalidArgument);
}

}  // namespace
}  // namespace dipsynth
