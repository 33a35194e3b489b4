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


#include "dipsynth/synth.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "dipsynth/error.h"
#include "dipsynth/mvn.h"

namespace dipsynth {
namespace {

Schema BinarySchema(std::size_t p) {
  std::vector<Column> cols;
  for (std::size_t i = 0; i < p; ++i) {
    cols.push_back({"b" + std::to_string(i + 1), ColumnKind::Binary()});
  }
  return Schema(std::move(cols));
}

// b1 ~ Bern(0.5), b2 copies b1 with prob 0.9, b3 independent Bern(0.3).
Dataset ChainData(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 1);
  Eigen::MatrixXd cells(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index r = 0; r < cells.rows(); ++r) {
    const double b1 = rng.Uniform() < 0.5 ? 1.0 : 0.0;
    cells(r, 0) = b1;
    cells(r, 1) = rng.Uniform() < 0.9 ? b1 : 1.0 - b1;
    cells(r, 2) = rng.Uniform() < 0.3 ? 1.0 : 0.0;
  }
  return Dataset(BinarySchema(3), std::move(cells));
}

Dataset GaussianData(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 2);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  Eigen::MatrixXd cells = SampleMvn(rng, Eigen::VectorXd::Zero(2), cov, static_cast<int>(n));
  Schema schema({{"x", ColumnKind::Continuous(-10, 10)}, {"y", ColumnKind::Continuous(-10, 10)}});
  return Dataset::Clamped(std::move(schema), std::move(cells));
}

double ColumnMean(const Dataset& ds, std::size_t c) { return ds.column(c).mean(); }

TEST(SynthMethodTest, NamesRoundTrip) {
  for (auto m : {SynthMethod::kPerturbedHistogram, SynthMethod::kChainBayesNet,
                 SynthMethod::kParametricGaussian, SynthMethod::kParametricGaussianPpd}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_EQ(ParseMethod("PerturbedHistogram"), SynthMethod::kPerturbedHistogram);
  EXPECT_THROW(ParseMethod("cart"), InvalidArgument);
  EXPECT_TRUE(IsPrivateMethod(SynthMethod::kChainBayesNet));
  EXPECT_FALSE(IsPrivateMethod(SynthMethod::kParametricGaussianPpd));
}

TEST(SynthesisRequestTest, Validate) {
  SynthesisRequest req;
  req.total_budget = {1.0, 0.0};
  EXPECT_NO_THROW(req.Validate());
  req.m = 0;
  EXPECT_THROW(req.Validate(), InvalidArgument);
  req.m = 5;
  req.bins_per_continuous = 1;
  EXPECT_THROW(req.Validate(), InvalidArgument);
  req.bins_per_continuous = 20;
  req.total_budget = {0.0, 0.0};
  EXPECT_THROW(req.Validate(), InvalidArgument);
  req.method = SynthMethod::kParametricGaussian;
  req.total_budget = {1.0, 0.0};
  EXPECT_THROW(req.Validate(), InvalidArgument);
  req.total_budget = PrivacyBudget::NonPrivate();
  EXPECT_NO_THROW(req.Validate());
}

TEST(DiscretizerTest, CodesAndDecodesWithinBins) {
  Schema schema({{"x", ColumnKind::Continuous(0, 10)}, {"c", ColumnKind::Categorical({"a", "b", "c"})}});
  Discretizer disc(schema, 5);
  EXPECT_EQ(disc.cardinalities(), (std::vector<std::size_t>{5, 3}));
  EXPECT_EQ(disc.Code(0, 0.0), 0u);
  EXPECT_EQ(disc.Code(0, 1.99), 0u);
  EXPECT_EQ(disc.Code(0, 2.0), 1u);
  EXPECT_EQ(disc.Code(0, 10.0), 4u);
  EXPECT_EQ(disc.Code(0, -3.0), 0u);
  EXPECT_EQ(disc.Code(1, 2.0), 2u);
  RngStream rng(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double v = disc.Decode(0, 3, rng);
    EXPECT_GE(v, 6.0);
    EXPECT_LE(v, 8.0);
  }
  EXPECT_EQ(disc.Decode(1, 1, rng), 1.0);
  EXPECT_THROW(Discretizer(schema, 1), InvalidArgument);
}

TEST(MutualInformationTest, KnownValues) {
  // Identical fair binary columns: 1 bit. Independent balanced: 0 bits.
  const std::vector<std::size_t> cards = {2, 2};
  const std::vector<std::uint32_t> same = {0, 0, 1, 1, 0, 0, 1, 1};
  const std::vector<std::size_t> parent = {0};
  EXPECT_NEAR(MutualInformation(same, 2, cards, 1, parent), 1.0, 1e-12);
  const std::vector<std::uint32_t> indep = {0, 0, 0, 1, 1, 0, 1, 1};
  EXPECT_NEAR(MutualInformation(indep, 2, cards, 1, parent), 0.0, 1e-12);
  EXPECT_NEAR(MutualInformation(same, 2, cards, 1, {}), 0.0, 1e-12);
}

TEST(MutualInformationTest, DefaultSensitivityDecreasesWithN) {
  EXPECT_GT(DefaultMiSensitivity(100), DefaultMiSensitivity(1000));
  EXPECT_NEAR(DefaultMiSensitivity(1024), 2.0 * 10.0 / 1024 + 2.0 / 1024, 1e-15);
}

TEST(HistogramTest, NonPrivateFitMatchesEmpiricalCells) {
  const Dataset ds = ChainData(1000, 3);
  BudgetLedger ledger(PrivacyBudget::NonPrivate());
  RngStream rng(1, 1);
  const SynthModel model =
      FitPerturbedHistogram(ds, PrivacyBudget::NonPrivate(), 20, rng, ledger);
  const auto& h = std::get<HistogramModel>(model.params);
  ASSERT_EQ(h.probabilities.size(), 8u);
  std::vector<double> expected(8, 0.0);
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    expected[static_cast<std::size_t>(4 * ds(r, 0) + 2 * ds(r, 1) + ds(r, 2))] += 1e-3;
  }
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(h.probabilities[i], expected[i], 1e-12);
  ASSERT_EQ(ledger.entries().size(), 1u);
  EXPECT_TRUE(ledger.entries()[0].non_private);
  EXPECT_EQ(ledger.entries()[0].label, "fit/histogram");
  EXPECT_EQ(model.Summary()["cells"], 8);
}

TEST(HistogramTest, NoisyProbabilitiesAreADistribution) {
  const Dataset ds = ChainData(200, 4);
  BudgetLedger ledger(PrivacyBudget{0.01, 0.0});
  RngStream rng(2, 2);
  const SynthModel model = FitPerturbedHistogram(ds, {0.01, 0.0}, 20, rng, ledger);
  double sum = 0.0;
  for (double v : std::get<HistogramModel>(model.params).probabilities) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(ledger.Spent().epsilon, 0.01);
}

TEST(HistogramTest, HighBudgetSampleTracksMarginals) {
  const Dataset ds = ChainData(5000, 5);
  BudgetLedger ledger(PrivacyBudget{100.0, 0.0});
  RngStream rng(3, 3);
  const SynthModel model = FitPerturbedHistogram(ds, {100.0, 0.0}, 20, rng, ledger);
  const Dataset syn = model.Sample(rng, 50000);
  EXPECT_EQ(syn.schema(), ds.schema());
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(ColumnMean(syn, c), ColumnMean(ds, c), 0.01);
  }
}

TEST(HistogramTest, ContinuousColumnsStayInRange) {
  const Dataset ds = GaussianData(2000, 6);
  BudgetLedger ledger(PrivacyBudget{1.0, 0.0});
  RngStream rng(4, 4);
  const SynthModel model = FitPerturbedHistogram(ds, {1.0, 0.0}, 20, rng, ledger);
  const Dataset syn = model.Sample(rng, 2000);
  EXPECT_GE(syn.cells().minCoeff(), -10.0);
  EXPECT_LE(syn.cells().maxCoeff(), 10.0);
}

TEST(HistogramTest, RefusesHugeJointTable) {
  std::vector<Column> cols;
  for (int i = 0; i < 5; ++i) {
    cols.push_back({"x" + std::to_string(i), ColumnKind::Continuous(0, 1)});
  }
  const Dataset ds(Schema(cols), Eigen::MatrixXd::Constant(10, 5, 0.5));
  BudgetLedger ledger(PrivacyBudget{1.0, 0.0});
  RngStream rng(1, 1);
  EXPECT_THROW(FitPerturbedHistogram(ds, {1.0, 0.0}, 20, rng, ledger), InvalidArgument);
  EXPECT_TRUE(ledger.entries().empty());
}

TEST(BayesNetTest, NonPrivateSearchFindsDependency) {
  const Dataset ds = ChainData(5000, 7);
  BudgetLedger ledger(PrivacyBudget::NonPrivate());
  RngStream rng(5, 5);
  const SynthModel model =
      FitChainBayesNet(ds, PrivacyBudget::NonPrivate(), 1, 20, rng, ledger);
  const auto& bn = std::get<BayesNetModel>(model.params);
  ASSERT_EQ(bn.tables.size(), 3u);
  EXPECT_TRUE(bn.tables[0].parents.empty());
  EXPECT_EQ(bn.tables[1].parents, (std::vector<std::size_t>{0}));
  const auto summary = model.Summary();
  EXPECT_EQ(summary["parents"]["b2"], nlohmann::json::array({"b1"}));
  // P(b2 = 1 | b1 = 1) close to 0.9.
  EXPECT_NEAR(bn.tables[1].probabilities[3], 0.9, 0.02);
  ASSERT_EQ(ledger.entries().size(), 2u);
  EXPECT_EQ(ledger.entries()[0].label, "fit/bayesnet.structure");
  EXPECT_EQ(ledger.entries()[1].label, "fit/bayesnet.parameters");
}

TEST(BayesNetTest, BudgetSplitsBetweenStructureAndParameters) {
  const Dataset ds = ChainData(500, 8);
  BudgetLedger ledger(PrivacyBudget{2.0, 0.0});
  RngStream rng(6, 6);
  FitChainBayesNet(ds, {2.0, 0.0}, 1, 20, rng, ledger);
  ASSERT_EQ(ledger.entries().size(), 2u);
  EXPECT_DOUBLE_EQ(ledger.entries()[0].spent.epsilon, 1.0);
  EXPECT_DOUBLE_EQ(ledger.entries()[1].spent.epsilon, 1.0);
  EXPECT_DOUBLE_EQ(ledger.Spent().epsilon, 2.0);
}

TEST(BayesNetTest, FixedChainSpendsAllOnParameters) {
  const Dataset ds = ChainData(500, 9);
  BudgetLedger ledger(PrivacyBudget{2.0, 0.0});
  RngStream rng(7, 7);
  FitOptions options;
  options.fixed_chain = true;
  const SynthModel model = FitChainBayesNet(ds, {2.0, 0.0}, 1, 20, rng, ledger, options);
  const auto& bn = std::get<BayesNetModel>(model.params);
  EXPECT_EQ(bn.tables[2].parents, (std::vector<std::size_t>{1}));
  ASSERT_EQ(ledger.entries().size(), 1u);
  EXPECT_DOUBLE_EQ(ledger.entries()[0].spent.epsilon, 2.0);
}

TEST(BayesNetTest, ConditionalRowsAreDistributions) {
  const Dataset ds = ChainData(300, 10);
  BudgetLedger ledger(PrivacyBudget{0.05, 0.0});
  RngStream rng(8, 8);
  const SynthModel model = FitChainBayesNet(ds, {0.05, 0.0}, 2, 20, rng, ledger);
  for (const auto& t : std::get<BayesNetModel>(model.params).tables) {
    for (std::size_t row = 0; row * t.cardinality < t.probabilities.size(); ++row) {
      double s = 0.0;
      for (std::size_t k = 0; k < t.cardinality; ++k) {
        EXPECT_GE(t.probabilities[row * t.cardinality + k], 0.0);
        s += t.probabilities[row * t.cardinality + k];
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
  const Dataset syn = model.Sample(rng, 100);
  EXPECT_EQ(syn.rows(), 100);
}

TEST(GaussianTest, FitsMomentsAndRejectsBadInput) {
  const Dataset ds = GaussianData(4000, 11);
  RngStream rng(9, 9);
  const SynthModel model = FitParametricGaussian(ds, false, rng);
  const auto& g = std::get<GaussianModel>(model.params);
  EXPECT_NEAR(g.covariance(0, 1), 0.5, 0.05);
  EXPECT_TRUE(model.charged.is_non_private());
  EXPECT_THROW(FitParametricGaussian(ChainData(100, 1), false, rng), InvalidArgument);
  Schema schema({{"x", ColumnKind::Continuous(-10, 10)}, {"y", ColumnKind::Continuous(-10, 10)}});
  Eigen::MatrixXd dup(50, 2);
  for (int r = 0; r < 50; ++r) dup(r, 0) = dup(r, 1) = r * 0.1;
  EXPECT_THROW(FitParametricGaussian(Dataset(schema, dup), false, rng), NumericalError);
  EXPECT_THROW(FitParametricGaussian(Dataset(schema, dup.topRows(4)), false, rng),
               InvalidArgument);
}

TEST(GaussianTest, PosteriorDrawsAddBetweenCopyVariance) {
  // Copy means vary more under posterior predictive synthesis: the extra
  // parameter draw roughly doubles the variance of a copy mean.
  const Dataset ds = GaussianData(200, 12);
  auto copy_mean_var = [&](SynthMethod method) {
    SynthesisRequest req;
    req.method = method;
    req.total_budget = PrivacyBudget::NonPrivate();
    req.m = 400;
    BudgetLedger ledger(PrivacyBudget::NonPrivate());
    const auto copies = GenerateMDatasets(ds, req, RngStream(13, 13), ledger);
    Eigen::VectorXd means(static_cast<Eigen::Index>(copies.size()));
    for (std::size_t i = 0; i < copies.size(); ++i) {
      means(static_cast<Eigen::Index>(i)) = ColumnMean(copies[i], 0);
    }
    return (means.array() - means.mean()).square().sum() / (means.size() - 1);
  };
  const double plain = copy_mean_var(SynthMethod::kParametricGaussian);
  const double ppd = copy_mean_var(SynthMethod::kParametricGaussianPpd);
  EXPECT_NEAR(plain, 1.0 / 200, 0.3 / 200);
  EXPECT_NEAR(ppd, 2.0 / 200, 0.6 / 200);
}

TEST(GenerateTest, SplitsBudgetAcrossCopies) {
  const Dataset ds = ChainData(500, 14);
  SynthesisRequest req;
  req.total_budget = {2.5, 0.0};
  req.m = 5;
  BudgetLedger ledger(PrivacyBudget{2.5, 0.0});
  std::vector<SynthModel> models;
  const auto copies = GenerateMDatasets(ds, req, RngStream(1, 1), ledger, &models);
  ASSERT_EQ(copies.size(), 5u);
  ASSERT_EQ(models.size(), 5u);
  ASSERT_EQ(ledger.entries().size(), 5u);
  for (const auto& e : ledger.entries()) EXPECT_DOUBLE_EQ(e.spent.epsilon, 0.5);
  EXPECT_EQ(ledger.entries()[4].label, "copy 5/histogram");
  EXPECT_NEAR(ledger.Spent().epsilon, 2.5, 1e-12);
  EXPECT_FALSE(copies[0] == copies[1]);
}

TEST(GenerateTest, RefusesOverBudgetBeforeSpending) {
  const Dataset ds = ChainData(100, 15);
  SynthesisRequest req;
  req.total_budget = {2.0, 0.0};
  req.m = 2;
  BudgetLedger ledger(PrivacyBudget{1.0, 0.0});
  EXPECT_THROW(GenerateMDatasets(ds, req, RngStream(1, 1), ledger), BudgetExceeded);
  EXPECT_TRUE(ledger.entries().empty());
}

TEST(GenerateTest, DeterministicGivenStream) {
  const Dataset ds = ChainData(300, 16);
  SynthesisRequest req;
  req.method = SynthMethod::kChainBayesNet;
  req.total_budget = {1.0, 0.0};
  req.m = 3;
  req.out_n = 50;
  BudgetLedger a(PrivacyBudget{1.0, 0.0});
  BudgetLedger b(PrivacyBudget{1.0, 0.0});
  const auto x = GenerateMDatasets(ds, req, RngStream(9, 9), a);
  const auto y = GenerateMDatasets(ds, req, RngStream(9, 9), b);
  EXPECT_EQ(x, y);
  EXPECT_EQ(x[0].rows(), 50);
}

TEST(WriteBundleTest, WritesCopiesAndManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "dipsynth_bundle_test";
  std::filesystem::remove_all(dir);
  const Dataset ds = ChainData(20, 17);
  WriteBundle(dir, {ds, ds}, {{"m", 2}});
  EXPECT_TRUE(std::filesystem::exists(dir / "syn_1.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "syn_2.csv"));
  std::ifstream in(dir / "manifest.json");
  EXPECT_EQ(nlohmann::json::parse(in)["m"], 2);
  EXPECT_EQ(LoadCsv(dir / "syn_2.csv", ds.schema()).dataset, ds);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dipsynth
