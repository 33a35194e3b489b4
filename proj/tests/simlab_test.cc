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


#include "dipsynth/simlab.h"

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dipsynth/special.h"
#include "oracle_values.h"

namespace dipsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double Corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

double Var(const Eigen::VectorXd& a) {
  return (a.array() - a.mean()).square().sum() / static_cast<double>(a.size() - 1);
}

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string FirstLine(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

ExperimentConfig SmallConfig() {
  ExperimentConfig cfg;
  cfg.simulation = Simulation::kSim3;
  cfg.n = 200;
  cfg.replications = 6;
  cfg.m = 3;
  cfg.epsilon_grid = {0.5, kInf};
  cfg.methods = {SynthMethod::kPerturbedHistogram, SynthMethod::kChainBayesNet};
  cfg.seed = 42;
  return cfg;
}

TEST(SimulationNameTest, RoundTrip) {
  for (auto s : {Simulation::kSim1, Simulation::kSim2, Simulation::kSim3}) {
    EXPECT_EQ(ParseSimulation(SimulationName(s)), s);
  }
  EXPECT_THROW(ParseSimulation("sim4"), InvalidArgument);
}

TEST(GeneratorTest, Sim1Moments) {
  RngStream rng(1, 1);
  const SimDraw d = GenSim1(rng, 200000);
  const Dataset& ds = d.data;
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(ds.column(c).mean(), 0.0, 0.01);
    EXPECT_NEAR(Var(ds.column(c)), 1.0, 0.015);
  }
  EXPECT_NEAR(Corr(ds.column(0), ds.column(1)), 0.8, 0.005);
  EXPECT_NEAR(Corr(ds.column(0), ds.column(2)), 0.6, 0.005);
  EXPECT_NEAR(Corr(ds.column(1), ds.column(2)), 0.25, 0.005);
  EXPECT_NEAR(d.truths.at("ols:y1~y2+y3#y2"), oracle::kSim1Beta2, 1e-15);
  EXPECT_NEAR(d.truths.at("ols:y1~y2+y3#y3"), oracle::kSim1Beta3, 1e-15);
  EXPECT_NEAR(Estimate(ds, ParseEstimand("ols:y1~y2+y3#y2")).q, oracle::kSim1Beta2, 0.01);
}

TEST(GeneratorTest, Sim2StructureAndSkew) {
  RngStream rng(2, 2);
  const SimDraw noiseless = GenSim2(rng, 50000, false);
  const Dataset& a = noiseless.data;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    ASSERT_NEAR(a(r, 0), 1.0 + a(r, 1) + 3.0 * a(r, 2), 1e-12);
  }
  RngStream rng2(3, 3);
  const Dataset ds = GenSim2(rng2, 200000).data;
  const Eigen::VectorXd y3 = ds.column(2);
  EXPECT_GE(y3.minCoeff(), 0.0);
  EXPECT_NEAR(y3.mean(), 1.0, 0.01);
  EXPECT_NEAR(Var(y3), 1.0, 0.03);
  const double mu = y3.mean();
  const double skew = (y3.array() - mu).cube().mean() / std::pow(Var(y3), 1.5);
  EXPECT_NEAR(skew, oracle::kExpSkewness, 0.15);
  EXPECT_NEAR(ds.column(0).mean(), 4.0, 0.02);
  EXPECT_NEAR(ds.column(1).mean(), 0.0, 0.01);
  const auto coef = Estimate(ds, ParseEstimand("ols:y1~y2+y3#y3"));
  EXPECT_NEAR(coef.q, 3.0, 0.01);
}

TEST(GeneratorTest, Sim3MarginalsAndCorrelations) {
  const Sim3Latent model = Sim3LatentModel({});
  EXPECT_NEAR(model.threshold, QuantileNormal(0.4), 1e-15);
  // The exact latent matrix is indefinite, so it is projected; the projection
  // moves each entry only slightly and keeps the binary targets within 0.005.
  EXPECT_LT(oracle::kSim3LatentDet, 0.0);
  EXPECT_TRUE(model.adjusted);
  EXPECT_NEAR(model.corr(0, 1), oracle::kLatentFor06, 2e-3);
  EXPECT_NEAR(model.corr(0, 2), oracle::kLatentFor06, 2e-3);
  EXPECT_NEAR(model.corr(1, 2), oracle::kLatentFor02, 2e-3);
  EXPECT_NEAR(BinaryCorrFromLatent(0.6, 0.6, model.corr(0, 1)), 0.6, 5e-3);
  EXPECT_NEAR(BinaryCorrFromLatent(0.6, 0.6, model.corr(1, 2)), 0.2, 5e-3);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(model.corr).eigenvalues().minCoeff(),
            0.0);
  RngStream rng(4, 4);
  const Dataset ds = GenSim3(rng, 200000).data;
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(ds.column(c).mean(), 0.6, 0.005);
    const Eigen::VectorXd col = ds.column(c);
    EXPECT_TRUE(((col.array() == 0.0) || (col.array() == 1.0)).all());
  }
  EXPECT_NEAR(Corr(ds.column(0), ds.column(1)), 0.6, 0.01);
  EXPECT_NEAR(Corr(ds.column(0), ds.column(2)), 0.6, 0.01);
  EXPECT_NEAR(Corr(ds.column(1), ds.column(2)), 0.2, 0.01);
}

TEST(GeneratorTest, Sim3InfeasibleCorrelationsAreProjected) {
  Sim3Params params;
  params.rho12 = 0.9;
  params.rho13 = 0.9;
  params.rho23 = -0.5;
  const Sim3Latent model = Sim3LatentModel(params);
  EXPECT_TRUE(model.adjusted);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(model.corr).eigenvalues().minCoeff(),
            0.0);
  RngStream rng(5, 5);
  EXPECT_EQ(GenSim3(rng, 100, params).data.rows(), 100);
}

TEST(GeneratorTest, DeterministicAndSchemaConsistent) {
  for (auto sim : {Simulation::kSim1, Simulation::kSim2, Simulation::kSim3}) {
    RngStream a(9, 9);
    RngStream b(9, 9);
    const SimDraw x = Generate(sim, a, 100);
    EXPECT_EQ(x.data, Generate(sim, b, 100).data);
    EXPECT_EQ(x.data.schema(), SimulationSchema(sim));
    for (const std::string& spec : DefaultEstimands(sim)) {
      EXPECT_TRUE(SimulationTruths(sim).count(spec)) << spec;
      EXPECT_NO_THROW(Estimate(x.data, ParseEstimand(spec)));
    }
  }
}

TEST(MetricsTest, HandComputedValues) {
  const std::vector<double> est = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(MetricBias(est, 2.0, false), 0.5);
  EXPECT_DOUBLE_EQ(MetricBias(est, 2.0, true), 25.0);
  EXPECT_THROW(MetricBias(est, 0.0, true), InvalidArgument);
  EXPECT_DOUBLE_EQ(MonteCarloVariance(est), 5.0 / 3.0);
  const std::vector<double> vars = {5.0 / 6, 5.0 / 6, 5.0 / 6, 5.0 / 6};
  EXPECT_DOUBLE_EQ(MetricRab(vars, est), 50.0);
  EXPECT_THROW(MetricRab(vars, std::vector<double>(4, 1.0)), InvalidArgument);
  const std::vector<std::pair<double, double>> ci = {{0, 1}, {1, 2}, {2, 3}, {1.5, 1.9}};
  EXPECT_DOUBLE_EQ(MetricCoverage(ci, 1.0), 50.0);  // closed ends count
  EXPECT_TRUE(std::isnan(MetricCoverage({}, 1.0)));
}

TEST(ConfigTest, FullDocument) {
  const ExperimentConfig cfg = ParseExperimentConfig(R"(
simulation = "sim2"
n = 500
B = 20
m = 4
epsilon_grid = [0.5, 5, "inf"]
methods = ["histogram", "gaussian"]
estimands = ["mean:y1", "ols:y1~y2+y3#y3"]
rules = ["tp", "naive"]
level = 0.9
seed = 7
truth = "monte_carlo"
bins = 10
bn_degree = 2
semantics = "add_remove"
out_dir = "elsewhere"
)");
  EXPECT_EQ(cfg.simulation, Simulation::kSim2);
  EXPECT_EQ(cfg.replications, 20u);
  EXPECT_EQ(cfg.epsilon_grid, (std::vector<double>{0.5, 5.0, kInf}));
  EXPECT_EQ(cfg.methods[1], SynthMethod::kParametricGaussian);
  EXPECT_EQ(cfg.rules[1], VarianceRule::kNaiveUbar);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.truth, TruthConvention::kMonteCarlo);
  EXPECT_EQ(cfg.semantics, NeighborSemantics::kAddRemove);
  EXPECT_EQ(cfg.out_dir, "elsewhere");
  EXPECT_NO_THROW(cfg.Validate());
  const ExperimentConfig back = ExperimentConfig::FromJson(cfg.ToJson());
  EXPECT_EQ(back.ToJson(), cfg.ToJson());
  EXPECT_FALSE(cfg.ToJson().contains("out_dir"));
}

TEST(ConfigTest, DefaultsFillMissingKeys) {
  const ExperimentConfig cfg = ParseExperimentConfig("simulation = \"sim3\"\nseed = 1\n");
  EXPECT_EQ(cfg.n, 2000u);
  EXPECT_EQ(cfg.replications, 500u);
  EXPECT_EQ(cfg.m, 5u);
  EXPECT_EQ(cfg.epsilon_grid.size(), 9u);
  EXPECT_EQ(cfg.epsilon_grid[3], 2.5);
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.ParsedEstimands().size(), 3u);
}

TEST(ConfigTest, ErrorsNameEveryOffendingKey) {
  try {
    ParseExperimentConfig("simulation = \"sim1\"\nn = -3\nfoo = 1\nlevel = \"high\"\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& ex) {
    const auto& keys = ex.keys();
    for (const char* k : {"n", "foo", "level"}) {
      EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
    }
  }
  EXPECT_THROW(ParseExperimentConfig("n = 10\n"), ConfigError);
  EXPECT_THROW(ParseExperimentConfig("simulation = [\n"), ConfigError);
}

TEST(ConfigTest, ValidateRejectsBadCombinations) {
  ExperimentConfig cfg = SmallConfig();
  EXPECT_NO_THROW(cfg.Validate());
  auto keys_of = [](const ExperimentConfig& c) {
    try {
      c.Validate();
    } catch (const ConfigError& ex) {
      return ex.keys();
    }
    return std::vector<std::string>{};
  };
  ExperimentConfig bad = cfg;
  bad.seed.reset();
  EXPECT_EQ(keys_of(bad), (std::vector<std::string>{"seed"}));
  bad = cfg;
  bad.methods.push_back(SynthMethod::kParametricGaussian);
  EXPECT_EQ(keys_of(bad), (std::vector<std::string>{"methods"}));
  bad = cfg;
  bad.simulation = Simulation::kSim1;
  bad.methods = {SynthMethod::kParametricGaussian};
  bad.epsilon_grid = {1.0};
  EXPECT_EQ(keys_of(bad), (std::vector<std::string>{"epsilon_grid"}));
  bad = cfg;
  bad.m = 1;
  EXPECT_EQ(keys_of(bad), (std::vector<std::string>{"rules"}));
  bad = cfg;
  bad.epsilon_grid = {0.5, 0.5, -1.0};
  EXPECT_FALSE(keys_of(bad).empty());
  bad = cfg;
  bad.estimands = {"mean:y9"};
  EXPECT_EQ(keys_of(bad), (std::vector<std::string>{"estimands"}));
  bad = cfg;
  bad.estimands = {"mean:y1"};
  EXPECT_NO_THROW(bad.Validate());
}

TEST(ArmApplicableTest, BaselinesOnlyAtInfinity) {
  EXPECT_TRUE(ArmApplicable(SynthMethod::kPerturbedHistogram, 0.5));
  EXPECT_TRUE(ArmApplicable(SynthMethod::kPerturbedHistogram, kInf));
  EXPECT_FALSE(ArmApplicable(SynthMethod::kParametricGaussian, 0.5));
  EXPECT_TRUE(ArmApplicable(SynthMethod::kParametricGaussianPpd, kInf));
}

TEST(ReplicationTest, ArmsLedgerAndJsonRoundTrip) {
  const ExperimentConfig cfg = SmallConfig();
  const ReplicationResult rep = RunReplication(cfg, 3);
  EXPECT_EQ(rep.index, 3u);
  ASSERT_EQ(rep.arms.size(), 4u);
  ASSERT_EQ(rep.original.size(), 3u);
  for (const ArmOutcome& arm : rep.arms) {
    if (std::isinf(arm.epsilon)) {
      EXPECT_EQ(arm.ledger_spent, 0.0);
    } else {
      EXPECT_NEAR(arm.ledger_spent, arm.epsilon, 1e-12);
    }
    ASSERT_EQ(arm.estimands.size(), 3u);
    for (const auto& e : arm.estimands) {
      EXPECT_FALSE(e.failed) << e.error;
      EXPECT_EQ(e.rules.size(), cfg.rules.size());
    }
  }
  const ReplicationResult back = ReplicationResult::FromJson(rep.ToJson());
  EXPECT_EQ(back.ToJson(), rep.ToJson());
  EXPECT_EQ(RunReplication(cfg, 3).ToJson(), rep.ToJson());
  EXPECT_NE(RunReplication(cfg, 4).ToJson(), rep.ToJson());
}

TEST(ExperimentTest, ResultIndependentOfThreadCount) {
  const ExperimentConfig cfg = SmallConfig();
  const ExperimentResult one = RunExperiment(cfg, 1);
  const ExperimentResult three = RunExperiment(cfg, 3);
  ASSERT_EQ(one.replications.size(), 6u);
  for (std::size_t b = 0; b < 6; ++b) {
    EXPECT_EQ(one.replications[b].ToJson(), three.replications[b].ToJson());
  }
  const auto dir = std::filesystem::temp_directory_path() / "dipsynth_simlab_test";
  std::filesystem::remove_all(dir);
  WriteReport(one.table, dir / "a");
  WriteReport(three.table, dir / "b");
  for (const char* f : {"bias.csv", "rab.csv", "coverage.csv", "decomposition.csv",
                        "manifest.json"}) {
    EXPECT_EQ(ReadFile(dir / "a" / f), ReadFile(dir / "b" / f)) << f;
  }
  std::filesystem::remove_all(dir);
}

TEST(ExperimentTest, AggregateShapeAndAudit) {
  const ExperimentConfig cfg = SmallConfig();
  const ExperimentResult res = RunExperiment(cfg, 2);
  const MetricsTable& t = res.table;
  EXPECT_EQ(t.cells.size(), 2u * 2u * 3u);
  const CellMetrics* c = t.Find(SynthMethod::kChainBayesNet, 0.5, "prop:y2=1");
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->n_ok, 6u);
  EXPECT_EQ(c->theta, 0.6);
  EXPECT_EQ(c->rules.size(), 4u);
  EXPECT_NEAR(c->mean_tp, c->mean_u_bar + c->mean_b_over_m, 1e-15);
  EXPECT_EQ(t.Find(SynthMethod::kParametricGaussian, kInf, "prop:y2=1"), nullptr);
  ASSERT_EQ(t.audit.size(), 4u);
  for (const ArmAudit& a : t.audit) {
    EXPECT_LE(a.max_ledger_error, 1e-12);
    EXPECT_EQ(a.failed_cells, 0u);
    EXPECT_EQ(a.total_cells, 18u);
  }
  EXPECT_TRUE(t.FailedArms().empty());
  ASSERT_EQ(t.original.size(), 3u);
  EXPECT_EQ(t.original[0].n_ok, 6u);
}

TEST(ExperimentTest, ReportFilesAndArchiveRoundTrip) {
  ExperimentConfig cfg = SmallConfig();
  cfg.methods = {SynthMethod::kPerturbedHistogram};
  const ExperimentResult res = RunExperiment(cfg, 1);
  const auto dir = std::filesystem::temp_directory_path() / "dipsynth_report_test";
  std::filesystem::remove_all(dir);
  WriteReport(res.table, dir);
  WriteArchive(res.replications, dir);
  EXPECT_EQ(FirstLine(dir / "bias.csv"), "estimand,method,eps=0.5,eps=inf");
  EXPECT_EQ(FirstLine(dir / "coverage.csv"), "estimand,method,rule,eps=0.5,eps=inf");
  EXPECT_EQ(FirstLine(dir / "decomposition.csv"),
            "method,epsilon,estimand,u_bar,b_m_over_m,tp,v_mc,n_ok,n_failed");
  EXPECT_EQ(FirstLine(dir / "original.csv"), "estimand,theta,bias,v_mc,rab,coverage,n_ok");
  std::ifstream man(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(man);
  EXPECT_EQ(manifest["seed"], 42);
  EXPECT_EQ(manifest["ledger_audit"].size(), 2u);
  EXPECT_FALSE(manifest.contains("wall_time"));

  const auto reps = ReadArchive(dir);
  ASSERT_EQ(reps.size(), res.replications.size());
  const MetricsTable again = Aggregate(cfg, reps);
  const auto dir2 = dir / "again";
  WriteReport(again, dir2);
  EXPECT_EQ(ReadFile(dir / "rab.csv"), ReadFile(dir2 / "rab.csv"));
  EXPECT_EQ(ReadFile(dir / "manifest.json"), ReadFile(dir2 / "manifest.json"));
  std::filesystem::remove_all(dir);
}

TEST(ExperimentTest, MonteCarloTruthUsesOriginalMeans) {
  ExperimentConfig cfg;
  cfg.simulation = Simulation::kSim2;
  cfg.n = 100;
  cfg.replications = 4;
  cfg.m = 2;
  cfg.epsilon_grid = {kInf};
  cfg.methods = {SynthMethod::kParametricGaussian};
  cfg.estimands = {"mean:y1", "ols:y1~y2+y3#y3"};
  cfg.seed = 3;
  cfg.truth = TruthConvention::kMonteCarlo;
  const ExperimentResult res = RunExperiment(cfg, 1);
  double mean_q = 0.0;
  for (const auto& rep : res.replications) mean_q += rep.original[1].q / 4.0;
  const CellMetrics* ols = res.table.Find(SynthMethod::kParametricGaussian, kInf,
                                          "ols:y1~y2+y3#y3");
  ASSERT_NE(ols, nullptr);
  EXPECT_NEAR(ols->theta, mean_q, 1e-12);
  EXPECT_EQ(res.table.Find(SynthMethod::kParametricGaussian, kInf, "mean:y1")->theta, 4.0);
}

}  // namespace
}  // namespace dipsynth
