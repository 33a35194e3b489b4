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

// Monte Carlo experiments: data generators with known truths, the
// replication loop, evaluation metrics and report tables.

#ifndef DIPSYNTH_SIMLAB_H_
#define DIPSYNTH_SIMLAB_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipsynth/combine.h"
#include "dipsynth/estimators.h"
#include "dipsynth/privacy.h"
#include "dipsynth/rng.h"
#include "dipsynth/synth.h"
#include "dipsynth/tabular.h"

namespace dipsynth {

enum class Simulation { kSim1, kSim2, kSim3 };

// "sim1", "sim2", "sim3".
std::string_view SimulationName(Simulation sim);
Simulation ParseSimulation(std::string_view name);

// True parameter values keyed by canonical estimand name (EstimandName).
using Truths = std::map<std::string, double>;

struct SimDraw {
  Dataset data;
  Truths truths;
};

Schema Sim1Schema();
Schema Sim2Schema();
Schema Sim3Schema();
Schema SimulationSchema(Simulation sim);
// Truths for every estimand the simulation defines.
Truths SimulationTruths(Simulation sim);
// Estimands reported when a config does not list any.
std::vector<std::string> DefaultEstimands(Simulation sim);

// Trivariate normal, unit variances, Cov(y1,y2)=0.8, Cov(y1,y3)=0.6,
// Cov(y2,y3)=0.25. Truths: zero means and the population regression of y1
// on (y2, y3).
SimDraw GenSim1(RngStream& rng, std::size_t n);

// y2 ~ N(0,1), y3 ~ Exp(1) through the inverse CDF of a normal correlated 0.25
// with y2, y1 = 1 + y2 + 3 y3 + gamma. `noise = false` drops gamma.
SimDraw GenSim2(RngStream& rng, std::size_t n, bool noise = true);

struct Sim3Params {
  double p = 0.6;  // P(y_j = 1) for every column
  double rho12 = 0.6;
  double rho13 = 0.6;
  double rho23 = 0.2;
};

// Correlated binary triple from a thresholded latent normal.
SimDraw GenSim3(RngStream& rng, std::size_t n, const Sim3Params& params = {});

struct Sim3Latent {
  Eigen::MatrixXd corr;  // latent correlation after any PD projection
  bool adjusted = false;
  double threshold = 0.0;
};
Sim3Latent Sim3LatentModel(const Sim3Params& params);

SimDraw Generate(Simulation sim, RngStream& rng, std::size_t n);

// ---------------------------------------------------------------------------
// Metrics.

// mean(estimate - theta), or 100 mean((estimate - theta) / theta).
double MetricBias(std::span<const double> estimates, double theta, bool relative);
// Sample variance of the estimates (denominator B - 1).
double MonteCarloVariance(std::span<const double> estimates);
// 100 mean(var_estimates) / MonteCarloVariance(point_estimates).
double MetricRab(std::span<const double> var_estimates,
                 std::span<const double> point_estimates);
// 100 * share of closed intervals containing theta.
double MetricCoverage(std::span<const std::pair<double, double>> intervals, double theta);

// ---------------------------------------------------------------------------
// Experiment configuration.

enum class TruthConvention {
  kAnalytic,    // population values
  kMonteCarlo,  // regression slopes replaced by the mean original-data estimate
};

// A configuration error; keys() lists the offending configuration keys.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& message, std::vector<std::string> keys)
      : InvalidArgument(message), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
};

struct ExperimentConfig {
  Simulation simulation = Simulation::kSim1;
  std::size_t n = 2000;
  std::size_t replications = 500;  // "B"
  std::size_t m = 5;
  std::vector<double> epsilon_grid = {0.005, 0.05, 0.5, 2.5, 5, 8, 10, 50,
                                      kNonPrivateEpsilon};
  std::vector<SynthMethod> methods = {SynthMethod::kPerturbedHistogram};
  std::vector<std::string> estimands;  // empty: DefaultEstimands(simulation)
  std::vector<VarianceRule> rules = {VarianceRule::kTp, VarianceRule::kTs,
                                     VarianceRule::kTsPpd, VarianceRule::kNaiveUbar};
  double level = 0.95;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "sim_out";
  TruthConvention truth = TruthConvention::kAnalytic;
  std::size_t bins = 20;
  std::size_t bn_degree = 1;
  NeighborSemantics semantics = NeighborSemantics::kReplacement;

  // Throws ConfigError naming every offending key.
  void Validate() const;
  std::vector<Estimand> ParsedEstimands() const;
  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json& j);
};

// Parses a TOML configuration. Unknown keys and malformed values raise
// ConfigError. The result is not validated, so that command-line overrides
// (such as the seed) can be applied first.
ExperimentConfig ParseExperimentConfig(std::string_view toml_text);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

// Whether `method` is run at `epsilon`. Non-private baselines only run at
// epsilon = inf; other pairs are reported as blank cells.
bool ArmApplicable(SynthMethod method, double epsilon);

// ---------------------------------------------------------------------------
// Raw per-replication results.

struct RuleOutcome {
  double variance = 0.0;
  double df = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct EstimandOutcome {
  bool failed = false;
  std::string error;
  double q_bar = 0.0;
  double u_bar = 0.0;
  double b_m = 0.0;
  std::vector<RuleOutcome> rules;  // config rule order
};

struct ArmOutcome {
  SynthMethod method = SynthMethod::kPerturbedHistogram;
  double epsilon = 0.0;
  double ledger_spent = 0.0;        // epsilon recorded by the arm's ledger
  std::vector<EstimandOutcome> estimands;  // config estimand order
};

struct ReplicationResult {
  std::size_t index = 0;
  std::vector<EstimateResult> original;  // per estimand; q_obs, u_obs
  std::vector<bool> original_ok;
  std::vector<ArmOutcome> arms;          // applicable (method, epsilon) pairs

  nlohmann::json ToJson() const;
  static ReplicationResult FromJson(const nlohmann::json& j);
};

// One replication: original data from stream (seed, b), then every
// applicable arm with its own stream and ledger.
ReplicationResult RunReplication(const ExperimentConfig& cfg, std::size_t b);

// ---------------------------------------------------------------------------
// Aggregation.

struct RuleMetrics {
  VarianceRule rule = VarianceRule::kTp;
  double mean_variance = 0.0;
  double rab = 0.0;       // NaN when V_MC == 0
  double coverage = 0.0;
};

struct CellMetrics {
  SynthMethod method = SynthMethod::kPerturbedHistogram;
  double epsilon = 0.0;
  std::string estimand;
  double theta = 0.0;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double bias = 0.0;
  double relative_bias = 0.0;  // NaN when theta == 0
  double v_mc = 0.0;
  double mean_u_bar = 0.0;
  double mean_b_over_m = 0.0;
  double mean_tp = 0.0;  // mean of u_bar + b_m / m over replications
  std::vector<RuleMetrics> rules;
};

struct OriginalMetrics {
  std::string estimand;
  double theta = 0.0;
  std::size_t n_ok = 0;
  double bias = 0.0;
  double v_mc = 0.0;
  double rab = 0.0;
  double coverage = 0.0;
};

struct ArmAudit {
  SynthMethod method = SynthMethod::kPerturbedHistogram;
  double epsilon = 0.0;
  double per_copy = 0.0;
  double max_ledger_error = 0.0;  // max |spent - epsilon| over replications
  std::size_t failed_cells = 0;
  std::size_t total_cells = 0;
};

struct MetricsTable {
  ExperimentConfig config;
  std::vector<CellMetrics> cells;  // method-major, then epsilon, then estimand
  std::vector<OriginalMetrics> original;
  std::vector<ArmAudit> audit;

  const CellMetrics* Find(SynthMethod method, double epsilon,
                          std::string_view estimand) const;
  // Arms in which more than 10% of (replication, estimand) cells failed.
  std::vector<std::string> FailedArms() const;
};

MetricsTable Aggregate(const ExperimentConfig& cfg,
                       std::span<const ReplicationResult> reps);

struct ExperimentResult {
  std::vector<ReplicationResult> replications;
  MetricsTable table;
};

// Runs all replications on `jobs` worker threads; the result does not
// depend on `jobs`.
ExperimentResult RunExperiment(const ExperimentConfig& cfg, std::size_t jobs = 1);

// Writes bias.csv, relative_bias.csv, vmc.csv, rab.csv, coverage.csv,
// decomposition.csv, original.csv and manifest.json into `out_dir`.
void WriteReport(const MetricsTable& table, const std::filesystem::path& out_dir);

// replications.jsonl: one JSON object per replication.
void WriteArchive(std::span<const ReplicationResult> reps,
                  const std::filesystem::path& out_dir);
std::vector<ReplicationResult> ReadArchive(const std::filesystem::path& out_dir);

}  // namespace dipsynth

#endif  // DIPSYNTH_SIMLAB_H_
