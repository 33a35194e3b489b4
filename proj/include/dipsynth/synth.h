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

// Privatized generative models and the m-copy synthesis driver.
//
// Every copy refits its model from the original data with its own share of
// the budget, so the between-copy spread includes model-estimation noise as
// well as sampling noise. There is deliberately no mode that samples several
// copies from one fitted model.

#ifndef DIPSYNTH_SYNTH_H_
#define DIPSYNTH_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dipsynth/privacy.h"
#include "dipsynth/rng.h"
#include "dipsynth/tabular.h"

namespace dipsynth {

enum class SynthMethod {
  kPerturbedHistogram,
  kChainBayesNet,
  kParametricGaussian,
  kParametricGaussianPpd,
};

// Canonical names: "histogram", "bayesnet", "gaussian", "gaussian_ppd".
std::string_view MethodName(SynthMethod method);
// Accepts the canonical names plus the CamelCase type names.
SynthMethod ParseMethod(std::string_view name);
// Gaussian methods are non-private baselines and only accept epsilon = inf.
bool IsPrivateMethod(SynthMethod method);

inline constexpr std::size_t kMaxJointCells = 1'000'000;

// Stream tag for standalone synthesis runs: RngStream(seed, HashStreamId({tag})).
inline constexpr std::uint64_t kSynthStreamTag = 0x5E7;

struct SynthesisRequest {
  SynthMethod method = SynthMethod::kPerturbedHistogram;
  PrivacyBudget total_budget;
  std::size_t m = 1;
  std::size_t bins_per_continuous = 20;
  std::size_t bn_degree = 1;
  std::optional<std::size_t> out_n;  // defaults to the original row count
  NeighborSemantics semantics = NeighborSemantics::kReplacement;
  // Bayesian network: skip the private structure search and use the chain of
  // the `bn_degree` preceding columns, giving the full budget to parameters.
  bool fixed_chain = false;
  // Bayesian network: overrides the mutual-information score sensitivity.
  std::optional<double> mi_sensitivity;

  void Validate() const;
};

// Equal-width binning of continuous columns over their public range;
// discrete columns keep their level index.
class Discretizer {
 public:
  Discretizer(const Schema& schema, std::size_t bins_per_continuous);

  const std::vector<std::size_t>& cardinalities() const { return cards_; }
  std::size_t Code(std::size_t column, double value) const;
  // Inverse of Code: the level itself, or a uniform draw within the bin.
  double Decode(std::size_t column, std::size_t code, RngStream& rng) const;
  // Row-major n x p matrix of codes.
  std::vector<std::uint32_t> Encode(const Dataset& ds) const;

 private:
  Schema schema_;
  std::size_t bins_;
  std::vector<std::size_t> cards_;
};

// Normalized joint table over all (discretized) columns; the last column
// varies fastest.
struct HistogramModel {
  std::vector<std::size_t> cardinalities;
  std::vector<double> probabilities;
};

// P(variable | parents), one row of `cardinality` probabilities per parent
// configuration (the last parent varies fastest).
struct ConditionalTable {
  std::size_t variable = 0;
  std::vector<std::size_t> parents;
  std::size_t cardinality = 0;
  std::vector<double> probabilities;
};

struct BayesNetModel {
  std::vector<std::size_t> cardinalities;
  std::vector<ConditionalTable> tables;  // schema order
};

struct GaussianModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  // Posterior predictive synthesis: each sampled copy first draws (mu, Sigma)
  // from the normal-inverse-Wishart posterior under the Jeffreys prior.
  bool ppd = false;
  std::size_t fit_rows = 0;
};

// A fitted, privatized generative model. Holds no raw rows.
struct SynthModel {
  SynthMethod method = SynthMethod::kPerturbedHistogram;
  Schema schema;
  std::size_t bins_per_continuous = 20;
  PrivacyBudget charged;
  std::variant<HistogramModel, BayesNetModel, GaussianModel> params;

  Dataset Sample(RngStream& rng, std::size_t n) const;
  nlohmann::json Summary() const;
};

struct FitOptions {
  NeighborSemantics semantics = NeighborSemantics::kReplacement;
  bool fixed_chain = false;
  std::optional<double> mi_sensitivity;
  std::string label = "fit";  // ledger label prefix
};

// Default exponential-mechanism sensitivity of the mutual-information score:
// 2 * log2(n) / n + 2 / n.
double DefaultMiSensitivity(std::size_t n);

// Mutual information in bits between column `child` and the joint of
// `parents`, from a row-major code matrix.
double MutualInformation(std::span<const std::uint32_t> codes, std::size_t p,
                         std::span<const std::size_t> cards, std::size_t child,
                         std::span<const std::size_t> parents);

// Privatized joint histogram: Laplace noise on every cell, negatives clamped
// to zero, renormalized (uniform if everything clamps). Charges `eps`.
SynthModel FitPerturbedHistogram(const Dataset& ds, PrivacyBudget eps,
                                 std::size_t bins, RngStream& rng,
                                 BudgetLedger& ledger, const FitOptions& options = {});

// Chain Bayesian network. Half the budget selects up to `degree` parents per
// column among the preceding columns via the exponential mechanism on mutual
// information; the other half privatizes the conditional tables. With
// degree == 0 or fixed_chain the structure step is skipped and the whole
// budget goes to the tables.
SynthModel FitChainBayesNet(const Dataset& ds, PrivacyBudget eps,
                            std::size_t degree, std::size_t bins, RngStream& rng,
                            BudgetLedger& ledger, const FitOptions& options = {});

// Non-private baseline: sample mean and covariance of all-continuous data.
SynthModel FitParametricGaussian(const Dataset& ds, bool ppd, RngStream& rng);

// Fits `req.m` independent models (one fresh fit per copy, each on its own
// derived stream and with SplitBudget(total, m)) and samples out_n rows from
// each. The ledger must have headroom for the whole request up front.
std::vector<Dataset> GenerateMDatasets(const Dataset& ds, const SynthesisRequest& req,
                                       const RngStream& rng, BudgetLedger& ledger,
                                       std::vector<SynthModel>* models = nullptr);

// Writes syn_1.csv .. syn_m.csv and manifest.json into `dir`.
void WriteBundle(const std::filesystem::path& dir, const std::vector<Dataset>& copies,
                 const nlohmann::json& manifest);

}  // namespace dipsynth

#endif  // DIPSYNTH_SYNTH_H_
