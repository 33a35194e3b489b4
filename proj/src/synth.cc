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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dipsynth/error.h"
#include "dipsynth/format.h"
#include "dipsynth/mvn.h"

namespace dipsynth {
namespace {

// Product of cardinalities with an overflow/size guard.
std::size_t CellCount(std::span<const std::size_t> cards, const char* what) {
  std::size_t total = 1;
  for (std::size_t c : cards) {
    if (c == 0 || total > kMaxJointCells / c) {
      throw InvalidArgument(std::string(what) + ": joint table would exceed " +
                            std::to_string(kMaxJointCells) + " cells");
    }
    total *= c;
  }
  return total;
}

// Clamp negatives to zero and normalize; uniform when nothing survives.
void ClampNormalize(std::span<double> row) {
  double sum = 0.0;
  for (double& v : row) {
    if (!(v > 0.0)) v = 0.0;
    sum += v;
  }
  if (sum > 0.0) {
    for (double& v : row) v /= sum;
  } else {
    const double u = 1.0 / static_cast<double>(row.size());
    std::fill(row.begin(), row.end(), u);
  }
}

std::vector<double> Cumulative(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  std::partial_sum(probs.begin(), probs.end(), out.begin());
  return out;
}

// Index of the joint configuration of `vars` in row `r` of a code matrix.
std::size_t ConfigIndex(std::span<const std::uint32_t> codes, std::size_t p,
                        std::size_t r, std::span<const std::size_t> cards,
                        std::span<const std::size_t> vars) {
  std::size_t idx = 0;
  for (std::size_t v : vars) idx = idx * cards[v] + codes[r * p + v];
  return idx;
}

void CheckFitBudget(const PrivacyBudget& eps, const char* what) {
  eps.Validate();
  if (!(eps.epsilon > 0.0)) {
    throw InvalidArgument(std::string(what) + ": epsilon must be positive (or inf)");
  }
}

// Every k-subset of {0, .., n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> Combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current(k);
  std::iota(current.begin(), current.end(), 0);
  if (k > n) return out;
  for (;;) {
    out.push_back(current);
    std::size_t i = k;
    while (i > 0 && current[i - 1] == n - k + i - 1) --i;
    if (i == 0) return out;
    ++current[i - 1];
    for (std::size_t j = i; j < k; ++j) current[j] = current[j - 1] + 1;
  }
}

Dataset SampleHistogram(const SynthModel& model, const HistogramModel& h,
                        RngStream& rng, std::size_t n) {
  const Discretizer disc(model.schema, model.bins_per_continuous);
  const std::vector<double> cum = Cumulative(h.probabilities);
  const std::size_t p = h.cardinalities.size();
  Eigen::MatrixXd cells(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<std::size_t> code(p);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t cell = rng.Categorical(cum);
    for (std::size_t c = p; c-- > 0;) {
      code[c] = cell % h.cardinalities[c];
      cell /= h.cardinalities[c];
    }
    for (std::size_t c = 0; c < p; ++c) {
      cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          disc.Decode(c, code[c], rng);
    }
  }
  return Dataset(model.schema, std::move(cells));
}

Dataset SampleBayesNet(const SynthModel& model, const BayesNetModel& bn,
                       RngStream& rng, std::size_t n) {
  const Discretizer disc(model.schema, model.bins_per_continuous);
  const std::size_t p = bn.cardinalities.size();
  // Per table: cumulative distribution for each parent configuration.
  std::vector<std::vector<double>> cums;
  for (const ConditionalTable& t : bn.tables) {
    std::vector<double> cum(t.probabilities.size());
    for (std::size_t row = 0; row * t.cardinality < t.probabilities.size(); ++row) {
      std::partial_sum(t.probabilities.begin() + row * t.cardinality,
                       t.probabilities.begin() + (row + 1) * t.cardinality,
                       cum.begin() + row * t.cardinality);
    }
    cums.push_back(std::move(cum));
  }
  std::vector<std::uint32_t> codes(p);
  Eigen::MatrixXd cells(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < bn.tables.size(); ++j) {
      const ConditionalTable& t = bn.tables[j];
      std::size_t config = 0;
      for (std::size_t par : t.parents) config = config * bn.cardinalities[par] + codes[par];
      std::span<const double> row(cums[j].data() + config * t.cardinality, t.cardinality);
      codes[t.variable] = static_cast<std::uint32_t>(rng.Categorical(row));
    }
    for (std::size_t c = 0; c < p; ++c) {
      cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          disc.Decode(c, codes[c], rng);
    }
  }
  return Dataset(model.schema, std::move(cells));
}

// (mu, Sigma) from the normal-inverse-Wishart posterior of a Gaussian under
// the Jeffreys prior: Sigma ~ IW(n - 1, S), mu | Sigma ~ N(xbar, Sigma / n).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> DrawPosterior(const GaussianModel& g,
                                                          RngStream& rng) {
  const Eigen::Index p = g.mean.size();
  const double n = static_cast<double>(g.fit_rows);
  const double dof = n - 1.0;
  const Eigen::MatrixXd scatter = g.covariance * dof;
  const Eigen::MatrixXd scatter_inv =
      scatter.llt().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd lower = Cholesky(0.5 * (scatter_inv + scatter_inv.transpose()));
  // Bartlett decomposition of W ~ Wishart(dof, S^-1).
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    bartlett(i, i) = std::sqrt(rng.ChiSquare(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.Normal();
  }
  const Eigen::MatrixXd la = lower * bartlett;
  const Eigen::MatrixXd wishart = la * la.transpose();
  Eigen::MatrixXd sigma = wishart.llt().solve(Eigen::MatrixXd::Identity(p, p));
  sigma = 0.5 * (sigma + sigma.transpose());
  const Eigen::MatrixXd mean_factor = Cholesky(sigma / n);
  Eigen::VectorXd z(p);
  for (Eigen::Index i = 0; i < p; ++i) z(i) = rng.Normal();
  Eigen::VectorXd mu = g.mean + mean_factor * z;
  return {std::move(mu), std::move(sigma)};
}

Dataset SampleGaussian(const SynthModel& model, const GaussianModel& g,
                       RngStream& rng, std::size_t n) {
  Eigen::MatrixXd cells;
  if (g.ppd) {
    auto [mu, sigma] = DrawPosterior(g, rng);
    cells = SampleMvn(rng, mu, sigma, static_cast<int>(n));
  } else {
    cells = SampleMvn(rng, g.mean, g.covariance, static_cast<int>(n));
  }
  return Dataset::Clamped(model.schema, std::move(cells));
}

}  // namespace

std::string_view MethodName(SynthMethod method) {
  switch (method) {
    case SynthMethod::kPerturbedHistogram:
      return "histogram";
    case SynthMethod::kChainBayesNet:
      return "bayesnet";
    case SynthMethod::kParametricGaussian:
      return "gaussian";
    case SynthMethod::kParametricGaussianPpd:
      return "gaussian_ppd";
  }
  return "unknown";
}

SynthMethod ParseMethod(std::string_view name) {
  if (name == "histogram" || name == "PerturbedHistogram") {
    return SynthMethod::kPerturbedHistogram;
  }
  if (name == "bayesnet" || name == "ChainBayesNet") return SynthMethod::kChainBayesNet;
  if (name == "gaussian" || name == "ParametricGaussian") {
    return SynthMethod::kParametricGaussian;
  }
  if (name == "gaussian_ppd" || name == "ParametricGaussianPPD") {
    return SynthMethod::kParametricGaussianPpd;
  }
  throw InvalidArgument("unknown synthesis method: '" + std::string(name) +
                        "' (expected histogram, bayesnet, gaussian or gaussian_ppd)");
}

bool IsPrivateMethod(SynthMethod method) {
  return method == SynthMethod::kPerturbedHistogram ||
         method == SynthMethod::kChainBayesNet;
}

void SynthesisRequest::Validate() const {
  total_budget.Validate();
  if (m < 1) throw InvalidArgument("synthesis request: m must be at least 1");
  if (bins_per_continuous < 2) {
    throw InvalidArgument("synthesis request: bins_per_continuous must be at least 2");
  }
  if (out_n && *out_n < 1) throw InvalidArgument("synthesis request: out_n must be >= 1");
  if (IsPrivateMethod(method) && !(total_budget.epsilon > 0.0)) {
    throw InvalidArgument("synthesis request: epsilon must be positive (or inf)");
  }
  if (!IsPrivateMethod(method) && !total_budget.is_non_private()) {
    throw InvalidArgument("synthesis request: method '" + std::string(MethodName(method)) +
                          "' is a non-private baseline and requires epsilon = inf");
  }
  if (mi_sensitivity && !(*mi_sensitivity > 0.0)) {
    throw InvalidArgument("synthesis request: mi_sensitivity must be positive");
  }
}

Discretizer::Discretizer(const Schema& schema, std::size_t bins_per_continuous)
    : schema_(schema), bins_(bins_per_continuous) {
  if (bins_ < 2) throw InvalidArgument("Discretizer: at least 2 bins are required");
  for (const Column& c : schema_.columns()) {
    cards_.push_back(c.kind.is_continuous() ? bins_ : c.kind.cardinality());
  }
}

std::size_t Discretizer::Code(std::size_t column, double value) const {
  const ColumnKind& kind = schema_[column].kind;
  if (!kind.is_continuous()) return static_cast<std::size_t>(value);
  const double width = (kind.hi() - kind.lo()) / static_cast<double>(bins_);
  const double pos = std::floor((value - kind.lo()) / width);
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), bins_ - 1);
}

double Discretizer::Decode(std::size_t column, std::size_t code, RngStream& rng) const {
  const ColumnKind& kind = schema_[column].kind;
  if (!kind.is_continuous()) return static_cast<double>(code);
  const double width = (kind.hi() - kind.lo()) / static_cast<double>(bins_);
  const double lo = kind.lo() + width * static_cast<double>(code);
  return std::clamp(rng.Uniform(lo, lo + width), kind.lo(), kind.hi());
}

std::vector<std::uint32_t> Discretizer::Encode(const Dataset& ds) const {
  const std::size_t p = schema_.size();
  std::vector<std::uint32_t> codes(static_cast<std::size_t>(ds.rows()) * p);
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      codes[static_cast<std::size_t>(r) * p + c] =
          static_cast<std::uint32_t>(Code(c, ds(r, static_cast<Eigen::Index>(c))));
    }
  }
  return codes;
}

Dataset SynthModel::Sample(RngStream& rng, std::size_t n) const {
  if (n < 1) throw InvalidArgument("SynthModel::Sample: n must be at least 1");
  return std::visit(
      [&](const auto& params) -> Dataset {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, HistogramModel>) {
          return SampleHistogram(*this, params, rng, n);
        } else if constexpr (std::is_same_v<T, BayesNetModel>) {
          return SampleBayesNet(*this, params, rng, n);
        } else {
          return SampleGaussian(*this, params, rng, n);
        }
      },
      params);
}

nlohmann::json SynthModel::Summary() const {
  nlohmann::json j = {{"method", MethodName(method)},
                      {"epsilon", charged.is_non_private()
                                      ? nlohmann::json("inf")
                                      : nlohmann::json(charged.epsilon)}};
  if (const auto* bn = std::get_if<BayesNetModel>(&params)) {
    nlohmann::json parents = nlohmann::json::object();
    for (const ConditionalTable& t : bn->tables) {
      nlohmann::json names = nlohmann::json::array();
      for (std::size_t par : t.parents) names.push_back(schema[par].name);
      parents[schema[t.variable].name] = names;
    }
    j["parents"] = parents;
  } else if (const auto* h = std::get_if<HistogramModel>(&params)) {
    j["cells"] = h->probabilities.size();
  }
  return j;
}

double DefaultMiSensitivity(std::size_t n) {
  const double dn = static_cast<double>(std::max<std::size_t>(n, 2));
  return 2.0 * std::log2(dn) / dn + 2.0 / dn;
}

double MutualInformation(std::span<const std::uint32_t> codes, std::size_t p,
                         std::span<const std::size_t> cards, std::size_t child,
                         std::span<const std::size_t> parents) {
  const std::size_t n = codes.size() / p;
  if (n == 0) return 0.0;
  std::size_t parent_cells = 1;
  for (std::size_t par : parents) parent_cells *= cards[par];
  const std::size_t child_cells = cards[child];
  std::vector<double> joint(parent_cells * child_cells, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t a = ConfigIndex(codes, p, r, cards, parents);
    joint[a * child_cells + codes[r * p + child]] += 1.0;
  }
  std::vector<double> pa(parent_cells, 0.0);
  std::vector<double> pb(child_cells, 0.0);
  for (std::size_t a = 0; a < parent_cells; ++a) {
    for (std::size_t b = 0; b < child_cells; ++b) {
      pa[a] += joint[a * child_cells + b];
      pb[b] += joint[a * child_cells + b];
    }
  }
  const double dn = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t a = 0; a < parent_cells; ++a) {
    for (std::size_t b = 0; b < child_cells; ++b) {
      const double c = joint[a * child_cells + b];
      if (c > 0.0) mi += (c / dn) * std::log2(c * dn / (pa[a] * pb[b]));
    }
  }
  return std::max(0.0, mi);
}

SynthModel FitPerturbedHistogram(const Dataset& ds, PrivacyBudget eps,
                                 std::size_t bins, RngStream& rng,
                                 BudgetLedger& ledger, const FitOptions& options) {
  CheckFitBudget(eps, "FitPerturbedHistogram");
  const Discretizer disc(ds.schema(), bins);
  const auto& cards = disc.cardinalities();
  const std::size_t cells = CellCount(cards, "FitPerturbedHistogram");
  const std::size_t p = cards.size();
  const auto codes = disc.Encode(ds);

  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> counts(cells, 0.0);
  for (std::size_t r = 0; r < static_cast<std::size_t>(ds.rows()); ++r) {
    counts[ConfigIndex(codes, p, r, cards, all)] += 1.0;
  }

  ledger.Charge(options.label + "/histogram", eps);
  std::vector<double> noisy = LaplaceMechanism(
      rng, counts, HistogramSensitivity(options.semantics), eps.epsilon);
  ClampNormalize(noisy);

  SynthModel model;
  model.method = SynthMethod::kPerturbedHistogram;
  model.schema = ds.schema();
  model.bins_per_continuous = bins;
  model.charged = eps;
  model.params = HistogramModel{cards, std::move(noisy)};
  return model;
}

SynthModel FitChainBayesNet(const Dataset& ds, PrivacyBudget eps,
                            std::size_t degree, std::size_t bins, RngStream& rng,
                            BudgetLedger& ledger, const FitOptions& options) {
  CheckFitBudget(eps, "FitChainBayesNet");
  if (ds.rows() < 1) throw InvalidArgument("FitChainBayesNet: empty dataset");
  const Discretizer disc(ds.schema(), bins);
  const auto& cards = disc.cardinalities();
  const std::size_t p = cards.size();
  const std::size_t n = static_cast<std::size_t>(ds.rows());
  const auto codes = disc.Encode(ds);

  const bool search = degree > 0 && !options.fixed_chain && p > 1;
  const PrivacyBudget structure_eps =
      search ? PrivacyBudget{eps.epsilon / 2.0, eps.delta / 2.0} : PrivacyBudget{};
  PrivacyBudget param_eps = eps;
  if (search && !eps.is_non_private()) {
    param_eps = {eps.epsilon - structure_eps.epsilon, eps.delta - structure_eps.delta};
  }

  std::vector<std::vector<std::size_t>> parents(p);
  if (search) {
    ledger.Charge(options.label + "/bayesnet.structure", structure_eps);
    const double per_choice = structure_eps.epsilon / static_cast<double>(p - 1);
    const double sensitivity =
        options.mi_sensitivity.value_or(DefaultMiSensitivity(n));
    for (std::size_t j = 1; j < p; ++j) {
      auto candidates = Combinations(j, std::min(degree, j));
      std::vector<double> scores;
      scores.reserve(candidates.size());
      for (const auto& cand : candidates) {
        std::vector<std::size_t> joint_cards;
        for (std::size_t par : cand) joint_cards.push_back(cards[par]);
        joint_cards.push_back(cards[j]);
        CellCount(joint_cards, "FitChainBayesNet");
        scores.push_back(MutualInformation(codes, p, cards, j, cand));
      }
      parents[j] = candidates[ExponentialMechanism(rng, scores, sensitivity, per_choice)];
    }
  } else if (options.fixed_chain) {
    for (std::size_t j = 1; j < p; ++j) {
      for (std::size_t k = j > degree ? j - degree : 0; k < j; ++k) parents[j].push_back(k);
    }
  }

  ledger.Charge(options.label + "/bayesnet.parameters", param_eps);
  const double per_table = param_eps.epsilon / static_cast<double>(p);
  const double sensitivity = HistogramSensitivity(options.semantics);
  BayesNetModel bn;
  bn.cardinalities = cards;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<std::size_t> joint_cards;
    for (std::size_t par : parents[j]) joint_cards.push_back(cards[par]);
    joint_cards.push_back(cards[j]);
    const std::size_t cells = CellCount(joint_cards, "FitChainBayesNet");
    std::vector<double> counts(cells, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t config = ConfigIndex(codes, p, r, cards, parents[j]);
      counts[config * cards[j] + codes[r * p + j]] += 1.0;
    }
    std::vector<double> noisy = LaplaceMechanism(rng, counts, sensitivity, per_table);
    for (std::size_t row = 0; row < cells / cards[j]; ++row) {
      ClampNormalize(std::span<double>(noisy.data() + row * cards[j], cards[j]));
    }
    bn.tables.push_back({j, parents[j], cards[j], std::move(noisy)});
  }

  SynthModel model;
  model.method = SynthMethod::kChainBayesNet;
  model.schema = ds.schema();
  model.bins_per_continuous = bins;
  model.charged = eps;
  model.params = std::move(bn);
  return model;
}

SynthModel FitParametricGaussian(const Dataset& ds, bool ppd, RngStream& /*rng*/) {
  const Schema& schema = ds.schema();
  for (const Column& c : schema.columns()) {
    if (!c.kind.is_continuous()) {
      throw InvalidArgument("FitParametricGaussian: column '" + c.name +
                            "' is not continuous");
    }
  }
  const Eigen::Index n = ds.rows();
  const Eigen::Index p = ds.cols();
  if (n <= p + 2) {
    throw InvalidArgument("FitParametricGaussian: need more than p + 2 rows");
  }
  GaussianModel g;
  g.mean = ds.cells().colwise().mean().transpose();
  const Eigen::MatrixXd centered = ds.cells().rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  g.ppd = ppd;
  g.fit_rows = static_cast<std::size_t>(n);
  try {
    Cholesky(g.covariance);
  } catch (const NumericalError&) {
    throw NumericalError("FitParametricGaussian: sample covariance is singular");
  }

  SynthModel model;
  model.method = ppd ? SynthMethod::kParametricGaussianPpd : SynthMethod::kParametricGaussian;
  model.schema = schema;
  model.charged = PrivacyBudget::NonPrivate();
  model.params = std::move(g);
  return model;
}

std::vector<Dataset> GenerateMDatasets(const Dataset& ds, const SynthesisRequest& req,
                                       const RngStream& rng, BudgetLedger& ledger,
                                       std::vector<SynthModel>* models) {
  req.Validate();
  if (!ledger.total().is_non_private()) {
    const PrivacyBudget remaining = ledger.Remaining();
    if (req.total_budget.is_non_private() ||
        req.total_budget.epsilon > remaining.epsilon * (1.0 + 1e-9) ||
        req.total_budget.delta > remaining.delta * (1.0 + 1e-9) + 0.0) {
      throw BudgetExceeded("over budget: synthesis request for epsilon = " +
                           FormatDouble(req.total_budget.epsilon) +
                           " exceeds the remaining epsilon = " +
                           FormatDouble(remaining.epsilon));
    }
  }
  const PrivacyBudget per_copy = SplitBudget(req.total_budget, req.m);
  const std::size_t out_n = req.out_n.value_or(static_cast<std::size_t>(ds.rows()));

  std::vector<Dataset> copies;
  copies.reserve(req.m);
  if (models != nullptr) models->clear();
  for (std::size_t i = 0; i < req.m; ++i) {
    RngStream copy_rng = rng.Derive({i});
    FitOptions options;
    options.semantics = req.semantics;
    options.fixed_chain = req.fixed_chain;
    options.mi_sensitivity = req.mi_sensitivity;
    options.label = "copy " + std::to_string(i + 1);
    SynthModel model;
    switch (req.method) {
      case SynthMethod::kPerturbedHistogram:
        model = FitPerturbedHistogram(ds, per_copy, req.bins_per_continuous, copy_rng,
                                      ledger, options);
        break;
      case SynthMethod::kChainBayesNet:
        model = FitChainBayesNet(ds, per_copy, req.bn_degree, req.bins_per_continuous,
                                 copy_rng, ledger, options);
        break;
      case SynthMethod::kParametricGaussian:
      case SynthMethod::kParametricGaussianPpd:
        ledger.Charge(options.label + "/" + std::string(MethodName(req.method)),
                      PrivacyBudget::NonPrivate());
        model = FitParametricGaussian(
            ds, req.method == SynthMethod::kParametricGaussianPpd, copy_rng);
        break;
    }
    copies.push_back(model.Sample(copy_rng, out_n));
    if (models != nullptr) models->push_back(std::move(model));
  }
  return copies;
}

void WriteBundle(const std::filesystem::path& dir, const std::vector<Dataset>& copies,
                 const nlohmann::json& manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < copies.size(); ++i) {
    SaveCsv(copies[i], dir / ("syn_" + std::to_string(i + 1) + ".csv"));
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace dipsynth
