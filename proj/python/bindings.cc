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


// Python bindings for the dipsynth core.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dipsynth/combine.h"
#include "dipsynth/error.h"
#include "dipsynth/estimators.h"
#include "dipsynth/privacy.h"
#include "dipsynth/rng.h"
#include "dipsynth/simlab.h"
#include "dipsynth/special.h"
#include "dipsynth/synth.h"
#include "dipsynth/tabular.h"

namespace py = pybind11;

namespace dipsynth {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Schema SchemaFromText(const std::string& schema_json) {
  return Schema::FromJson(nlohmann::json::parse(schema_json));
}

Dataset MakeDataset(const RowMatrix& cells, const std::string& schema_json) {
  return Dataset(SchemaFromText(schema_json), Eigen::MatrixXd(cells));
}

NeighborSemantics SemanticsFromName(const std::string& name) {
  if (name == "replacement") return NeighborSemantics::kReplacement;
  if (name == "add_remove") return NeighborSemantics::kAddRemove;
  throw InvalidArgument("semantics must be 'replacement' or 'add_remove'");
}

py::tuple Synthesize(const RowMatrix& cells, const std::string& schema_json,
                     const std::string& method, double epsilon, std::size_t m,
                     std::uint64_t seed, std::size_t bins, std::size_t bn_degree,
                     std::optional<std::size_t> out_n, const std::string& semantics,
                     bool fixed_chain) {
  const Dataset ds = MakeDataset(cells, schema_json);
  SynthesisRequest req;
  req.method = ParseMethod(method);
  req.total_budget = PrivacyBudget{epsilon, 0.0};
  req.m = m;
  req.bins_per_continuous = bins;
  req.bn_degree = bn_degree;
  req.out_n = out_n;
  req.semantics = SemanticsFromName(semantics);
  req.fixed_chain = fixed_chain;
  BudgetLedger ledger(req.total_budget);
  std::vector<SynthModel> models;
  std::vector<Dataset> copies;
  {
    py::gil_scoped_release release;
    copies = GenerateMDatasets(ds, req, RngStream(seed, HashStreamId({kSynthStreamTag})),
                               ledger, &models);
  }
  py::list out;
  for (const Dataset& c : copies) out.append(RowMatrix(c.cells()));
  nlohmann::json summaries = nlohmann::json::array();
  for (const SynthModel& model : models) summaries.push_back(model.Summary());
  return py::make_tuple(out, ledger.ToJson().dump(), summaries.dump());
}

py::tuple EstimateOn(const RowMatrix& cells, const std::string& schema_json,
                     const std::string& estimand) {
  const Dataset ds = MakeDataset(cells, schema_json);
  const Estimand e = ParseEstimand(estimand);
  CheckEstimand(e, ds.schema());
  const EstimateResult r = Estimate(ds, e);
  return py::make_tuple(r.q, r.u, r.n_used);
}

std::string CombineEstimates(const std::vector<double>& q, const std::vector<double>& u,
                             const std::string& rule, double level,
                             const std::string& estimand) {
  if (q.size() != u.size()) throw InvalidArgument("q and u must have the same length");
  std::vector<EstimateResult> results;
  for (std::size_t i = 0; i < q.size(); ++i) results.push_back({q[i], u[i], 0});
  return Combine(results, ParseRule(rule), level).ToJson(estimand).dump();
}

py::tuple GenerateSimulation(const std::string& simulation, std::size_t n,
                             std::uint64_t seed, std::uint64_t stream) {
  RngStream rng(seed, stream);
  const SimDraw draw = Generate(ParseSimulation(simulation), rng, n);
  return py::make_tuple(RowMatrix(draw.data.cells()), draw.data.schema().ToJson().dump(),
                        draw.truths);
}

std::string RunSimulation(const std::string& toml_text, std::optional<std::uint64_t> seed,
                          std::size_t jobs, std::optional<std::string> out_dir) {
  ExperimentConfig cfg = ParseExperimentConfig(toml_text);
  if (seed) cfg.seed = seed;
  cfg.Validate();
  ExperimentResult result;
  {
    py::gil_scoped_release release;
    result = RunExperiment(cfg, jobs);
  }
  if (out_dir) {
    WriteReport(result.table, *out_dir);
    WriteArchive(result.replications, *out_dir);
  }
  nlohmann::json cells = nlohmann::json::array();
  auto num = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v)
                            : nlohmann::json(std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
  };
  for (const CellMetrics& c : result.table.cells) {
    nlohmann::json rules = nlohmann::json::object();
    for (const RuleMetrics& r : c.rules) {
      rules[std::string(RuleName(r.rule))] = {{"mean_variance", num(r.mean_variance)},
                                              {"rab", num(r.rab)},
                                              {"coverage", num(r.coverage)}};
    }
    cells.push_back({{"method", MethodName(c.method)},
                     {"epsilon", num(c.epsilon)},
                     {"estimand", c.estimand},
                     {"theta", c.theta},
                     {"n_ok", c.n_ok},
                     {"n_failed", c.n_failed},
                     {"bias", num(c.bias)},
                     {"relative_bias", num(c.relative_bias)},
                     {"v_mc", num(c.v_mc)},
                     {"u_bar", num(c.mean_u_bar)},
                     {"b_m_over_m", num(c.mean_b_over_m)},
                     {"tp", num(c.mean_tp)},
                     {"rules", rules}});
  }
  return nlohmann::json({{"config", cfg.ToJson()},
                         {"cells", cells},
                         {"failed_arms", result.table.FailedArms()}})
      .dump();
}

}  // namespace
}  // namespace dipsynth

PYBIND11_MODULE(_dipsynth, m) {
  using namespace dipsynth;
  m.doc() = "Differentially private synthetic data and combining-rule inference";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def("synthesize", &Synthesize, py::arg("cells"), py::arg("schema_json"),
        py::arg("method"), py::arg("epsilon"), py::arg("m"), py::arg("seed"),
        py::arg("bins") = 20, py::arg("bn_degree") = 1, py::arg("out_n") = py::none(),
        py::arg("semantics") = "replacement", py::arg("fixed_chain") = false);
  m.def("estimate", &EstimateOn, py::arg("cells"), py::arg("schema_json"),
        py::arg("estimand"));
  m.def("combine", &CombineEstimates, py::arg("q"), py::arg("u"), py::arg("rule") = "tp",
        py::arg("level") = 0.95, py::arg("estimand") = "");
  m.def("generate", &GenerateSimulation, py::arg("simulation"), py::arg("n"),
        py::arg("seed"), py::arg("stream") = 0);
  m.def("simulate", &RunSimulation, py::arg("toml_text"), py::arg("seed") = py::none(),
        py::arg("jobs") = 1, py::arg("out_dir") = py::none());
  m.def("pooled_variance", [](double u_bar, double b_m, std::size_t m_copies,
                              const std::string& rule) {
    return PooledVariance(u_bar, b_m, m_copies, ParseRule(rule));
  });
  m.def("degrees_freedom", [](double u_bar, double b_m, std::size_t m_copies,
                              const std::string& rule) {
    return DegreesFreedom(u_bar, b_m, m_copies, ParseRule(rule));
  });
  m.def("laplace_mechanism",
        [](const std::vector<double>& values, double sensitivity, double epsilon,
           std::uint64_t seed, std::uint64_t stream) {
          RngStream rng(seed, stream);
          return LaplaceMechanism(rng, values, sensitivity, epsilon);
        },
        py::arg("values"), py::arg("sensitivity"), py::arg("epsilon"), py::arg("seed"),
        py::arg("stream") = 0);
  m.def("quantile_t", &QuantileT, py::arg("prob"), py::arg("df"));
  m.def("quantile_normal", &QuantileNormal, py::arg("prob"));
  m.def("latent_corr_for_binary", &LatentCorrForBinary, py::arg("p1"), py::arg("p2"),
        py::arg("binary_rho"));
  m.attr("NON_PRIVATE") = kNonPrivateEpsilon;
}
