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


// Command-line front end: synth, infer, simulate and report.
//
// Exit codes: 0 success, 1 usage error, 2 data or runtime error. Only
// machine-readable output goes to stdout; diagnostics go to stderr.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dipsynth/combine.h"
#include "dipsynth/error.h"
#include "dipsynth/estimators.h"
#include "dipsynth/format.h"
#include "dipsynth/privacy.h"
#include "dipsynth/rng.h"
#include "dipsynth/simlab.h"
#include "dipsynth/synth.h"
#include "dipsynth/tabular.h"

namespace {

using namespace dipsynth;

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

// Raised for flag combinations that are invalid before any data is touched.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double ParseEpsilon(const std::string& text) {
  auto v = ParseDouble(text);
  if (!v || !(*v > 0.0)) {
    throw UsageError("--epsilon must be a positive number or \"inf\", got '" + text + "'");
  }
  return *v;
}

NeighborSemantics ParseSemanticsFlag(const std::string& s) {
  if (s == "replacement") return NeighborSemantics::kReplacement;
  if (s == "add_remove") return NeighborSemantics::kAddRemove;
  throw UsageError("--semantics must be replacement or add_remove");
}

template <typename F>
auto AsUsage(F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& ex) {
    throw UsageError(ex.what());
  }
}

struct SynthArgs {
  std::string input;
  std::string schema;
  std::string method;
  std::string epsilon;
  std::size_t m = 1;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t bins = 20;
  std::size_t bn_degree = 1;
  std::optional<std::size_t> out_n;
  std::string semantics = "replacement";
  bool fixed_chain = false;
};

int RunSynth(const SynthArgs& args) {
  if (!args.seed) throw UsageError("--seed is required");
  SynthesisRequest req;
  req.method = AsUsage([&] { return ParseMethod(args.method); });
  req.total_budget = PrivacyBudget{ParseEpsilon(args.epsilon), 0.0};
  req.m = args.m;
  req.bins_per_continuous = args.bins;
  req.bn_degree = args.bn_degree;
  req.out_n = args.out_n;
  req.semantics = ParseSemanticsFlag(args.semantics);
  req.fixed_chain = args.fixed_chain;
  AsUsage([&] {
    req.Validate();
    return 0;
  });

  const Schema schema = LoadSchemaJson(args.schema);
  const LoadedDataset loaded = LoadCsv(args.input, schema);
  BudgetLedger ledger(req.total_budget);
  const RngStream rng(*args.seed, HashStreamId({kSynthStreamTag}));
  std::vector<SynthModel> models;
  const std::vector<Dataset> copies =
      GenerateMDatasets(loaded.dataset, req, rng, ledger, &models);

  nlohmann::json summaries = nlohmann::json::array();
  for (const SynthModel& model : models) summaries.push_back(model.Summary());
  nlohmann::json clamps = nlohmann::json::object();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    clamps[schema[c].name] = loaded.clamp_counts[c];
  }
  const PrivacyBudget per_copy = SplitBudget(req.total_budget, req.m);
  auto eps_json = [](double e) {
    return std::isinf(e) ? nlohmann::json("inf") : nlohmann::json(e);
  };
  const nlohmann::json manifest = {
      {"method", MethodName(req.method)},
      {"m", req.m},
      {"epsilon_total", eps_json(req.total_budget.epsilon)},
      {"epsilon_per_copy", eps_json(per_copy.epsilon)},
      {"seed", *args.seed},
      {"bins_per_continuous", req.bins_per_continuous},
      {"bn_degree", req.bn_degree},
      {"semantics", args.semantics},
      {"rows_in", loaded.dataset.rows()},
      {"rows_out", copies.empty() ? 0 : copies.front().rows()},
      {"input_clamped", clamps},
      {"schema", schema.ToJson()},
      {"ledger", ledger.ToJson()},
      {"models", summaries}};
  WriteBundle(args.out_dir, copies, manifest);
  std::cerr << "wrote " << copies.size() << " synthetic copies to " << args.out_dir
            << " (epsilon spent " << FormatDouble(ledger.Spent().epsilon) << ")\n";
  return 0;
}

struct InferArgs {
  std::vector<std::string> inputs;
  std::string schema;
  std::string estimand;
  std::string rule = "tp";
  double level = 0.95;
};

int RunInfer(const InferArgs& args) {
  const Estimand estimand = AsUsage([&] { return ParseEstimand(args.estimand); });
  const VarianceRule rule = AsUsage([&] { return ParseRule(args.rule); });
  if (!(args.level > 0.0 && args.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  if (rule == VarianceRule::kTp && args.inputs.size() < 2) {
    throw UsageError("rule tp requires m >= 2 synthetic copies, got " +
                     std::to_string(args.inputs.size()));
  }
  const Schema schema = LoadSchemaJson(args.schema);
  try {
    CheckEstimand(estimand, schema);
  } catch (const InvalidArgument& ex) {
    throw UsageError(std::string("estimand does not fit the schema: ") + ex.what());
  }
  std::vector<EstimateResult> results;
  for (const std::string& path : args.inputs) {
    results.push_back(Estimate(LoadCsv(path, schema).dataset, estimand));
  }
  const CombinedInference ci = Combine(results, rule, args.level);
  std::cout << ci.ToJson(EstimandName(estimand)).dump(2) << '\n';
  return 0;
}

struct SimulateArgs {
  std::string config;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

int RunSimulate(const SimulateArgs& args) {
  ExperimentConfig cfg;
  try {
    cfg = LoadExperimentConfig(args.config);
    if (args.seed) cfg.seed = args.seed;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.Validate();
  } catch (const ConfigError& ex) {
    std::string keys;
    for (const std::string& k : ex.keys()) keys += (keys.empty() ? "" : ", ") + k;
    throw UsageError(std::string(ex.what()) + (keys.empty() ? "" : " [keys: " + keys + "]"));
  }
  if (args.jobs < 1) throw UsageError("--jobs must be at least 1");

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult result = RunExperiment(cfg, args.jobs);
  WriteArchive(result.replications, cfg.out_dir);
  WriteReport(result.table, cfg.out_dir);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "simulate: " << cfg.replications << " replications in " << seconds
            << " s on " << args.jobs << " job(s); report in " << cfg.out_dir.string() << '\n';

  const std::vector<std::string> failed = result.table.FailedArms();
  if (!failed.empty()) {
    for (const std::string& f : failed) std::cerr << "simulate: too many failures: " << f << '\n';
    return kRuntime;
  }
  return 0;
}

struct ReportArgs {
  std::string run_dir;
  std::string out_dir;
};

int RunReport(const ReportArgs& args) {
  const std::filesystem::path run_dir = args.run_dir;
  std::ifstream in(run_dir / "manifest.json", std::ios::binary);
  if (!in) throw DataError("cannot open " + (run_dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("bad manifest: ") + ex.what());
  }
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::FromJson(manifest.at("config"));
  } catch (const std::exception& ex) {
    throw DataError(std::string("bad manifest config: ") + ex.what());
  }
  const std::vector<ReplicationResult> reps = ReadArchive(run_dir);
  if (reps.size() != cfg.replications) {
    throw DataError("archive holds " + std::to_string(reps.size()) + " replications, expected " +
                    std::to_string(cfg.replications));
  }
  const std::filesystem::path out = args.out_dir.empty() ? run_dir : std::filesystem::path(args.out_dir);
  WriteReport(Aggregate(cfg, reps), out);
  std::cerr << "report: rebuilt tables in " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dipsynth: differentially private synthetic data and combining-rule inference"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate m synthetic copies of a dataset");
  synth_cmd->add_option("--input", synth.input, "Original data CSV")->required();
  synth_cmd->add_option("--schema", synth.schema, "Schema JSON")->required();
  synth_cmd->add_option("--method", synth.method, "histogram, bayesnet, gaussian or gaussian_ppd")
      ->required();
  synth_cmd->add_option("--epsilon", synth.epsilon, "Total privacy budget (number or inf)")
      ->required();
  synth_cmd->add_option("--m", synth.m, "Number of synthetic copies")->required();
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--bins", synth.bins, "Bins per continuous column");
  synth_cmd->add_option("--bn-degree", synth.bn_degree, "Maximum parents per column (bayesnet)");
  synth_cmd->add_option("--out-n", synth.out_n, "Rows per synthetic copy");
  synth_cmd->add_option("--semantics", synth.semantics, "replacement or add_remove");
  synth_cmd->add_flag("--fixed-chain", synth.fixed_chain,
                      "bayesnet: fixed parent chain, whole budget to the tables");

  InferArgs infer;
  CLI::App* infer_cmd = app.add_subcommand("infer", "Combine estimates from synthetic copies");
  infer_cmd->add_option("--inputs", infer.inputs, "Synthetic copy CSVs")->required();
  infer_cmd->add_option("--schema", infer.schema, "Schema JSON")->required();
  infer_cmd->add_option("--estimand", infer.estimand,
                        "mean:COL, prop:COL=LEVEL or ols:Y~X1+X2#X")
      ->required();
  infer_cmd->add_option("--rule", infer.rule, "tp, ts, tsppd or naive");
  infer_cmd->add_option("--level", infer.level, "Confidence level");

  SimulateArgs simulate;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  sim_cmd->add_option("--config", simulate.config, "Experiment TOML")->required();
  sim_cmd->add_option("--jobs", simulate.jobs, "Worker threads");
  sim_cmd->add_option("--seed", simulate.seed, "Overrides the configured seed");
  sim_cmd->add_option("--out-dir", simulate.out_dir, "Overrides the configured out_dir");

  ReportArgs report;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Rebuild report tables from a run's archive");
  report_cmd->add_option("--run-dir", report.run_dir, "Directory written by simulate")
      ->required();
  report_cmd->add_option("--out-dir", report.out_dir, "Where to write tables (default run dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kUsage;
  }

  try {
    if (synth_cmd->parsed()) return RunSynth(synth);
    if (infer_cmd->parsed()) return RunInfer(infer);
    if (sim_cmd->parsed()) return RunSimulate(simulate);
    if (report_cmd->parsed()) return RunReport(report);
  } catch (const UsageError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
