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


// Replication loop, aggregation, report tables and the raw archive.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dipsynth/error.h"
#include "dipsynth/format.h"
#include "dipsynth/simlab.h"
#include "dipsynth/special.h"

namespace dipsynth {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kDataTag = 0xDA7A;
constexpr std::uint64_t kArmTag = 0xA53;

std::uint64_t MethodCode(SynthMethod method) {
  return static_cast<std::uint64_t>(method) + 1;
}

// JSON numbers cannot hold inf or NaN; those travel as strings.
nlohmann::json Num(double v) {
  if (std::isfinite(v)) return v;
  return FormatDouble(v);
}

double NumFrom(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return kNaN;
    if (auto v = ParseDouble(s)) return *v;
    throw DataError("archive: bad number '" + s + "'");
  }
  return j.get<double>();
}

double Mean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

std::string Cell(double v) { return std::isnan(v) ? std::string() : FormatDouble(v); }

std::string EpsilonHeader(double eps) { return "eps=" + FormatDouble(eps); }

class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot write " + path.string());
  }
  void Row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
    if (!out_) throw DataError("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace

ReplicationResult RunReplication(const ExperimentConfig& cfg, std::size_t b) {
  const std::vector<Estimand> estimands = cfg.ParsedEstimands();
  ReplicationResult rep;
  rep.index = b;

  RngStream data_rng(*cfg.seed, HashStreamId({kDataTag, b}));
  const SimDraw draw = Generate(cfg.simulation, data_rng, cfg.n);

  for (const Estimand& e : estimands) {
    try {
      rep.original.push_back(Estimate(draw.data, e));
      rep.original_ok.push_back(true);
    } catch (const Error&) {
      rep.original.push_back({});
      rep.original_ok.push_back(false);
    }
  }

  for (SynthMethod method : cfg.methods) {
    for (double eps : cfg.epsilon_grid) {
      if (!ArmApplicable(method, eps)) continue;
      ArmOutcome arm;
      arm.method = method;
      arm.epsilon = eps;
      // Keyed by (replication, method) only: every epsilon arm reuses the same
      // draws, so differences across the grid reflect epsilon, not noise.
      const RngStream arm_rng(*cfg.seed, HashStreamId({kArmTag, b, MethodCode(method)}));
      BudgetLedger ledger(PrivacyBudget{eps, 0.0});
      SynthesisRequest req;
      req.method = method;
      req.total_budget = PrivacyBudget{eps, 0.0};
      req.m = cfg.m;
      req.bins_per_continuous = cfg.bins;
      req.bn_degree = cfg.bn_degree;
      req.semantics = cfg.semantics;

      std::vector<Dataset> copies;
      std::string synth_error;
      try {
        copies = GenerateMDatasets(draw.data, req, arm_rng, ledger);
      } catch (const Error& ex) {
        synth_error = std::string("synthesis failed: ") + ex.what();
      }
      arm.ledger_spent = ledger.Spent().epsilon;

      for (const Estimand& e : estimands) {
        EstimandOutcome out;
        if (!synth_error.empty()) {
          out.failed = true;
          out.error = synth_error;
          arm.estimands.push_back(std::move(out));
          continue;
        }
        try {
          std::vector<EstimateResult> results;
          for (const Dataset& copy : copies) results.push_back(Estimate(copy, e));
          for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
            const CombinedInference ci = Combine(results, cfg.rules[r], cfg.level);
            out.q_bar = ci.q_bar;
            out.u_bar = ci.u_bar;
            out.b_m = ci.b_m;
            out.rules.push_back({ci.variance, ci.df, ci.lo, ci.hi});
          }
        } catch (const Error& ex) {
          out = EstimandOutcome{};
          out.failed = true;
          out.error = ex.what();
        }
        arm.estimands.push_back(std::move(out));
      }
      rep.arms.push_back(std::move(arm));
    }
  }
  return rep;
}

nlohmann::json ReplicationResult::ToJson() const {
  nlohmann::json orig = nlohmann::json::array();
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original_ok[i]) {
      orig.push_back({{"q", Num(original[i].q)},
                      {"u", Num(original[i].u)},
                      {"n", original[i].n_used}});
    } else {
      orig.push_back({{"failed", true}});
    }
  }
  nlohmann::json arms_json = nlohmann::json::array();
  for (const ArmOutcome& arm : arms) {
    nlohmann::json ests = nlohmann::json::array();
    for (const EstimandOutcome& e : arm.estimands) {
      if (e.failed) {
        ests.push_back({{"failed", true}, {"error", e.error}});
        continue;
      }
      nlohmann::json rules_json = nlohmann::json::array();
      for (const RuleOutcome& r : e.rules) {
        rules_json.push_back(
            {{"variance", Num(r.variance)}, {"df", Num(r.df)}, {"lo", Num(r.lo)}, {"hi", Num(r.hi)}});
      }
      ests.push_back({{"q_bar", Num(e.q_bar)},
                      {"u_bar", Num(e.u_bar)},
                      {"b_m", Num(e.b_m)},
                      {"rules", std::move(rules_json)}});
    }
    arms_json.push_back({{"method", MethodName(arm.method)},
                         {"epsilon", Num(arm.epsilon)},
                         {"ledger_spent", Num(arm.ledger_spent)},
                         {"estimands", std::move(ests)}});
  }
  return {{"b", index}, {"original", std::move(orig)}, {"arms", std::move(arms_json)}};
}

ReplicationResult ReplicationResult::FromJson(const nlohmann::json& j) {
  ReplicationResult rep;
  rep.index = j.at("b").get<std::size_t>();
  for (const auto& o : j.at("original")) {
    if (o.value("failed", false)) {
      rep.original.push_back({});
      rep.original_ok.push_back(false);
    } else {
      rep.original.push_back(
          {NumFrom(o.at("q")), NumFrom(o.at("u")), o.at("n").get<std::size_t>()});
      rep.original_ok.push_back(true);
    }
  }
  for (const auto& a : j.at("arms")) {
    ArmOutcome arm;
    arm.method = ParseMethod(a.at("method").get<std::string>());
    arm.epsilon = NumFrom(a.at("epsilon"));
    arm.ledger_spent = NumFrom(a.at("ledger_spent"));
    for (const auto& e : a.at("estimands")) {
      EstimandOutcome out;
      if (e.value("failed", false)) {
        out.failed = true;
        out.error = e.value("error", "");
      } else {
        out.q_bar = NumFrom(e.at("q_bar"));
        out.u_bar = NumFrom(e.at("u_bar"));
        out.b_m = NumFrom(e.at("b_m"));
        for (const auto& r : e.at("rules")) {
          out.rules.push_back(
              {NumFrom(r.at("variance")), NumFrom(r.at("df")), NumFrom(r.at("lo")), NumFrom(r.at("hi"))});
        }
      }
      arm.estimands.push_back(std::move(out));
    }
    rep.arms.push_back(std::move(arm));
  }
  return rep;
}

const CellMetrics* MetricsTable::Find(SynthMethod method, double epsilon,
                                      std::string_view estimand) const {
  for (const CellMetrics& c : cells) {
    if (c.method == method && c.epsilon == epsilon && c.estimand == estimand) return &c;
  }
  return nullptr;
}

std::vector<std::string> MetricsTable::FailedArms() const {
  std::vector<std::string> out;
  for (const ArmAudit& a : audit) {
    if (10 * a.failed_cells > a.total_cells) {
      out.push_back(std::string(MethodName(a.method)) + " at epsilon = " +
                    FormatDouble(a.epsilon) + " (" + std::to_string(a.failed_cells) + " of " +
                    std::to_string(a.total_cells) + " cells failed)");
    }
  }
  return out;
}

MetricsTable Aggregate(const ExperimentConfig& cfg, std::span<const ReplicationResult> reps) {
  const std::vector<Estimand> estimands = cfg.ParsedEstimands();
  const Truths analytic = SimulationTruths(cfg.simulation);
  const std::size_t k = estimands.size();
  const double z = QuantileNormal(0.5 * (1.0 + cfg.level));

  MetricsTable table;
  table.config = cfg;

  // Truths and original-data metrics.
  std::vector<double> theta(k);
  for (std::size_t e = 0; e < k; ++e) {
    const std::string name = EstimandName(estimands[e]);
    std::vector<double> q;
    std::vector<double> u;
    std::vector<std::pair<double, double>> cis;
    for (const ReplicationResult& rep : reps) {
      if (!rep.original_ok[e]) continue;
      q.push_back(rep.original[e].q);
      u.push_back(rep.original[e].u);
      const double half = z * std::sqrt(rep.original[e].u);
      cis.push_back({rep.original[e].q - half, rep.original[e].q + half});
    }
    theta[e] = analytic.at(name);
    if (cfg.truth == TruthConvention::kMonteCarlo &&
        std::holds_alternative<OlsEstimand>(estimands[e]) && !q.empty()) {
      theta[e] = Mean(q);
    }
    OriginalMetrics om;
    om.estimand = name;
    om.theta = theta[e];
    om.n_ok = q.size();
    om.bias = q.empty() ? kNaN : MetricBias(q, theta[e], false);
    om.v_mc = q.size() >= 2 ? MonteCarloVariance(q) : kNaN;
    om.rab = om.v_mc > 0.0 ? 100.0 * Mean(u) / om.v_mc : kNaN;
    om.coverage = MetricCoverage(cis, theta[e]);
    table.original.push_back(std::move(om));
  }

  const std::size_t num_arms = reps.empty() ? 0 : reps.front().arms.size();
  for (std::size_t a = 0; a < num_arms; ++a) {
    const ArmOutcome& proto = reps.front().arms[a];
    ArmAudit audit;
    audit.method = proto.method;
    audit.epsilon = proto.epsilon;
    audit.per_copy = SplitBudget(PrivacyBudget{proto.epsilon, 0.0}, cfg.m).epsilon;
    const double expected_spend = std::isinf(proto.epsilon) ? 0.0 : proto.epsilon;
    for (const ReplicationResult& rep : reps) {
      audit.max_ledger_error = std::max(audit.max_ledger_error,
                                        std::abs(rep.arms[a].ledger_spent - expected_spend));
    }

    for (std::size_t e = 0; e < k; ++e) {
      CellMetrics cell;
      cell.method = proto.method;
      cell.epsilon = proto.epsilon;
      cell.estimand = EstimandName(estimands[e]);
      cell.theta = theta[e];
      std::vector<double> q_bar;
      std::vector<double> u_bar;
      std::vector<double> b_over_m;
      std::vector<double> tp;
      std::vector<std::vector<double>> variances(cfg.rules.size());
      std::vector<std::vector<std::pair<double, double>>> cis(cfg.rules.size());
      for (const ReplicationResult& rep : reps) {
        const EstimandOutcome& out = rep.arms[a].estimands[e];
        if (out.failed) {
          ++cell.n_failed;
          continue;
        }
        q_bar.push_back(out.q_bar);
        u_bar.push_back(out.u_bar);
        b_over_m.push_back(out.b_m / static_cast<double>(cfg.m));
        tp.push_back(out.u_bar + out.b_m / static_cast<double>(cfg.m));
        for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
          variances[r].push_back(out.rules[r].variance);
          cis[r].push_back({out.rules[r].lo, out.rules[r].hi});
        }
      }
      cell.n_ok = q_bar.size();
      audit.failed_cells += cell.n_failed;
      audit.total_cells += cell.n_failed + cell.n_ok;
      if (!q_bar.empty()) {
        cell.bias = MetricBias(q_bar, theta[e], false);
        cell.relative_bias = theta[e] != 0.0 ? MetricBias(q_bar, theta[e], true) : kNaN;
        cell.mean_u_bar = Mean(u_bar);
        cell.mean_b_over_m = Mean(b_over_m);
        cell.mean_tp = Mean(tp);
      } else {
        cell.bias = cell.relative_bias = cell.mean_u_bar = cell.mean_b_over_m = cell.mean_tp = kNaN;
      }
      cell.v_mc = q_bar.size() >= 2 ? MonteCarloVariance(q_bar) : kNaN;
      for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
        RuleMetrics rm;
        rm.rule = cfg.rules[r];
        rm.mean_variance = variances[r].empty() ? kNaN : Mean(variances[r]);
        rm.rab = cell.v_mc > 0.0 ? 100.0 * rm.mean_variance / cell.v_mc : kNaN;
        rm.coverage = MetricCoverage(cis[r], theta[e]);
        cell.rules.push_back(rm);
      }
      table.cells.push_back(std::move(cell));
    }
    table.audit.push_back(audit);
  }
  return table;
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.Validate();
  const std::size_t total = cfg.replications;
  std::vector<ReplicationResult> reps(total);
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, total));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= total) return;
      try {
        reps[b] = RunReplication(cfg, b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  result.table = Aggregate(cfg, reps);
  result.replications = std::move(reps);
  return result;
}

void WriteReport(const MetricsTable& table, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  const ExperimentConfig& cfg = table.config;
  const std::vector<Estimand> estimands = cfg.ParsedEstimands();

  auto header = [&](bool with_rule) {
    std::vector<std::string> h = {"estimand", "method"};
    if (with_rule) h.push_back("rule");
    for (double eps : cfg.epsilon_grid) h.push_back(EpsilonHeader(eps));
    return h;
  };

  // Rule-independent tables: one row per (estimand, method).
  auto simple = [&](const char* file, auto metric) {
    CsvFile csv(out_dir / file);
    csv.Row(header(false));
    for (const Estimand& est : estimands) {
      const std::string name = EstimandName(est);
      for (SynthMethod method : cfg.methods) {
        std::vector<std::string> row = {name, std::string(MethodName(method))};
        for (double eps : cfg.epsilon_grid) {
          const CellMetrics* c = table.Find(method, eps, name);
          row.push_back(c ? Cell(metric(*c)) : std::string());
        }
        csv.Row(row);
      }
    }
  };
  simple("bias.csv", [](const CellMetrics& c) { return c.bias; });
  simple("relative_bias.csv", [](const CellMetrics& c) { return c.relative_bias; });
  simple("vmc.csv", [](const CellMetrics& c) { return c.v_mc; });

  // Per-rule tables: one row per (estimand, method, rule).
  auto per_rule = [&](const char* file, auto metric) {
    CsvFile csv(out_dir / file);
    csv.Row(header(true));
    for (const Estimand& est : estimands) {
      const std::string name = EstimandName(est);
      for (SynthMethod method : cfg.methods) {
        for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
          std::vector<std::string> row = {name, std::string(MethodName(method)),
                                          std::string(RuleName(cfg.rules[r]))};
          for (double eps : cfg.epsilon_grid) {
            const CellMetrics* c = table.Find(method, eps, name);
            row.push_back(c ? Cell(metric(c->rules[r])) : std::string());
          }
          csv.Row(row);
        }
      }
    }
  };
  per_rule("rab.csv", [](const RuleMetrics& r) { return r.rab; });
  per_rule("coverage.csv", [](const RuleMetrics& r) { return r.coverage; });

  {
    CsvFile csv(out_dir / "decomposition.csv");
    csv.Row({"method", "epsilon", "estimand", "u_bar", "b_m_over_m", "tp", "v_mc", "n_ok",
             "n_failed"});
    for (const CellMetrics& c : table.cells) {
      csv.Row({std::string(MethodName(c.method)), FormatDouble(c.epsilon), c.estimand,
               Cell(c.mean_u_bar), Cell(c.mean_b_over_m), Cell(c.mean_tp), Cell(c.v_mc),
               std::to_string(c.n_ok), std::to_string(c.n_failed)});
    }
  }

  {
    CsvFile csv(out_dir / "original.csv");
    csv.Row({"estimand", "theta", "bias", "v_mc", "rab", "coverage", "n_ok"});
    for (const OriginalMetrics& o : table.original) {
      csv.Row({o.estimand, FormatDouble(o.theta), Cell(o.bias), Cell(o.v_mc), Cell(o.rab),
               Cell(o.coverage), std::to_string(o.n_ok)});
    }
  }

  nlohmann::json audit = nlohmann::json::array();
  for (const ArmAudit& a : table.audit) {
    audit.push_back({{"method", MethodName(a.method)},
                     {"epsilon_total", Num(a.epsilon)},
                     {"epsilon_per_copy", Num(a.per_copy)},
                     {"copies", cfg.m},
                     {"non_private", std::isinf(a.epsilon)},
                     {"max_ledger_error", a.max_ledger_error},
                     {"failed_cells", a.failed_cells},
                     {"total_cells", a.total_cells}});
  }
  nlohmann::json failed = nlohmann::json::array();
  for (const std::string& s : table.FailedArms()) failed.push_back(s);
  const nlohmann::json manifest = {
      {"software", "dipsynth"},
      {"config", cfg.ToJson()},
      {"seed", cfg.seed.value_or(0)},
      {"ledger_audit", std::move(audit)},
      {"failed_arms", std::move(failed)},
      {"files",
       {"bias.csv", "relative_bias.csv", "vmc.csv", "rab.csv", "coverage.csv",
        "decomposition.csv", "original.csv", "replications.jsonl"}}};
  std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << '\n';
}

void WriteArchive(std::span<const ReplicationResult> reps, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  std::ofstream out(out_dir / "replications.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write archive in " + out_dir.string());
  for (const ReplicationResult& rep : reps) out << rep.ToJson().dump() << '\n';
  if (!out) throw DataError("archive write failed in " + out_dir.string());
}

std::vector<ReplicationResult> ReadArchive(const std::filesystem::path& out_dir) {
  const std::filesystem::path path = out_dir / "replications.jsonl";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ReplicationResult> reps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      reps.push_back(ReplicationResult::FromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return reps;
}

}  // namespace dipsynth
