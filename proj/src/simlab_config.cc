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


// Experiment configuration: validation, JSON and TOML.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "dipsynth/error.h"
#include "dipsynth/format.h"
#include "dipsynth/simlab.h"

namespace dipsynth {
namespace {

// Accumulates (key, message) problems and throws them together.
class Problems {
 public:
  void Add(std::string key, std::string message) {
    keys_.push_back(key);
    messages_.push_back(std::move(key) + ": " + std::move(message));
  }
  bool empty() const { return keys_.empty(); }
  void ThrowIfAny() const {
    if (keys_.empty()) return;
    std::string text = "invalid configuration (";
    for (std::size_t i = 0; i < messages_.size(); ++i) {
      if (i > 0) text += "; ";
      text += messages_[i];
    }
    text += ")";
    std::vector<std::string> unique;
    for (const std::string& k : keys_) {
      if (std::find(unique.begin(), unique.end(), k) == unique.end()) unique.push_back(k);
    }
    throw ConfigError(text, unique);
  }

 private:
  std::vector<std::string> keys_;
  std::vector<std::string> messages_;
};

nlohmann::json EpsilonToJson(double eps) {
  if (std::isinf(eps)) return "inf";
  return eps;
}

double EpsilonFromJson(const nlohmann::json& j) {
  if (j.is_string()) {
    if (auto v = ParseDouble(j.get<std::string>())) return *v;
    throw InvalidArgument("bad epsilon value " + j.dump());
  }
  return j.get<double>();
}

std::string_view TruthName(TruthConvention t) {
  return t == TruthConvention::kAnalytic ? "analytic" : "monte_carlo";
}

std::string_view SemanticsName(NeighborSemantics s) {
  return s == NeighborSemantics::kReplacement ? "replacement" : "add_remove";
}

std::optional<TruthConvention> ParseTruth(std::string_view s) {
  if (s == "analytic") return TruthConvention::kAnalytic;
  if (s == "monte_carlo") return TruthConvention::kMonteCarlo;
  return std::nullopt;
}

std::optional<NeighborSemantics> ParseSemantics(std::string_view s) {
  if (s == "replacement") return NeighborSemantics::kReplacement;
  if (s == "add_remove") return NeighborSemantics::kAddRemove;
  return std::nullopt;
}

std::optional<double> TomlNumber(const toml::node& node) {
  if (node.is_integer()) return static_cast<double>(*node.value<std::int64_t>());
  if (node.is_floating_point()) return *node.value<double>();
  if (node.is_string()) return ParseDouble(*node.value<std::string>());
  return std::nullopt;
}

std::optional<std::size_t> TomlCount(const toml::node& node) {
  if (!node.is_integer()) return std::nullopt;
  const std::int64_t v = *node.value<std::int64_t>();
  if (v < 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

std::optional<std::vector<std::string>> TomlStrings(const toml::node& node) {
  const toml::array* arr = node.as_array();
  if (arr == nullptr) return std::nullopt;
  std::vector<std::string> out;
  for (const toml::node& el : *arr) {
    if (!el.is_string()) return std::nullopt;
    out.push_back(*el.value<std::string>());
  }
  return out;
}

}  // namespace

std::vector<Estimand> ExperimentConfig::ParsedEstimands() const {
  std::vector<Estimand> out;
  for (const std::string& s : estimands.empty() ? DefaultEstimands(simulation) : estimands) {
    out.push_back(ParseEstimand(s));
  }
  return out;
}

void ExperimentConfig::Validate() const {
  Problems problems;
  if (n < 10) problems.Add("n", "must be at least 10");
  if (replications < 2) problems.Add("B", "must be at least 2");
  if (m < 1) problems.Add("m", "must be at least 1");
  if (!seed) problems.Add("seed", "is required");
  if (!(level > 0.0 && level < 1.0)) problems.Add("level", "must lie in (0, 1)");
  if (bins < 2) problems.Add("bins", "must be at least 2");

  if (epsilon_grid.empty()) problems.Add("epsilon_grid", "must not be empty");
  std::set<double> seen;
  for (double eps : epsilon_grid) {
    if (!(eps > 0.0)) {
      problems.Add("epsilon_grid", "values must be > 0 or inf, got " + FormatDouble(eps));
    } else if (!seen.insert(eps).second) {
      problems.Add("epsilon_grid", "duplicate value " + FormatDouble(eps));
    }
  }

  if (methods.empty()) problems.Add("methods", "must not be empty");
  for (SynthMethod method : methods) {
    if (!IsPrivateMethod(method) && simulation == Simulation::kSim3) {
      problems.Add("methods", "'" + std::string(MethodName(method)) +
                                  "' needs continuous data and cannot run on sim3");
    }
    if (!IsPrivateMethod(method) &&
        std::find_if(epsilon_grid.begin(), epsilon_grid.end(),
                     [](double e) { return std::isinf(e); }) == epsilon_grid.end()) {
      problems.Add("epsilon_grid", "'" + std::string(MethodName(method)) +
                                       "' only runs at epsilon = inf, which is not in the grid");
    }
  }

  if (rules.empty()) problems.Add("rules", "must not be empty");
  for (VarianceRule rule : rules) {
    if (rule == VarianceRule::kTp && m < 2) problems.Add("rules", "tp requires m >= 2");
  }

  const Schema schema = SimulationSchema(simulation);
  const Truths truths = SimulationTruths(simulation);
  for (const std::string& spec : estimands.empty() ? DefaultEstimands(simulation) : estimands) {
    try {
      const Estimand e = ParseEstimand(spec);
      CheckEstimand(e, schema);
      if (truths.find(EstimandName(e)) == truths.end()) {
        problems.Add("estimands", "no known true value for '" + spec + "' in " +
                                      std::string(SimulationName(simulation)));
      }
    } catch (const InvalidArgument& ex) {
      problems.Add("estimands", ex.what());
    }
  }
  problems.ThrowIfAny();
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json grid = nlohmann::json::array();
  for (double e : epsilon_grid) grid.push_back(EpsilonToJson(e));
  nlohmann::json meths = nlohmann::json::array();
  for (SynthMethod mth : methods) meths.push_back(MethodName(mth));
  nlohmann::json rls = nlohmann::json::array();
  for (VarianceRule r : rules) rls.push_back(RuleName(r));
  nlohmann::json ests = nlohmann::json::array();
  for (const Estimand& e : ParsedEstimands()) ests.push_back(EstimandName(e));
  nlohmann::json j = {{"simulation", SimulationName(simulation)},
                      {"n", n},
                      {"B", replications},
                      {"m", m},
                      {"epsilon_grid", grid},
                      {"methods", meths},
                      {"estimands", ests},
                      {"rules", rls},
                      {"level", level},
                      {"truth", TruthName(truth)},
                      {"bins", bins},
                      {"bn_degree", bn_degree},
                      {"semantics", SemanticsName(semantics)}};
  if (seed) j["seed"] = *seed;
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.simulation = ParseSimulation(j.at("simulation").get<std::string>());
  cfg.n = j.at("n").get<std::size_t>();
  cfg.replications = j.at("B").get<std::size_t>();
  cfg.m = j.at("m").get<std::size_t>();
  cfg.epsilon_grid.clear();
  for (const auto& e : j.at("epsilon_grid")) cfg.epsilon_grid.push_back(EpsilonFromJson(e));
  cfg.methods.clear();
  for (const auto& s : j.at("methods")) cfg.methods.push_back(ParseMethod(s.get<std::string>()));
  cfg.estimands = j.at("estimands").get<std::vector<std::string>>();
  cfg.rules.clear();
  for (const auto& s : j.at("rules")) cfg.rules.push_back(ParseRule(s.get<std::string>()));
  cfg.level = j.at("level").get<double>();
  cfg.truth = ParseTruth(j.at("truth").get<std::string>()).value();
  cfg.bins = j.at("bins").get<std::size_t>();
  cfg.bn_degree = j.at("bn_degree").get<std::size_t>();
  cfg.semantics = ParseSemantics(j.at("semantics").get<std::string>()).value();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

ExperimentConfig ParseExperimentConfig(std::string_view toml_text) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text);
  } catch (const toml::parse_error& err) {
    std::ostringstream msg;
    msg << "invalid configuration: TOML parse error at line " << err.source().begin.line
        << ": " << err.description();
    throw ConfigError(msg.str(), {});
  }

  ExperimentConfig cfg;
  Problems problems;
  static const std::set<std::string> kKnown = {
      "simulation", "n",     "B",    "m",     "epsilon_grid", "methods", "estimands",
      "rules",      "level", "seed", "out_dir", "truth",      "bins",    "bn_degree",
      "semantics"};
  for (const auto& [key, node] : tbl) {
    const std::string k(key.str());
    if (kKnown.count(k) == 0) problems.Add(k, "unknown key");
  }

  if (const toml::node* node = tbl.get("simulation")) {
    try {
      cfg.simulation = ParseSimulation(node->value<std::string>().value_or(""));
    } catch (const InvalidArgument& ex) {
      problems.Add("simulation", ex.what());
    }
  } else {
    problems.Add("simulation", "is required");
  }

  auto count = [&](const char* key, std::size_t& target) {
    if (const toml::node* node = tbl.get(key)) {
      if (auto v = TomlCount(*node)) {
        target = *v;
      } else {
        problems.Add(key, "must be a nonnegative integer");
      }
    }
  };
  count("n", cfg.n);
  count("B", cfg.replications);
  count("m", cfg.m);
  count("bins", cfg.bins);
  count("bn_degree", cfg.bn_degree);

  if (const toml::node* node = tbl.get("seed")) {
    if (node->is_integer() && *node->value<std::int64_t>() >= 0) {
      cfg.seed = static_cast<std::uint64_t>(*node->value<std::int64_t>());
    } else if (node->is_string()) {
      std::uint64_t v = 0;
      const std::string s = *node->value<std::string>();
      std::istringstream in(s);
      if (in >> v && in.eof()) {
        cfg.seed = v;
      } else {
        problems.Add("seed", "must be a nonnegative integer");
      }
    } else {
      problems.Add("seed", "must be a nonnegative integer");
    }
  }

  if (const toml::node* node = tbl.get("level")) {
    if (auto v = TomlNumber(*node); v && !node->is_string()) {
      cfg.level = *v;
    } else {
      problems.Add("level", "must be a number");
    }
  }

  if (const toml::node* node = tbl.get("epsilon_grid")) {
    const toml::array* arr = node->as_array();
    if (arr == nullptr) {
      problems.Add("epsilon_grid", "must be an array");
    } else {
      cfg.epsilon_grid.clear();
      for (const toml::node& el : *arr) {
        if (auto v = TomlNumber(el)) {
          cfg.epsilon_grid.push_back(*v);
        } else {
          problems.Add("epsilon_grid", "entries must be numbers or \"inf\"");
        }
      }
    }
  }

  if (const toml::node* node = tbl.get("methods")) {
    if (auto names = TomlStrings(*node)) {
      cfg.methods.clear();
      for (const std::string& s : *names) {
        try {
          cfg.methods.push_back(ParseMethod(s));
        } catch (const InvalidArgument& ex) {
          problems.Add("methods", ex.what());
        }
      }
    } else {
      problems.Add("methods", "must be an array of strings");
    }
  }

  if (const toml::node* node = tbl.get("rules")) {
    if (auto names = TomlStrings(*node)) {
      cfg.rules.clear();
      for (const std::string& s : *names) {
        try {
          cfg.rules.push_back(ParseRule(s));
        } catch (const InvalidArgument& ex) {
          problems.Add("rules", ex.what());
        }
      }
    } else {
      problems.Add("rules", "must be an array of strings");
    }
  }

  if (const toml::node* node = tbl.get("estimands")) {
    if (auto names = TomlStrings(*node)) {
      cfg.estimands = *names;
    } else {
      problems.Add("estimands", "must be an array of strings");
    }
  }

  if (const toml::node* node = tbl.get("out_dir")) {
    if (node->is_string()) {
      cfg.out_dir = *node->value<std::string>();
    } else {
      problems.Add("out_dir", "must be a string");
    }
  }

  if (const toml::node* node = tbl.get("truth")) {
    if (auto t = ParseTruth(node->value<std::string>().value_or(""))) {
      cfg.truth = *t;
    } else {
      problems.Add("truth", "must be \"analytic\" or \"monte_carlo\"");
    }
  }

  if (const toml::node* node = tbl.get("semantics")) {
    if (auto s = ParseSemantics(node->value<std::string>().value_or(""))) {
      cfg.semantics = *s;
    } else {
      problems.Add("semantics", "must be \"replacement\" or \"add_remove\"");
    }
  }

  problems.ThrowIfAny();
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open configuration " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg = ParseExperimentConfig(text.str());
  return cfg;
}

bool ArmApplicable(SynthMethod method, double epsilon) {
  return IsPrivateMethod(method) || std::isinf(epsilon);
}

}  // namespace dipsynth
