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


#include "dipsynth/combine.h"

#include <cmath>
#include <limits>

#include "dipsynth/error.h"
#include "dipsynth/special.h"

namespace dipsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckFinite(std::span<const double> v, const char* what) {
  if (v.empty()) throw InvalidArgument(std::string(what) + ": no estimates");
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + ": non-finite input");
  }
}

void CheckRule(double u_bar, double b_m, std::size_t m, VarianceRule rule) {
  if (m < 1) throw InvalidArgument("combining rule: m must be at least 1");
  if (rule == VarianceRule::kTp && m < 2) {
    throw InvalidArgument("combining rule tp requires m >= 2 copies");
  }
  if (!(u_bar >= 0.0) || !std::isfinite(u_bar)) {
    throw InvalidArgument("combining rule: u_bar must be finite and >= 0");
  }
  if (!(b_m >= 0.0) || !std::isfinite(b_m)) {
    throw InvalidArgument("combining rule: b_m must be finite and >= 0");
  }
}

}  // namespace

std::string_view RuleName(VarianceRule rule) {
  switch (rule) {
    case VarianceRule::kTp:
      return "tp";
    case VarianceRule::kTs:
      return "ts";
    case VarianceRule::kTsPpd:
      return "tsppd";
    case VarianceRule::kNaiveUbar:
      return "naive";
  }
  return "unknown";
}

VarianceRule ParseRule(std::string_view name) {
  if (name == "tp" || name == "Tp") return VarianceRule::kTp;
  if (name == "ts" || name == "Ts") return VarianceRule::kTs;
  if (name == "tsppd" || name == "TsPPD") return VarianceRule::kTsPpd;
  if (name == "naive" || name == "NaiveUbar") return VarianceRule::kNaiveUbar;
  throw InvalidArgument("unknown variance rule '" + std::string(name) +
                        "' (expected tp, ts, tsppd or naive)");
}

double CombinePoint(std::span<const double> q) {
  CheckFinite(q, "CombinePoint");
  double sum = 0.0;
  for (double x : q) sum += x;
  return sum / static_cast<double>(q.size());
}

double WithinVariance(std::span<const double> u) {
  CheckFinite(u, "WithinVariance");
  for (double x : u) {
    if (x < 0.0) throw InvalidArgument("WithinVariance: negative variance estimate");
  }
  return CombinePoint(u);
}

double BetweenVariance(std::span<const double> q) {
  if (q.size() < 2) throw InvalidArgument("BetweenVariance: requires m >= 2");
  const double mean = CombinePoint(q);
  double ss = 0.0;
  for (double x : q) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(q.size() - 1);
}

double PooledVariance(double u_bar, double b_m, std::size_t m, VarianceRule rule) {
  CheckRule(u_bar, b_m, m, rule);
  const double dm = static_cast<double>(m);
  switch (rule) {
    case VarianceRule::kTp:
      return b_m / dm + u_bar;
    case VarianceRule::kTs:
      return u_bar * (1.0 + 1.0 / dm);
    case VarianceRule::kTsPpd:
      return u_bar * (1.0 + 2.0 / dm);
    case VarianceRule::kNaiveUbar:
      return u_bar;
  }
  return u_bar;
}

double DegreesFreedom(double u_bar, double b_m, std::size_t m, VarianceRule rule) {
  CheckRule(u_bar, b_m, m, rule);
  if (rule != VarianceRule::kTp) return kInf;
  const double dm = static_cast<double>(m);
  if (b_m == 0.0 && u_bar == 0.0) {
    throw InvalidArgument("degrees of freedom undefined: u_bar and b_m are both 0");
  }
  if (b_m == 0.0) return kInf;
  if (u_bar == 0.0) return dm - 1.0;
  const double inv_r = dm * u_bar / b_m;
  return (dm - 1.0) * (1.0 + inv_r) * (1.0 + inv_r);
}

std::pair<double, double> ConfidenceInterval(double q_bar, double variance, double df,
                                             double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("confidence level must lie in (0, 1)");
  }
  if (!(variance >= 0.0)) throw InvalidArgument("confidence interval: negative variance");
  if (!(df > 0.0)) throw InvalidArgument("confidence interval: df must be positive");
  const double quantile = QuantileT(0.5 * (1.0 + level), df);
  const double half = quantile * std::sqrt(variance);
  return {q_bar - half, q_bar + half};
}

nlohmann::json CombinedInference::ToJson(std::string_view estimand) const {
  nlohmann::json j;
  if (!estimand.empty()) j["estimand"] = estimand;
  j["m"] = m;
  j["rule"] = RuleName(rule);
  j["q_bar"] = q_bar;
  j["u_bar"] = u_bar;
  j["b_m"] = b_m;
  j["variance"] = variance;
  j["df"] = std::isinf(df) ? nlohmann::json("inf") : nlohmann::json(df);
  j["level"] = level;
  j["ci"] = {lo, hi};
  return j;
}

CombinedInference Combine(std::span<const EstimateResult> results, VarianceRule rule,
                          double level) {
  const std::size_t m = results.size();
  if (m == 0) throw InvalidArgument("Combine: no estimates");
  if (rule == VarianceRule::kTp && m < 2) {
    throw InvalidArgument("combining rule tp requires m >= 2 copies");
  }
  std::vector<double> q;
  std::vector<double> u;
  for (const EstimateResult& r : results) {
    q.push_back(r.q);
    u.push_back(r.u);
  }
  CombinedInference out;
  out.m = m;
  out.rule = rule;
  out.level = level;
  out.q_bar = CombinePoint(q);
  out.u_bar = WithinVariance(u);
  out.b_m = m >= 2 ? BetweenVariance(q) : 0.0;
  out.variance = PooledVariance(out.u_bar, out.b_m, m, rule);
  out.df = DegreesFreedom(out.u_bar, out.b_m, m, rule);
  std::tie(out.lo, out.hi) = ConfidenceInterval(out.q_bar, out.variance, out.df, level);
  return out;
}

}  // namespace dipsynth
