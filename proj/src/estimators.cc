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


#include "dipsynth/estimators.h"

#include <cmath>

#include <Eigen/Dense>

#include "dipsynth/error.h"

namespace dipsynth {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string NonEmpty(std::string_view s, std::string_view spec, const char* what) {
  s = Trim(s);
  if (s.empty()) {
    throw InvalidArgument("estimand '" + std::string(spec) + "': missing " + what);
  }
  return std::string(s);
}

const ColumnKind& KindOf(const Schema& schema, std::string_view column) {
  return schema[schema.RequireIndex(column)].kind;
}

void RequireNumeric(const Schema& schema, std::string_view column) {
  if (KindOf(schema, column).type() == ColumnKind::Type::kCategorical) {
    throw InvalidArgument("column '" + std::string(column) +
                          "' is categorical, not numeric");
  }
}

}  // namespace

Estimand ParseEstimand(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("estimand '" + std::string(spec) +
                          "': expected mean:COL, prop:COL=LEVEL or ols:Y~X1+X2#X");
  }
  const std::string_view kind = Trim(spec.substr(0, colon));
  const std::string_view body = spec.substr(colon + 1);
  if (kind == "mean") return MeanEstimand{NonEmpty(body, spec, "column")};
  if (kind == "prop") {
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("estimand '" + std::string(spec) + "': expected prop:COL=LEVEL");
    }
    return ProportionEstimand{NonEmpty(body.substr(0, eq), spec, "column"),
                              NonEmpty(body.substr(eq + 1), spec, "level")};
  }
  if (kind == "ols") {
    const auto tilde = body.find('~');
    if (tilde == std::string_view::npos) {
      throw InvalidArgument("estimand '" + std::string(spec) + "': expected ols:Y~X1+X2#X");
    }
    OlsEstimand ols;
    ols.response = NonEmpty(body.substr(0, tilde), spec, "response");
    std::string_view rhs = body.substr(tilde + 1);
    std::string_view selector;
    bool has_selector = false;
    if (const auto hash = rhs.find('#'); hash != std::string_view::npos) {
      selector = Trim(rhs.substr(hash + 1));
      rhs = rhs.substr(0, hash);
      has_selector = true;
    }
    while (true) {
      const auto plus = rhs.find('+');
      ols.regressors.push_back(NonEmpty(rhs.substr(0, plus), spec, "regressor"));
      if (plus == std::string_view::npos) break;
      rhs = rhs.substr(plus + 1);
    }
    if (!has_selector) {
      ols.coef_index = 1;
    } else if (selector == "intercept" || selector == "(Intercept)") {
      ols.coef_index = 0;
    } else {
      bool found = false;
      for (std::size_t k = 0; k < ols.regressors.size(); ++k) {
        if (ols.regressors[k] == selector) {
          ols.coef_index = k + 1;
          found = true;
          break;
        }
      }
      if (!found) {
        throw InvalidArgument("estimand '" + std::string(spec) + "': coefficient '" +
                              std::string(selector) + "' is not a regressor");
      }
    }
    return ols;
  }
  throw InvalidArgument("estimand '" + std::string(spec) + "': unknown kind '" +
                        std::string(kind) + "'");
}

std::string EstimandName(const Estimand& estimand) {
  if (const auto* m = std::get_if<MeanEstimand>(&estimand)) return "mean:" + m->column;
  if (const auto* p = std::get_if<ProportionEstimand>(&estimand)) {
    return "prop:" + p->column + "=" + p->level;
  }
  const auto& o = std::get<OlsEstimand>(estimand);
  std::string s = "ols:" + o.response + "~";
  for (std::size_t k = 0; k < o.regressors.size(); ++k) {
    if (k > 0) s += "+";
    s += o.regressors[k];
  }
  s += "#";
  s += o.coef_index == 0 ? std::string("intercept") : o.regressors[o.coef_index - 1];
  return s;
}

void CheckEstimand(const Estimand& estimand, const Schema& schema) {
  if (const auto* m = std::get_if<MeanEstimand>(&estimand)) {
    RequireNumeric(schema, m->column);
  } else if (const auto* p = std::get_if<ProportionEstimand>(&estimand)) {
    const ColumnKind& kind = KindOf(schema, p->column);
    if (kind.is_continuous()) {
      throw InvalidArgument("proportion of continuous column '" + p->column + "'");
    }
    if (!kind.LevelIndex(p->level)) {
      throw InvalidArgument("level '" + p->level + "' is not a level of column '" +
                            p->column + "'");
    }
  } else {
    const auto& o = std::get<OlsEstimand>(estimand);
    RequireNumeric(schema, o.response);
    for (const std::string& r : o.regressors) RequireNumeric(schema, r);
    if (o.coef_index > o.regressors.size()) {
      throw InvalidArgument("OLS coefficient index out of range");
    }
  }
}

EstimateResult EstimateMean(const Dataset& ds, std::string_view column) {
  RequireNumeric(ds.schema(), column);
  const Eigen::Index n = ds.rows();
  if (n < 2) throw InvalidArgument("EstimateMean: need at least 2 rows");
  const Eigen::VectorXd x = ds.column(ds.schema().RequireIndex(column));
  const double mean = x.mean();
  const double s2 = (x.array() - mean).square().sum() / static_cast<double>(n - 1);
  return {mean, s2 / static_cast<double>(n), static_cast<std::size_t>(n)};
}

EstimateResult EstimateProportion(const Dataset& ds, std::string_view column,
                                  std::string_view level) {
  CheckEstimand(ProportionEstimand{std::string(column), std::string(level)}, ds.schema());
  const std::size_t c = ds.schema().RequireIndex(column);
  const double target = static_cast<double>(*ds.schema()[c].kind.LevelIndex(level));
  const Eigen::Index n = ds.rows();
  if (n < 1) throw InvalidArgument("EstimateProportion: empty dataset");
  const double hits = (ds.cells().col(static_cast<Eigen::Index>(c)).array() == target).count();
  const double q = hits / static_cast<double>(n);
  return {q, q * (1.0 - q) / static_cast<double>(n), static_cast<std::size_t>(n)};
}

EstimateResult EstimateOls(const Dataset& ds, std::string_view response,
                           const std::vector<std::string>& regressors,
                           std::size_t coef_index) {
  const Schema& schema = ds.schema();
  RequireNumeric(schema, response);
  const Eigen::Index n = ds.rows();
  const Eigen::Index p = static_cast<Eigen::Index>(regressors.size()) + 1;
  if (coef_index >= static_cast<std::size_t>(p)) {
    throw InvalidArgument("EstimateOls: coefficient index out of range");
  }
  if (n <= p) throw InvalidArgument("EstimateOls: need more rows than coefficients");
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  for (Eigen::Index k = 1; k < p; ++k) {
    const std::string& name = regressors[static_cast<std::size_t>(k - 1)];
    RequireNumeric(schema, name);
    x.col(k) = ds.column(schema.RequireIndex(name));
  }
  const Eigen::VectorXd y = ds.column(schema.RequireIndex(response));

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) throw NumericalError("EstimateOls: design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const double rss = (y - x * beta).squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - p);

  // (X'X)^-1 = P R^-1 R^-T P^T, so its k-th diagonal entry is the squared norm
  // of the row of R^-1 at k's pivoted position.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const auto& perm = qr.colsPermutation().indices();
  Eigen::Index pos = 0;
  while (perm(pos) != static_cast<Eigen::Index>(coef_index)) ++pos;
  const double u = sigma2 * r_inv.row(pos).squaredNorm();
  return {beta(static_cast<Eigen::Index>(coef_index)), u, static_cast<std::size_t>(n)};
}

EstimateResult Estimate(const Dataset& ds, const Estimand& estimand) {
  if (const auto* m = std::get_if<MeanEstimand>(&estimand)) {
    return EstimateMean(ds, m->column);
  }
  if (const auto* p = std::get_if<ProportionEstimand>(&estimand)) {
    return EstimateProportion(ds, p->column, p->level);
  }
  const auto& o = std::get<OlsEstimand>(estimand);
  return EstimateOls(ds, o.response, o.regressors, o.coef_index);
}

}  // namespace dipsynth
