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


// Data generators and evaluation metrics.

#include <cmath>
#include <limits>

#include "dipsynth/error.h"
#include "dipsynth/mvn.h"
#include "dipsynth/simlab.h"
#include "dipsynth/special.h"

namespace dipsynth {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Schema ContinuousSchema(std::initializer_list<std::tuple<const char*, double, double>> cols) {
  std::vector<Column> out;
  for (const auto& [name, lo, hi] : cols) {
    out.push_back({name, ColumnKind::Continuous(lo, hi)});
  }
  return Schema(std::move(out));
}

Eigen::MatrixXd Sim1Covariance() {
  Eigen::MatrixXd cov(3, 3);
  cov << 1.0, 0.8, 0.6,
         0.8, 1.0, 0.25,
         0.6, 0.25, 1.0;
  return cov;
}

void CheckN(std::size_t n) {
  if (n < 10) throw InvalidArgument("simulation generators need n >= 10");
}

}  // namespace

std::string_view SimulationName(Simulation sim) {
  switch (sim) {
    case Simulation::kSim1:
      return "sim1";
    case Simulation::kSim2:
      return "sim2";
    case Simulation::kSim3:
      return "sim3";
  }
  return "unknown";
}

Simulation ParseSimulation(std::string_view name) {
  if (name == "sim1" || name == "Sim1") return Simulation::kSim1;
  if (name == "sim2" || name == "Sim2") return Simulation::kSim2;
  if (name == "sim3" || name == "Sim3") return Simulation::kSim3;
  throw InvalidArgument("unknown simulation '" + std::string(name) +
                        "' (expected sim1, sim2 or sim3)");
}

Schema Sim1Schema() {
  return ContinuousSchema({{"y1", -5.0, 5.0}, {"y2", -5.0, 5.0}, {"y3", -5.0, 5.0}});
}

Schema Sim2Schema() {
  return ContinuousSchema({{"y1", -20.0, 70.0}, {"y2", -5.0, 5.0}, {"y3", 0.0, 15.0}});
}

Schema Sim3Schema() {
  return Schema({{"y1", ColumnKind::Binary()},
                 {"y2", ColumnKind::Binary()},
                 {"y3", ColumnKind::Binary()}});
}

Schema SimulationSchema(Simulation sim) {
  switch (sim) {
    case Simulation::kSim1:
      return Sim1Schema();
    case Simulation::kSim2:
      return Sim2Schema();
    case Simulation::kSim3:
      return Sim3Schema();
  }
  throw InvalidArgument("unknown simulation");
}

Truths SimulationTruths(Simulation sim) {
  switch (sim) {
    case Simulation::kSim1: {
      // Population regression of y1 on (y2, y3): Sigma_xx^-1 sigma_xy.
      const double det = 1.0 - 0.25 * 0.25;
      return {{"mean:y1", 0.0},
              {"mean:y2", 0.0},
              {"mean:y3", 0.0},
              {"ols:y1~y2+y3#intercept", 0.0},
              {"ols:y1~y2+y3#y2", (0.8 - 0.25 * 0.6) / det},
              {"ols:y1~y2+y3#y3", (0.6 - 0.25 * 0.8) / det}};
    }
    case Simulation::kSim2:
      return {{"mean:y1", 4.0},
              {"mean:y2", 0.0},
              {"mean:y3", 1.0},
              {"ols:y1~y2+y3#intercept", 1.0},
              {"ols:y1~y2+y3#y2", 1.0},
              {"ols:y1~y2+y3#y3", 3.0}};
    case Simulation::kSim3: {
      const Sim3Params params;
      Truths t;
      for (const char* c : {"y1", "y2", "y3"}) {
        t[std::string("prop:") + c + "=1"] = params.p;
        t[std::string("mean:") + c] = params.p;
      }
      return t;
    }
  }
  throw InvalidArgument("unknown simulation");
}

std::vector<std::string> DefaultEstimands(Simulation sim) {
  if (sim == Simulation::kSim3) return {"prop:y1=1", "prop:y2=1", "prop:y3=1"};
  return {"mean:y1", "mean:y2", "mean:y3", "ols:y1~y2+y3#y2", "ols:y1~y2+y3#y3"};
}

SimDraw GenSim1(RngStream& rng, std::size_t n) {
  CheckN(n);
  Eigen::MatrixXd cells =
      SampleMvn(rng, Eigen::VectorXd::Zero(3), Sim1Covariance(), static_cast<int>(n));
  return {Dataset::Clamped(Sim1Schema(), std::move(cells)),
          SimulationTruths(Simulation::kSim1)};
}

SimDraw GenSim2(RngStream& rng, std::size_t n, bool noise) {
  CheckN(n);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.25, 0.25, 1.0;
  const Eigen::MatrixXd latent =
      SampleMvn(rng, Eigen::VectorXd::Zero(2), cov, static_cast<int>(n));
  Eigen::MatrixXd cells(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double y2 = latent(i, 0);
    // 1 - Phi(u) == Phi(-u), which keeps precision in the upper tail.
    const double y3 = -std::log(NormalCdf(-latent(i, 1)));
    const double gamma = noise ? rng.Normal() : 0.0;
    cells(i, 0) = 1.0 + y2 + 3.0 * y3 + gamma;
    cells(i, 1) = y2;
    cells(i, 2) = y3;
  }
  return {Dataset::Clamped(Sim2Schema(), std::move(cells)),
          SimulationTruths(Simulation::kSim2)};
}

Sim3Latent Sim3LatentModel(const Sim3Params& params) {
  const double r12 = LatentCorrForBinary(params.p, params.p, params.rho12);
  const double r13 = LatentCorrForBinary(params.p, params.p, params.rho13);
  const double r23 = LatentCorrForBinary(params.p, params.p, params.rho23);
  Eigen::MatrixXd corr(3, 3);
  corr << 1.0, r12, r13,
          r12, 1.0, r23,
          r13, r23, 1.0;
  PdProjection pd = NearestCorrelationPd(corr);
  return {std::move(pd.matrix), pd.adjusted, QuantileNormal(1.0 - params.p)};
}

SimDraw GenSim3(RngStream& rng, std::size_t n, const Sim3Params& params) {
  CheckN(n);
  const Sim3Latent model = Sim3LatentModel(params);
  const Eigen::MatrixXd latent =
      SampleMvn(rng, Eigen::VectorXd::Zero(3), model.corr, static_cast<int>(n));
  Eigen::MatrixXd cells = (latent.array() > model.threshold).cast<double>().matrix();
  Truths truths;
  for (const char* c : {"y1", "y2", "y3"}) {
    truths[std::string("prop:") + c + "=1"] = params.p;
    truths[std::string("mean:") + c] = params.p;
  }
  return {Dataset(Sim3Schema(), std::move(cells)), std::move(truths)};
}

SimDraw Generate(Simulation sim, RngStream& rng, std::size_t n) {
  switch (sim) {
    case Simulation::kSim1:
      return GenSim1(rng, n);
    case Simulation::kSim2:
      return GenSim2(rng, n);
    case Simulation::kSim3:
      return GenSim3(rng, n);
  }
  throw InvalidArgument("unknown simulation");
}

double MetricBias(std::span<const double> estimates, double theta, bool relative) {
  if (estimates.empty()) throw InvalidArgument("MetricBias: no estimates");
  if (relative && theta == 0.0) {
    throw InvalidArgument("MetricBias: relative bias is undefined for theta = 0");
  }
  double sum = 0.0;
  for (double e : estimates) sum += relative ? (e - theta) / theta : e - theta;
  const double mean = sum / static_cast<double>(estimates.size());
  return relative ? 100.0 * mean : mean;
}

double MonteCarloVariance(std::span<const double> estimates) {
  if (estimates.size() < 2) throw InvalidArgument("MonteCarloVariance: needs B >= 2");
  double sum = 0.0;
  for (double e : estimates) sum += e;
  const double mean = sum / static_cast<double>(estimates.size());
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  return ss / static_cast<double>(estimates.size() - 1);
}

double MetricRab(std::span<const double> var_estimates,
                 std::span<const double> point_estimates) {
  if (var_estimates.size() != point_estimates.size()) {
    throw InvalidArgument("MetricRab: size mismatch");
  }
  const double v_mc = MonteCarloVariance(point_estimates);
  if (v_mc == 0.0) throw InvalidArgument("MetricRab: Monte Carlo variance is 0");
  double sum = 0.0;
  for (double v : var_estimates) sum += v;
  return 100.0 * (sum / static_cast<double>(var_estimates.size())) / v_mc;
}

double MetricCoverage(std::span<const std::pair<double, double>> intervals, double theta) {
  if (intervals.empty()) return kNaN;
  std::size_t hits = 0;
  for (const auto& [lo, hi] : intervals) {
    if (lo <= theta && theta <= hi) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(intervals.size());
}

}  // namespace dipsynth
