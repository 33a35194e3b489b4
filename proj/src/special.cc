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

#include "dipsynth/special.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "dipsynth/error.h"

namespace dipsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Above this df the Cornish-Fisher expansion of the t quantile is accurate to
// well below 1e-12 and cheaper than inverting the incomplete beta.
constexpr double kLargeDf = 1e5;

// Acklam's rational approximation for the lower half, p in (0, 0.5].
double AcklamLower(double p) {
  static constexpr std::array<double, 6> a = {
      -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {
      -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {
      -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {
      7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00};
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Continued fraction for the incomplete beta (modified Lentz).
double BetaContinuedFraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("IncompleteBeta: continued fraction did not converge");
}

// I_x(a, b) with y = 1 - x supplied separately to avoid cancellation.
double IncompleteBetaXY(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * BetaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - front * BetaContinuedFraction(b, a, y) / b;
}

// Lower-tail t CDF for t <= 0, computed without cancellation.
double StudentTLowerTail(double t, double df) {
  const double t2 = t * t;
  const double denom = df + t2;
  return 0.5 * IncompleteBetaXY(0.5 * df, 0.5, df / denom, t2 / denom);
}

double StudentTPdf(double t, double df) {
  const double log_pdf = std::lgamma(0.5 * (df + 1.0)) -
                         std::lgamma(0.5 * df) -
                         0.5 * std::log(df * std::numbers::pi) -
                         0.5 * (df + 1.0) * std::log1p(t * t / df);
  return std::exp(log_pdf);
}

double CornishFisherT(double z, double df) {
  const double z2 = z * z;
  const double z3 = z2 * z;
  const double z5 = z3 * z2;
  const double z7 = z5 * z2;
  const double z9 = z7 * z2;
  const double g1 = (z3 + z) / 4.0;
  const double g2 = (5.0 * z5 + 16.0 * z3 + 3.0 * z) / 96.0;
  const double g3 = (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / 384.0;
  const double g4 = (79.0 * z9 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 -
                     945.0 * z) /
                    92160.0;
  const double inv = 1.0 / df;
  return z + inv * (g1 + inv * (g2 + inv * (g3 + inv * g4)));
}

// Lower-half t quantile, p in (0, 0.5].
double QuantileTLower(double p, double df) {
  if (p == 0.5) return 0.0;
  if (df == 1.0) return std::tan(std::numbers::pi * (p - 0.5));
  if (df == 2.0) return (2.0 * p - 1.0) / std::sqrt(2.0 * p * (1.0 - p));

  // Bracket [lo, hi] with F(lo) <= p <= F(hi) = 0.5.
  double hi = 0.0;
  double guess = CornishFisherT(QuantileNormal(p), std::max(df, 1.0));
  if (!(guess < 0.0) || !std::isfinite(guess)) guess = -1.0;
  double lo = guess;
  while (StudentTLowerTail(lo, df) > p) {
    hi = lo;
    lo *= 2.0;
    if (!std::isfinite(lo)) return -kInf;
  }
  double t = std::clamp(guess, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = StudentTLowerTail(t, df) - p;
    if (f > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    const double pdf = StudentTPdf(t, df);
    double next = pdf > 0.0 ? t - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-14 * std::max(1.0, std::abs(t))) return next;
    t = next;
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(t))) return t;
  }
  return t;
}

// Gauss-Legendre abscissae/weights on [-1, 1] (positive half).
struct GaussLegendre {
  std::array<double, 10> x;
  std::array<double, 10> w;
  int n;
};

constexpr GaussLegendre kGl6 = {
    {0.9324695142031522, 0.6612093864662647, 0.2386191860831970},
    {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
    3};
constexpr GaussLegendre kGl12 = {
    {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
     0.5873179542866171, 0.3678314989981802, 0.1252334085114692},
    {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
     0.2031674267230659, 0.2334925365383547, 0.2491470458134029},
    6};
constexpr GaussLegendre kGl20 = {
    {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
     0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
     0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
     0.07652652113349733},
    {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
     0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
     0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
     0.1527533871307259},
    10};

// P(X > h, Y > k), after Genz (2004).
double BvnUpper(double h, double k, double r) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (h == kInf || k == kInf) return 0.0;
  if (h == -kInf) return k == -kInf ? 1.0 : NormalCdf(-k);
  if (k == -kInf) return NormalCdf(-h);
  if (r == 0.0) return NormalCdf(-h) * NormalCdf(-k);

  const GaussLegendre& gl =
      std::abs(r) < 0.3 ? kGl6 : (std::abs(r) < 0.75 ? kGl12 : kGl20);
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (int i = 0; i < gl.n; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sign * gl.x[i]));
        bvn += gl.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return std::clamp(bvn * asr / kTwoPi + NormalCdf(-h) * NormalCdf(-k), 0.0,
                      1.0);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = 1.0 - r * r;
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -0.5 * (bs / as + hk);
    if (asr > -100.0) {
      bvn = a * std::exp(asr) *
            (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    }
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(kTwoPi) * NormalCdf(-b / a);
      bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a *= 0.5;
    double sum = 0.0;
    for (int i = 0; i < gl.n; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double xs = std::pow(a * (1.0 + sign * gl.x[i]), 2);
        const double asr_i = -0.5 * (bs / xs + hk);
        if (asr_i > -100.0) {
          const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
          const double rs = std::sqrt(1.0 - xs);
          const double ep =
              std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
          sum += gl.w[i] * std::exp(asr_i) * (sp - ep);
        }
      }
    }
    bvn = (a * sum - bvn) / kTwoPi;
  }
  if (r > 0.0) {
    bvn += NormalCdf(-std::max(h, k));
  } else if (h >= k) {
    bvn = -bvn;
  } else {
    const double span =
        h < 0.0 ? NormalCdf(k) - NormalCdf(h) : NormalCdf(-h) - NormalCdf(-k);
    bvn = span - bvn;
  }
  return std::clamp(bvn, 0.0, 1.0);
}

void CheckProbability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidArgument(std::string(what) + ": probability must lie in (0, 1)");
  }
}

}  // namespace

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double QuantileNormal(double prob) {
  CheckProbability(prob, "QuantileNormal");
  if (prob > 0.5) return -QuantileNormal(1.0 - prob);  // 1 - prob is exact here
  double x = AcklamLower(prob);
  // One Halley step against the erfc-based CDF.
  const double e = NormalCdf(x) - prob;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double IncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidArgument("IncompleteBeta: a and b must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw InvalidArgument("IncompleteBeta: x must lie in [0, 1]");
  }
  return IncompleteBetaXY(a, b, x, 1.0 - x);
}

double StudentTCdf(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("StudentTCdf: df must be positive");
  if (std::isnan(t)) throw InvalidArgument("StudentTCdf: t is NaN");
  if (std::isinf(df)) return NormalCdf(t);
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  if (t <= 0.0) return StudentTLowerTail(t, df);
  return 1.0 - StudentTLowerTail(-t, df);
}

double QuantileT(double prob, double df) {
  CheckProbability(prob, "QuantileT");
  if (!(df > 0.0)) throw InvalidArgument("QuantileT: df must be positive");
  if (std::isinf(df)) return QuantileNormal(prob);
  if (prob > 0.5) return -QuantileT(1.0 - prob, df);
  if (df > kLargeDf) return CornishFisherT(QuantileNormal(prob), df);
  return QuantileTLower(prob, df);
}

double BvnCdf(double x, double y, double rho) {
  if (std::isnan(x) || std::isnan(y) || !(std::abs(rho) <= 1.0)) {
    throw InvalidArgument("BvnCdf: requires |rho| <= 1 and non-NaN limits");
  }
  return BvnUpper(-x, -y, rho);
}

double BinaryCorrFromLatent(double p1, double p2, double latent_rho) {
  CheckProbability(p1, "BinaryCorrFromLatent");
  CheckProbability(p2, "BinaryCorrFromLatent");
  const double t1 = QuantileNormal(1.0 - p1);
  const double t2 = QuantileNormal(1.0 - p2);
  // P(Z1 > t1, Z2 > t2) = P(-Z1 <= -t1, -Z2 <= -t2).
  const double p11 = BvnCdf(-t1, -t2, latent_rho);
  return (p11 - p1 * p2) / std::sqrt(p1 * (1.0 - p1) * p2 * (1.0 - p2));
}

double LatentCorrForBinary(double p1, double p2, double binary_rho) {
  CheckProbability(p1, "LatentCorrForBinary");
  CheckProbability(p2, "LatentCorrForBinary");
  if (binary_rho == 0.0) return 0.0;
  auto residual = [&](double r) {
    return BinaryCorrFromLatent(p1, p2, r) - binary_rho;
  };
  double lo = -1.0;
  double hi = 1.0;
  const double f_lo = residual(lo);
  const double f_hi = residual(hi);
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw InvalidArgument(
        "LatentCorrForBinary: binary correlation is infeasible for the given "
        "marginal probabilities");
  }
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  double mid = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double f = residual(mid);
    if (f == 0.0) return mid;
    if (f < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15) break;
  }
  mid = 0.5 * (lo + hi);
  if (std::abs(residual(mid)) >= 1e-8) {
    throw NumericalError("LatentCorrForBinary: bisection did not converge");
  }
  return mid;
}

}  // namespace dipsynth
