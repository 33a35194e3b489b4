#!/usr/bin/env python3
# Copyright 2026 The dipsynth Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Computes reference values with mpmath at 50 digits and writes them as a
C++ header. The C++ tests compare against this frozen header; rerun only to
add new reference points:

    python3 tools/oracles/derive_oracles.py > tests/oracle_values.h
"""

import mpmath as mp

mp.mp.dps = 50


def norm_ppf(p):
    return mp.sqrt(2) * mp.erfinv(2 * mp.mpf(p) - 1)


def norm_cdf(x):
    return mp.ncdf(x)


def t_cdf(t, df):
    t = mp.mpf(t)
    df = mp.mpf(df)
    x = df / (df + t * t)
    tail = mp.betainc(df / 2, mp.mpf(1) / 2, 0, x, regularized=True) / 2
    return 1 - tail if t > 0 else tail


def t_ppf(p, df):
    p = mp.mpf(p)
    guess = norm_ppf(p)
    return mp.findroot(lambda t: t_cdf(t, df) - p, guess, tol=mp.mpf(10) ** -40)


def bvn_cdf(x, y, rho):
    x, y, rho = mp.mpf(x), mp.mpf(y), mp.mpf(rho)
    if abs(rho) == 1:
        return norm_cdf(min(x, y)) if rho > 0 else max(0, norm_cdf(x) + norm_cdf(y) - 1)
    s = mp.sqrt(1 - rho * rho)
    f = lambda t: mp.npdf(t) * norm_cdf((y - rho * t) / s)
    return mp.quad(f, [-mp.inf, min(x, 0), x])


def binary_corr(p1, p2, latent):
    p1, p2 = mp.mpf(p1), mp.mpf(p2)
    t1 = norm_ppf(1 - p1)
    t2 = norm_ppf(1 - p2)
    # P(Z1 > t1, Z2 > t2) = Phi2(-t1, -t2; rho)
    p11 = bvn_cdf(-t1, -t2, latent)
    return (p11 - p1 * p2) / mp.sqrt(p1 * (1 - p1) * p2 * (1 - p2))


def latent_for(p1, p2, target):
    target = mp.mpf(target)
    return mp.findroot(lambda r: binary_corr(p1, p2, r) - target, mp.mpf(target),
                       tol=mp.mpf(10) ** -30)


def emit(name, value):
    print(f"inline constexpr double {name} = {mp.nstr(value, 20, strip_zeros=False)};")


LICENSE = """// Copyright 2026 The dipsynth Authors
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
"""


def main():
    print(LICENSE)
    print("// Generated by tools/oracles/derive_oracles.py (mpmath, 50 digits).")
    print("// Do not edit by hand.")
    print()
    print("#ifndef DIPSYNTH_TESTS_ORACLE_VALUES_H_")
    print("#define DIPSYNTH_TESTS_ORACLE_VALUES_H_")
    print()
    print("namespace dipsynth::oracle {")
    print()
    print("struct Point2 { double a, b, value; };")
    print("struct Point3 { double a, b, c, value; };")
    print()

    normal_ps = ["1e-12", "1e-6", "0.001", "0.025", "0.1", "0.3", "0.5", "0.7",
                 "0.9", "0.975", "0.999", "0.999999"]
    print("inline constexpr Point2 kNormalQuantile[] = {")
    for p in normal_ps:
        print(f"    {{{p}, 0, {mp.nstr(norm_ppf(mp.mpf(p)), 20)}}},")
    print("};")
    print()

    t_points = [("0.975", "1"), ("0.975", "2"), ("0.975", "2.5"), ("0.975", "4"),
                ("0.975", "30"), ("0.975", "144"), ("0.975", "161604"),
                ("0.975", "1e6"), ("0.9", "3.7"), ("0.6", "7"), ("0.999", "5"),
                ("0.001", "10"), ("0.025", "4"), ("0.995", "0.5"), ("0.75", "1.5")]
    print("inline constexpr Point2 kStudentTQuantile[] = {  // {prob, df, t}")
    for p, df in t_points:
        print(f"    {{{p}, {df}, {mp.nstr(t_ppf(p, df), 20)}}},")
    print("};")
    print()

    tc_points = [("-3", "2"), ("0.5", "1"), ("1.96", "4"), ("2.5", "12.3"), ("-0.1", "100")]
    print("inline constexpr Point2 kStudentTCdf[] = {  // {t, df, cdf}")
    for t, df in tc_points:
        print(f"    {{{t}, {df}, {mp.nstr(t_cdf(t, df), 20)}}},")
    print("};")
    print()

    ib_points = [("2", "3", "0.4"), ("0.5", "0.5", "0.1"), ("10", "1.5", "0.95"),
                 ("200", "0.5", "0.999"), ("3.3", "7.1", "0.02")]
    print("inline constexpr Point3 kIncompleteBeta[] = {  // {a, b, x, I_x(a,b)}")
    for a, b, x in ib_points:
        v = mp.betainc(mp.mpf(a), mp.mpf(b), 0, mp.mpf(x), regularized=True)
        print(f"    {{{a}, {b}, {x}, {mp.nstr(v, 20)}}},")
    print("};")
    print()

    bvn_points = [("0", "0", "0"), ("0", "0", "0.5"), ("1", "-0.5", "0.3"),
                  ("-1.2", "0.7", "-0.6"), ("0.25", "0.25", "0.95"),
                  ("2", "1.5", "-0.99"), ("-2", "-2", "0.8"), ("0.3", "-0.2", "0.999"),
                  ("-0.253347103", "-0.253347103", "0.7"), ("1.1", "0.4", "-0.3")]
    print("inline constexpr Point3 kBvnCdf[] = {  // {x, y, rho, P}")
    for x, y, r in bvn_points:
        print(f"    {{{x}, {y}, {r}, {mp.nstr(bvn_cdf(x, y, r), 20)}}},")
    print("};")
    print()

    print("// Latent correlation giving binary correlation rho_b at p1 = p2 = 0.6.")
    emit("kLatentFor06", latent_for("0.6", "0.6", "0.6"))
    emit("kLatentFor02", latent_for("0.6", "0.6", "0.2"))
    emit("kLatentAsym", latent_for("0.3", "0.8", "0.25"))
    emit("kBinaryFromLatentHalf", binary_corr("0.6", "0.6", "0.5"))
    print()

    print("// Determinant of the latent matrix with entries (0.6, 0.6, 0.2) mapped;")
    print("// negative, so that target is not reachable exactly.")
    a = latent_for("0.6", "0.6", "0.6")
    c = latent_for("0.6", "0.6", "0.2")
    emit("kSim3LatentDet", 1 - 2 * a ** 2 - c ** 2 + 2 * a * a * c)
    print()

    print("// Population regression of y1 on (y2, y3) in the first simulation.")
    det = mp.mpf(1) - mp.mpf("0.25") ** 2
    emit("kSim1Beta2", (mp.mpf("0.8") - mp.mpf("0.25") * mp.mpf("0.6")) / det)
    emit("kSim1Beta3", (mp.mpf("0.6") - mp.mpf("0.25") * mp.mpf("0.8")) / det)
    print()

    print("// Two-candidate softmax with scores {0, 1}, sensitivity 1, epsilon 2.")
    emit("kSoftmaxBest", mp.e / (mp.e + 1))
    print()

    print("// Confidence-interval half widths.")
    emit("kZ975", norm_ppf("0.975"))
    emit("kT975Df4", t_ppf("0.975", 4))
    emit("kT975Df161604", t_ppf("0.975", 161604))
    print()

    print("// Combining five estimates q with within variances u.")
    qs = [mp.mpf(v) for v in ("1.0", "1.2", "0.9", "1.1", "1.3")]
    us = [mp.mpf(v) for v in ("0.04", "0.05", "0.045", "0.05", "0.055")]
    m = len(qs)
    qbar = sum(qs) / m
    ubar = sum(us) / m
    b = sum((q - qbar) ** 2 for q in qs) / (m - 1)
    tp = b / m + ubar
    df = (m - 1) * (1 + m * ubar / b) ** 2
    half = t_ppf("0.975", df) * mp.sqrt(tp)
    emit("kCombQBar", qbar)
    emit("kCombUBar", ubar)
    emit("kCombB", b)
    emit("kCombTp", tp)
    emit("kCombTs", ubar * (1 + mp.mpf(1) / m))
    emit("kCombTsPpd", ubar * (1 + mp.mpf(2) / m))
    emit("kCombDf", df)
    emit("kCombTpLo", qbar - half)
    emit("kCombTpHi", qbar + half)
    emit("kCombTsLo", qbar - norm_ppf("0.975") * mp.sqrt(ubar * (1 + mp.mpf(1) / m)))
    print()

    print("// Least squares of y on (1, x, z) for a six-row design.")
    xs = [mp.mpf(v) for v in (1, 2, 3, 4, 5, 6)]
    zs = [mp.mpf(v) for v in (2, 1, 4, 3, 6, 5)]
    ys = [mp.mpf(v) for v in ("1.1", "1.9", "3.2", "3.8", "5.3", "5.9")]
    X = mp.matrix([[1, x, z] for x, z in zip(xs, zs)])
    Y = mp.matrix(ys)
    xtx_inv = (X.T * X) ** -1
    beta = xtx_inv * (X.T * Y)
    resid = Y - X * beta
    sigma2 = sum(r ** 2 for r in resid) / (len(ys) - 3)
    for k, name in enumerate(("Intercept", "X", "Z")):
        emit("kOlsBeta" + name, beta[k])
        emit("kOlsVar" + name, sigma2 * xtx_inv[k, k])
    print()

    print("// E|X| and Var X of Laplace(b) are b and 2 b^2; Exp(1) skewness is 2.")
    emit("kExpSkewness", mp.mpf(2))
    print()
    print("}  // namespace dipsynth::oracle")
    print()
    print("#endif  // DIPSYNTH_TESTS_ORACLE_VALUES_H_")


if __name__ == "__main__":
    main()
