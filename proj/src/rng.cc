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

#include "dipsynth/rng.h"

#include <algorithm>
#include <bit>
#include <cmath>

#include "dipsynth/error.h"

namespace dipsynth {
namespace {

std::uint64_t SplitMix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Mix(std::uint64_t h, std::uint64_t v) {
  std::uint64_t x = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return SplitMix64(x);
}

}  // namespace

std::uint64_t HashStreamId(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL ^ parts.size();
  for (std::uint64_t p : parts) h = Mix(h, p);
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t x = Mix(Mix(0x6a09e667f3bcc909ULL, seed), stream_id);
  for (auto& s : state_) s = SplitMix64(x);
  // xoshiro must not start from the all-zero state.
  if (std::all_of(state_.begin(), state_.end(),
                  [](std::uint64_t s) { return s == 0; })) {
    state_[0] = 1;
  }
}

RngStream RngStream::Derive(std::initializer_list<std::uint64_t> parts) const {
  return RngStream(seed_, Mix(stream_id_, HashStreamId(parts)));
}

std::uint64_t RngStream::NextU64() {
  const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double RngStream::Uniform() {
  // 53 random bits centred in their cell: never exactly 0 or 1.
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::Uniform(double lo, double hi) {
  return lo + (hi - lo) * Uniform();
}

std::uint64_t RngStream::UniformInt(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("UniformInt: n must be positive");
  // Lemire's nearly-divisionless method.
  unsigned __int128 m = static_cast<unsigned __int128>(NextU64()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(NextU64()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::Normal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * Uniform() - 1.0;
    v = 2.0 * Uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  return u * f;
}

double RngStream::Exponential() { return -std::log(Uniform()); }

double RngStream::Laplace(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("Laplace: scale must be positive and finite");
  }
  const double u = Uniform() - 0.5;
  const double mag = -std::log1p(-2.0 * std::abs(u));
  return u < 0 ? -scale * mag : scale * mag;
}

double RngStream::Gamma(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InvalidArgument("Gamma: shape must be positive and finite");
  }
  if (shape < 1.0) {
    // G(a) = G(a + 1) * U^(1/a)
    const double g = Gamma(shape + 1.0);
    return g * std::pow(Uniform(), 1.0 / shape);
  }
  // Marsaglia and Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = Normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = Uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::size_t RngStream::Categorical(std::span<const double> cumulative) {
  if (cumulative.empty() || !(cumulative.back() > 0.0)) {
    throw InvalidArgument("Categorical: empty or zero-mass distribution");
  }
  const double target = Uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace dipsynth
