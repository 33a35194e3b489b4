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

#ifndef DIPSYNTH_RNG_H_
#define DIPSYNTH_RNG_H_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>

namespace dipsynth {

// Mixes a sequence of integers into one 64-bit stream id. Used to give
// replication b, synthesizer s, copy i its own stream without any shared
// generator state.
std::uint64_t HashStreamId(std::initializer_list<std::uint64_t> parts);

// A seeded pseudo-random stream (xoshiro256** seeded through splitmix64).
//
// Two streams constructed from the same (seed, stream_id) produce identical
// sequences on every platform: all variate transforms are implemented here
// rather than delegated to <random> distributions, whose algorithms are
// implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream keyed by `parts`, independent of how much of this stream
  // has been consumed.
  RngStream Derive(std::initializer_list<std::uint64_t> parts) const;

  std::uint64_t NextU64();

  // Uniform on the open interval (0, 1).
  double Uniform();
  // Uniform on [lo, hi).
  double Uniform(double lo, double hi);
  // Uniform integer in [0, n). Requires n > 0.
  std::uint64_t UniformInt(std::uint64_t n);

  double Normal();
  double Exponential();
  // Laplace(0, scale); throws InvalidArgument unless scale > 0.
  double Laplace(double scale);
  // Gamma(shape, 1); throws InvalidArgument unless shape > 0.
  double Gamma(double shape);
  double ChiSquare(double df) { return 2.0 * Gamma(0.5 * df); }

  // Index drawn from a cumulative distribution (nondecreasing, last entry is
  // the total mass).
  std::size_t Categorical(std::span<const double> cumulative);

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_;
  std::optional<double> spare_normal_;
};

}  // namespace dipsynth

#endif  // DIPSYNTH_RNG_H_
