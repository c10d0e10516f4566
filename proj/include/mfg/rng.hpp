// Copyright 2026 The mfgsolve Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfg {

// Counter-based pseudo random generator (Philox 4x32, 10 rounds). Each draw
// is a pure function of (key, counter), so any path/step/slot combination can
// be generated independently and in any order. This is what makes sampling
// reproducible regardless of scheduling or worker count.
struct Philox4x32 {
  static constexpr std::uint32_t kW32A = 0x9E3779B9u;
  static constexpr std::uint32_t kW32B = 0xBB67AE85u;
  static constexpr std::uint32_t kM4x32A = 0xD2511F53u;
  static constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      if (round != 0) {
        key[0] += kW32A;
        key[1] += kW32B;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM4x32A) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM4x32B) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

// One logical random stream identified by (seed, path, stream). Draws consume
// consecutive slots; restarting a PathRng with the same identity replays the
// same sequence, independent of everything drawn for other paths.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path, std::uint32_t stream)
      : seed_(seed), id_((path << 8) | (stream & 0xffu)) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return uniform_at(slot_++); }

  // Standard normal via Box-Muller; one slot per draw.
  double gaussian() { return gaussian_at(slot_++); }

  // Fair sign in {-1, +1}.
  int sign() {
    const auto w = words(slot_++);
    return (w[0] & 1u) ? 1 : -1;
  }

  std::uint64_t slot() const { return slot_; }
  void seek(std::uint64_t slot) { slot_ = slot; }

  double uniform_at(std::uint64_t slot) const {
    const auto w = words(slot);
    return static_cast<double>(join(w[0], w[1]) >> 11) * 0x1.0p-53;
  }

  double gaussian_at(std::uint64_t slot) const {
    const auto w = words(slot);
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    const double u1 =
        (static_cast<double>(join(w[0], w[1]) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(join(w[2], w[3]) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<std::uint64_t>(lo) |
           (static_cast<std::uint64_t>(hi) << 32);
  }

  std::array<std::uint32_t, 4> words(std::uint64_t slot) const {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(slot),
        static_cast<std::uint32_t>(slot >> 32),
        static_cast<std::uint32_t>(id_),
        static_cast<std::uint32_t>(id_ >> 32)};
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32)};
    return Philox4x32::block(ctr, key);
  }

  std::uint64_t seed_ = 0;
  std::uint64_t id_ = 0;
  std::uint64_t slot_ = 0;
};

// Stream ids reserved by the library. Keeping them in one place guarantees
// different purposes never share counters.
enum class RngStream : std::uint32_t {
  kInitialState = 0,
  kNoise = 1,
  kQuadrature = 2,
  kSlicedDirections = 3,
  kScenario = 4,
};

inline PathRng make_rng(std::uint64_t seed, std::uint64_t path,
                        RngStream stream) {
  return PathRng(seed, path, static_cast<std::uint32_t>(stream));
}

}  // namespace mfg
