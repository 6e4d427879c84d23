/*
Copyright 2026 The diarl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <array>
#include <cstdint>

namespace diarl {

// xoshiro256** (Blackman & Vigna), seeded through splitmix64.
//
// Every stochastic choice in a session or benchmark draws from one of these,
// so a run is reproducible from its seed alone. The full 256-bit state is
// exported in checkpoints.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0);
  static Rng from_state(const State& state);

  std::uint64_t next();

  // Uniform integer in [0, bound) by Lemire's multiply-and-reject; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform();

  // Standard normal via the Marsaglia polar method. The spare deviate is
  // part of the generator state.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  const State& state() const { return s_; }
  bool has_spare() const { return has_spare_; }
  double spare() const { return spare_; }
  void set_spare(bool has, double value) {
    has_spare_ = has;
    spare_ = value;
  }

 private:
  State s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 step; advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace diarl
