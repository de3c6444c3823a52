// SPDX-License-Identifier: Apache-2.0
//
// sbfdsim - link-level simulator for sub-band full-duplex cell-free
// massive MIMO joint communication and sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include "sbfdsim/constants.hpp"

namespace sbfdsim {

/// Purpose tag for derived random streams. Every (seed, trial, entity,
/// purpose) tuple owns an independent generator, so trials may execute in any
/// order or on any thread and still reproduce bit-identical draws.
enum class Stream : std::uint64_t {
  dl_waveform = 1,      // shared QPSK grids, one per trial (entity = 0)
  echo_phase = 2,       // per-trial echo phases, entity = AP id
  dl_noise = 3,         // receiver noise on DL segments, entity = AP id
  dl_interference = 4,  // residual SI / CLI draws, entity = AP id
  ul_channel = 5,       // UL small-scale fading, entity = UE id (APs in order)
  ul_symbols = 6,       // UE transmit symbols, entity = UE id
  ul_noise = 7,         // receiver noise on the UL segment, entity = AP id
  beam_jitter = 8,      // beam-angle perturbations, entity = AP id
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

}  // namespace detail

/// Counter-based stream derivation (documented scheme: master seed, trial
/// index, entity id, purpose tag folded through splitmix64).
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t trial,
                                   std::uint64_t entity, Stream purpose) {
  const std::uint64_t key =
      detail::mix(detail::mix(detail::mix(master_seed, trial), entity),
                  static_cast<std::uint64_t>(purpose));
  return std::mt19937_64{key};
}

/// Circularly-symmetric complex Gaussian with unit total variance.
inline std::complex<double> complex_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 0.70710678118654752440);
  const double re = dist(rng);
  const double im = dist(rng);
  return {re, im};
}

/// Uniform phase in [0, 2*pi).
inline double uniform_phase(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, kTwoPi);
  return dist(rng);
}

}  // namespace sbfdsim
