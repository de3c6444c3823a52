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

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "sbfdsim/constants.hpp"

namespace sbfdsim {

/// Frequency x time block of resource elements; base_sc is the absolute
/// subcarrier index of row 0 within the full carrier grid.
struct ResourceGrid {
  Eigen::MatrixXcd data;
  int base_sc = 0;
};

struct BeamWeights {
  Eigen::VectorXcd w;  // unit norm
};

/// Half-wavelength ULA response. Angles measured from boresight; the array
/// only serves the front half-plane.
inline Eigen::VectorXcd steering_vector(int n_antennas, double angle_rad) {
  if (n_antennas < 1)
    throw std::invalid_argument("steering_vector: n_antennas must be >= 1");
  if (!(std::abs(angle_rad) < kPi / 2))
    throw std::invalid_argument("steering_vector: angle must satisfy |angle| < pi/2");
  Eigen::VectorXcd a(n_antennas);
  const double step = kPi * std::sin(angle_rad);
  for (int k = 0; k < n_antennas; ++k)
    a(k) = std::polar(1.0, step * k);
  return a;
}

/// Sum of conjugated steering vectors toward every angle, normalized to unit
/// power. Degenerate combinations that cancel to (near) zero are rejected.
inline BeamWeights conjugate_beamformer(int n_antennas,
                                        const std::vector<double>& angles_rad) {
  if (angles_rad.empty())
    throw std::invalid_argument("conjugate_beamformer: need at least one angle");
  Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n_antennas);
  for (double a : angles_rad) w += steering_vector(n_antennas, a).conjugate();
  const double norm = w.norm();
  if (norm < 1e-12)
    throw std::runtime_error("conjugate_beamformer: beam weights cancel to zero");
  return {w / norm};
}

/// Transmit-side array gain toward an angle: plain (non-conjugated) dot
/// product of the steering vector with the weights. A single-angle conjugate
/// beam reaches |gain|^2 = n_antennas.
inline std::complex<double> array_gain(const Eigen::VectorXcd& a,
                                       const BeamWeights& bw) {
  if (a.size() != bw.w.size())
    throw std::invalid_argument("array_gain: dimension mismatch");
  return a.transpose() * bw.w;
}

/// Unit-power QPSK symbols (+-1 +-i)/sqrt(2), filled column-major so the
/// draw order is part of the determinism contract.
inline ResourceGrid generate_qpsk_grid(int n_subcarriers, int n_symbols,
                                       int base_sc, std::mt19937_64& rng) {
  if (n_subcarriers < 1 || n_symbols < 1)
    throw std::invalid_argument("generate_qpsk_grid: dimensions must be >= 1");
  ResourceGrid grid;
  grid.base_sc = base_sc;
  grid.data.resize(n_subcarriers, n_symbols);
  std::uniform_int_distribution<int> dist(0, 3);
  const double s = 1.0 / std::sqrt(2.0);
  for (int m = 0; m < n_symbols; ++m)
    for (int n = 0; n < n_subcarriers; ++n) {
      const int q = dist(rng);
      grid.data(n, m) = {q & 1 ? -s : s, q & 2 ? -s : s};
    }
  return grid;
}

/// Nearest QPSK constellation point by quadrant; ties resolve toward the
/// positive half-axes.
inline std::complex<double> qpsk_detect(std::complex<double> y) {
  const double s = 1.0 / std::sqrt(2.0);
  return {y.real() < 0.0 ? -s : s, y.imag() < 0.0 ? -s : s};
}

}  // namespace sbfdsim
