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
//
// Shift-invariance (ESPRIT) frequency estimation on uniformly sampled data:
// spatial smoothing over sliding subarrays, forward-backward averaging,
// signal-subspace extraction, and a least-squares rotation solve. A
// zero-padded periodogram peak picker provides an independent cross-check.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "sbfdsim/constants.hpp"

namespace sbfdsim {

struct CovarianceMatrix {
  Eigen::MatrixXcd r;      // L x L, Hermitian PSD
  long n_snapshots = 0;    // windows x data snapshots averaged into r
};

struct PhaseEstimates {
  std::vector<double> phases;  // radians per sample step, ascending, in (-pi, pi]
};

/// Spatially smoothed, forward-backward averaged sample covariance.
///
/// Input columns are independent snapshots of an N-element series; each
/// contributes K = N - L + 1 sliding windows of length L. The accumulation
/// walks diagonals with a rolling update (cost ~ L*K + L^2 per snapshot
/// instead of L^2*K), which keeps long-subarray covariances affordable.
inline CovarianceMatrix smoothed_covariance(const Eigen::MatrixXcd& data,
                                            int subarray_len) {
  const int n = static_cast<int>(data.rows());
  const int s = static_cast<int>(data.cols());
  if (n == 0 || s == 0)
    throw std::invalid_argument("smoothed_covariance: data must be non-empty");
  if (subarray_len < 1)
    throw std::invalid_argument("smoothed_covariance: subarray_len must be >= 1");
  if (subarray_len > n)
    throw std::invalid_argument(
        "smoothed_covariance: subarray_len " + std::to_string(subarray_len) +
        " exceeds series length " + std::to_string(n));

  const int l = subarray_len;
  const int k = n - l + 1;
  Eigen::MatrixXcd rf = Eigen::MatrixXcd::Zero(l, l);
  for (int col = 0; col < s; ++col) {
    const auto d = data.col(col);
    // One diagonal at a time: c(j) = sum_k d[delta+j+k] conj(d[j+k]), with
    // c(j) obtained from c(j-1) by swapping one boundary product.
    for (int delta = 0; delta < l; ++delta) {
      std::complex<double> c(0.0, 0.0);
      for (int kk = 0; kk < k; ++kk) c += d(delta + kk) * std::conj(d(kk));
      rf(delta, 0) += c;
      for (int j = 1; j < l - delta; ++j) {
        c -= d(delta + j - 1) * std::conj(d(j - 1));
        c += d(delta + j - 1 + k) * std::conj(d(j - 1 + k));
        rf(delta + j, j) += c;
      }
    }
  }
  for (int a = 0; a < l; ++a)
    for (int b = a + 1; b < l; ++b) rf(a, b) = std::conj(rf(b, a));
  rf /= static_cast<double>(k) * static_cast<double>(s);

  // Forward-backward: average with the exchange-conjugated copy,
  // (J conj(R) J)[a,b] = conj(R[l-1-a, l-1-b]).
  Eigen::MatrixXcd r(l, l);
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b)
      r(a, b) = 0.5 * (rf(a, b) + std::conj(rf(l - 1 - a, l - 1 - b)));

  const double tr = r.trace().real();
  if (!std::isfinite(tr))
    throw std::runtime_error("smoothed_covariance: non-finite covariance");
  return {std::move(r), static_cast<long>(k) * s};
}

/// Phases of the dominant complex exponentials in a covariance matrix.
/// Returns model_order phases per sample step, ascending in (-pi, pi].
inline PhaseEstimates esprit_phases(const CovarianceMatrix& cov, int model_order) {
  const int l = static_cast<int>(cov.r.rows());
  if (l < 2 || cov.r.cols() != l)
    throw std::invalid_argument("esprit_phases: covariance must be square, >= 2x2");
  if (model_order < 1 || model_order > l - 1)
    throw std::invalid_argument("esprit_phases: model_order must be in [1, L-1]");
  const double tr = cov.r.trace().real();
  if (!std::isfinite(tr) || tr <= 0.0)
    throw std::runtime_error("esprit_phases: covariance trace must be positive");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov.r);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("esprit_phases: eigendecomposition failed");
  // Eigenvalues come back ascending; the signal subspace is the trailing
  // model_order columns.
  const Eigen::MatrixXcd us = eig.eigenvectors().rightCols(model_order);

  const Eigen::MatrixXcd upper = us.topRows(l - 1);
  const Eigen::MatrixXcd lower = us.bottomRows(l - 1);
  const Eigen::MatrixXcd psi =
      upper.completeOrthogonalDecomposition().solve(lower);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> rot(psi);
  if (rot.info() != Eigen::Success)
    throw std::runtime_error("esprit_phases: rotation eigendecomposition failed");

  PhaseEstimates est;
  est.phases.reserve(model_order);
  for (int t = 0; t < model_order; ++t) {
    double p = std::arg(rot.eigenvalues()(t));
    if (p <= -kPi) p += kTwoPi;
    est.phases.push_back(p);
  }
  std::sort(est.phases.begin(), est.phases.end());
  return est;
}

/// Zero-padded FFT peak picker over snapshot-averaged power. Greedy maxima
/// with a circular exclusion of 2*n_fft/N bins around each pick keep the
/// peaks distinct. Independent of the subspace path; used as an oracle.
inline PhaseEstimates periodogram_peaks(const Eigen::MatrixXcd& data,
                                        int n_peaks, int n_fft) {
  const int n = static_cast<int>(data.rows());
  const int s = static_cast<int>(data.cols());
  if (n == 0 || s == 0)
    throw std::invalid_argument("periodogram_peaks: data must be non-empty");
  if (n_peaks < 1)
    throw std::invalid_argument("periodogram_peaks: n_peaks must be >= 1");
  if (n_fft < 4 * n)
    throw std::invalid_argument("periodogram_peaks: n_fft must be >= 4x series length");

  Eigen::FFT<double> fft;
  std::vector<double> power(static_cast<std::size_t>(n_fft), 0.0);
  std::vector<std::complex<double>> in(static_cast<std::size_t>(n_fft));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n_fft));
  for (int col = 0; col < s; ++col) {
    std::fill(in.begin(), in.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = data(i, col);
    fft.fwd(out, in);
    for (int i = 0; i < n_fft; ++i) power[static_cast<std::size_t>(i)] += std::norm(out[static_cast<std::size_t>(i)]);
  }

  const int guard = 2 * n_fft / n;
  std::vector<bool> excluded(static_cast<std::size_t>(n_fft), false);
  std::vector<int> bins;
  for (int p = 0; p < n_peaks; ++p) {
    int best = -1;
    double best_power = 0.0;  // zero-power bins never qualify as peaks
    for (int i = 0; i < n_fft; ++i)
      if (!excluded[static_cast<std::size_t>(i)] && power[static_cast<std::size_t>(i)] > best_power) {
        best = i;
        best_power = power[static_cast<std::size_t>(i)];
      }
    if (best < 0)
      throw std::runtime_error("periodogram_peaks: found only " +
                               std::to_string(bins.size()) + " of " +
                               std::to_string(n_peaks) + " peaks");
    bins.push_back(best);
    for (int off = -guard; off <= guard; ++off) {
      int idx = (best + off) % n_fft;
      if (idx < 0) idx += n_fft;
      excluded[static_cast<std::size_t>(idx)] = true;
    }
  }

  PhaseEstimates est;
  est.phases.reserve(bins.size());
  for (int b : bins) {
    // Bin k of the forward transform responds to e^{+i 2 pi k nu / n_fft}.
    double p = kTwoPi * b / n_fft;
    p = std::fmod(p + kPi, kTwoPi);
    if (p <= 0.0) p += kTwoPi;
    est.phases.push_back(p - kPi);
  }
  std::sort(est.phases.begin(), est.phases.end());
  return est;
}

}  // namespace sbfdsim
