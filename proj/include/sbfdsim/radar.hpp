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
// Per-AP monostatic sensing chain: quotient grid, range and Doppler phase
// estimation per DL sub-band, least-squares range-Doppler pairing, fusion
// of the two sub-band estimates, and truth association.
//
// Sign conventions, fixed throughout: delay phase step -2*pi*scs*tau per
// subcarrier, Doppler phase step +2*pi*T_o*f_D per symbol, f_D = -2*rr*f_c/c
// with range rate rr > 0 receding.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sbfdsim/channel.hpp"
#include "sbfdsim/constants.hpp"
#include "sbfdsim/esprit.hpp"
#include "sbfdsim/rng.hpp"
#include "sbfdsim/scenario.hpp"
#include "sbfdsim/signal.hpp"

namespace sbfdsim {

/// Element-wise ratio Y/X of one DL segment; the radar observable.
struct QuotientGrid {
  Eigen::MatrixXcd f;       // subcarriers x symbols
  double scs_hz = 0.0;
  double sym_duration_s = 0.0;
  int base_sc = 0;
};

struct TargetEstimate {
  double range_m = 0.0;
  double range_rate_mps = 0.0;
  std::complex<double> amplitude{0.0, 0.0};
};

/// Phase step per subcarrier -> monostatic range, wrapped into the
/// unambiguous interval [0, c/(2*scs)).
inline double phase_to_range(double phase_rad, double scs_hz) {
  const double period = 1.0 / scs_hz;
  double tau = std::fmod(-phase_rad / (kTwoPi * scs_hz), period);
  if (tau < 0.0) tau += period;
  return 0.5 * kSpeedOfLight * tau;
}

inline double range_to_phase(double range_m, double scs_hz) {
  double p = std::fmod(-kTwoPi * scs_hz * (2.0 * range_m / kSpeedOfLight), kTwoPi);
  if (p <= -kPi) p += kTwoPi;
  if (p > kPi) p -= kTwoPi;
  return p;
}

/// Phase step per symbol -> range rate; |result| <= c/(4*f_c*T_o).
inline double phase_to_rate(double phase_rad, double sym_duration_s,
                            double carrier_hz) {
  const double doppler_hz = phase_rad / (kTwoPi * sym_duration_s);
  return -doppler_hz * kSpeedOfLight / (2.0 * carrier_hz);
}

inline double rate_to_phase(double rate_mps, double sym_duration_s,
                            double carrier_hz) {
  const double doppler_hz = -2.0 * rate_mps * carrier_hz / kSpeedOfLight;
  double p = std::fmod(kTwoPi * sym_duration_s * doppler_hz, kTwoPi);
  if (p <= -kPi) p += kTwoPi;
  if (p > kPi) p -= kTwoPi;
  return p;
}

/// Divides the received segment by the transmitted one. Unit-modulus X keeps
/// the additive noise statistics intact, so anything below |X| = 0.99 is
/// rejected as a misuse.
inline QuotientGrid quotient_grid(const ResourceGrid& y, const ResourceGrid& x,
                                  const ScenarioConfig& cfg) {
  if (y.data.rows() != x.data.rows() || y.data.cols() != x.data.cols())
    throw std::invalid_argument("quotient_grid: Y and X dimensions differ");
  if (y.base_sc != x.base_sc)
    throw std::invalid_argument("quotient_grid: Y and X subcarrier offsets differ");
  if ((x.data.cwiseAbs().array() < 0.99).any())
    throw std::invalid_argument("quotient_grid: X must be unit-modulus (|X| >= 0.99)");
  QuotientGrid q;
  q.f = y.data.cwiseQuotient(x.data);
  if (!q.f.allFinite())
    throw std::runtime_error("quotient_grid: non-finite quotient entries");
  q.scs_hz = cfg.scs_hz;
  q.sym_duration_s = cfg.symbol_duration_s();
  q.base_sc = x.base_sc;
  return q;
}

namespace detail {

/// Least-squares fit of amplitudes for a fixed range/Doppler assignment and
/// the resulting squared model-fit residual. gu/gv are the Gram matrices of
/// the range and Doppler atoms, c(i, j) the atom-data correlations, sigma the
/// candidate assignment (range atom i paired with Doppler atom sigma[i]).
inline double pairing_residual(const Eigen::MatrixXcd& gu,
                               const Eigen::MatrixXcd& gv,
                               const Eigen::MatrixXcd& c, double f_norm2,
                               const std::vector<int>& sigma,
                               Eigen::VectorXcd& alpha_out) {
  const int t = static_cast<int>(sigma.size());
  Eigen::MatrixXcd g(t, t);
  Eigen::VectorXcd b(t);
  for (int i = 0; i < t; ++i) {
    b(i) = c(i, sigma[static_cast<std::size_t>(i)]);
    for (int j = 0; j < t; ++j)
      g(i, j) = gu(i, j) * gv(sigma[static_cast<std::size_t>(i)],
                              sigma[static_cast<std::size_t>(j)]);
  }
  alpha_out = g.completeOrthogonalDecomposition().solve(b);
  const double res = f_norm2 - 2.0 * alpha_out.dot(b).real() +
                     alpha_out.dot(g * alpha_out).real();
  return res;
}

}  // namespace detail

/// Ranges and range rates of the dominant scatterers in one DL segment.
///
/// Range phases come from subcarrier-axis smoothing (symbols as snapshots),
/// Doppler phases from symbol-axis smoothing (subcarriers as snapshots).
/// The two independently sorted lists are then paired: every assignment is
/// scored by the least-squares fit of the rank-T model sum_t alpha_t *
/// a(tau_t) * b(f_D,t)^T to F, and the lowest-residual assignment wins
/// (exhaustive for T <= 6, greedy by correlation amplitude above).
/// Output is sorted by range, with the fitted complex amplitudes.
inline std::vector<TargetEstimate> estimate_subband(const QuotientGrid& q,
                                                    int model_order,
                                                    const ScenarioConfig& cfg) {
  if (model_order < 1)
    throw std::invalid_argument("estimate_subband: model_order must be >= 1");
  const int n = static_cast<int>(q.f.rows());
  const int m = static_cast<int>(q.f.cols());

  const CovarianceMatrix cov_r = smoothed_covariance(q.f, cfg.esprit_subarray_freq);
  const std::vector<double> phi_r = esprit_phases(cov_r, model_order).phases;
  const CovarianceMatrix cov_d =
      smoothed_covariance(q.f.transpose(), cfg.esprit_subarray_time);
  const std::vector<double> phi_d = esprit_phases(cov_d, model_order).phases;

  const int t = model_order;
  Eigen::MatrixXcd u(n, t), v(m, t);
  for (int i = 0; i < t; ++i) {
    for (int k = 0; k < n; ++k)
      u(k, i) = std::polar(1.0, phi_r[static_cast<std::size_t>(i)] * k);
    for (int k = 0; k < m; ++k)
      v(k, i) = std::polar(1.0, phi_d[static_cast<std::size_t>(i)] * k);
  }
  const Eigen::MatrixXcd gu = u.adjoint() * u;
  const Eigen::MatrixXcd gv = v.adjoint() * v;
  const Eigen::MatrixXcd c = u.adjoint() * q.f * v.conjugate();
  const double f_norm2 = q.f.squaredNorm();

  std::vector<int> sigma(static_cast<std::size_t>(t));
  Eigen::VectorXcd alpha;
  std::vector<int> best_sigma;
  Eigen::VectorXcd best_alpha;
  double best_res = std::numeric_limits<double>::infinity();

  if (t <= 6) {
    std::vector<int> perm(static_cast<std::size_t>(t));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      const double res =
          detail::pairing_residual(gu, gv, c, f_norm2, perm, alpha);
      if (res < best_res) {
        best_res = res;
        best_sigma = perm;
        best_alpha = alpha;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    // Greedy by correlation amplitude: repeatedly take the strongest
    // remaining (range atom, Doppler atom) pair.
    std::vector<bool> row_used(static_cast<std::size_t>(t), false);
    std::vector<bool> col_used(static_cast<std::size_t>(t), false);
    for (int pick = 0; pick < t; ++pick) {
      int bi = -1, bj = -1;
      double best_amp = -1.0;
      for (int i = 0; i < t; ++i) {
        if (row_used[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < t; ++j) {
          if (col_used[static_cast<std::size_t>(j)]) continue;
          const double a = std::abs(c(i, j));
          if (a > best_amp) {
            best_amp = a;
            bi = i;
            bj = j;
          }
        }
      }
      sigma[static_cast<std::size_t>(bi)] = bj;
      row_used[static_cast<std::size_t>(bi)] = true;
      col_used[static_cast<std::size_t>(bj)] = true;
    }
    best_res = detail::pairing_residual(gu, gv, c, f_norm2, sigma, best_alpha);
    best_sigma = sigma;
  }

  std::vector<TargetEstimate> out;
  out.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    TargetEstimate e;
    e.range_m = phase_to_range(phi_r[static_cast<std::size_t>(i)], q.scs_hz);
    e.range_rate_mps =
        phase_to_rate(phi_d[static_cast<std::size_t>(best_sigma[static_cast<std::size_t>(i)])],
                      q.sym_duration_s, cfg.carrier_hz);
    e.amplitude = best_alpha(i);
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(),
            [](const TargetEstimate& a, const TargetEstimate& b) {
              return a.range_m < b.range_m;
            });
  return out;
}

namespace detail {

/// Squared normalized range/rate distance on 10 m and 10 m/s scales.
inline double pair_cost(double r1, double v1, double r2, double v2) {
  const double dr = (r1 - r2) / 10.0;
  const double dv = (v1 - v2) / 10.0;
  return dr * dr + dv * dv;
}

/// Minimum-total-cost bijection between two equal-length lists under the
/// given pairwise cost, exhaustive over permutations (sizes <= 6) or greedy
/// beyond that. Returns sigma with sigma[i] = partner of entry i.
template <typename CostFn>
inline std::vector<int> min_cost_assignment(int t, const CostFn& cost) {
  std::vector<int> best(static_cast<std::size_t>(t));
  if (t <= 6) {
    std::vector<int> perm(static_cast<std::size_t>(t));
    std::iota(perm.begin(), perm.end(), 0);
    double best_total = std::numeric_limits<double>::infinity();
    std::vector<int> p = perm;
    do {
      double total = 0.0;
      for (int i = 0; i < t; ++i) total += cost(i, p[static_cast<std::size_t>(i)]);
      if (total < best_total) {
        best_total = total;
        best = p;
      }
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
  }
  std::vector<bool> row_used(static_cast<std::size_t>(t), false);
  std::vector<bool> col_used(static_cast<std::size_t>(t), false);
  for (int pick = 0; pick < t; ++pick) {
    int bi = -1, bj = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < t; ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < t; ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        const double cc = cost(i, j);
        if (cc < best_cost) {
          best_cost = cc;
          bi = i;
          bj = j;
        }
      }
    }
    best[static_cast<std::size_t>(bi)] = bj;
    row_used[static_cast<std::size_t>(bi)] = true;
    col_used[static_cast<std::size_t>(bj)] = true;
  }
  return best;
}

}  // namespace detail

/// Merges the estimates of the two DL sub-bands: minimum-cost matching in
/// normalized (range, rate) space, component-wise averaging of agreeing
/// pairs, and fallback to the lower sub-band's value when a pair disagrees
/// by more than 5 normalized units. Output is sorted by range, so it is
/// independent of either input's ordering.
inline std::vector<TargetEstimate> fuse_subbands(
    const std::vector<TargetEstimate>& lower,
    const std::vector<TargetEstimate>& upper) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("fuse_subbands: list lengths differ");
  const int t = static_cast<int>(lower.size());
  const std::vector<int> sigma = detail::min_cost_assignment(
      t, [&](int i, int j) {
        return detail::pair_cost(lower[static_cast<std::size_t>(i)].range_m,
                                 lower[static_cast<std::size_t>(i)].range_rate_mps,
                                 upper[static_cast<std::size_t>(j)].range_m,
                                 upper[static_cast<std::size_t>(j)].range_rate_mps);
      });
  std::vector<TargetEstimate> out;
  out.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    const TargetEstimate& lo = lower[static_cast<std::size_t>(i)];
    const TargetEstimate& up = upper[static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)])];
    const double cost = detail::pair_cost(lo.range_m, lo.range_rate_mps,
                                          up.range_m, up.range_rate_mps);
    if (cost > 25.0) {
      out.push_back(lo);
    } else {
      TargetEstimate e;
      e.range_m = 0.5 * (lo.range_m + up.range_m);
      e.range_rate_mps = 0.5 * (lo.range_rate_mps + up.range_rate_mps);
      e.amplitude = 0.5 * (lo.amplitude + up.amplitude);
      out.push_back(e);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const TargetEstimate& a, const TargetEstimate& b) {
              return a.range_m < b.range_m;
            });
  return out;
}

struct TargetError {
  int target_id = 0;  // index into the truth list
  double range_error_m = 0.0;
  double rate_error_mps = 0.0;
};

/// Assigns estimates to truths by the minimum-total-cost bijection and
/// returns signed (estimate - truth) errors per truth index. truth entries
/// are (range_m, range_rate_mps).
inline std::vector<TargetError> associate_and_error(
    const std::vector<TargetEstimate>& est,
    const std::vector<std::pair<double, double>>& truth) {
  if (est.size() != truth.size())
    throw std::invalid_argument("associate_and_error: list lengths differ");
  if (est.size() > 6)
    throw std::invalid_argument("associate_and_error: supports at most 6 targets");
  const int t = static_cast<int>(truth.size());
  // sigma[i] = estimate index assigned to truth i.
  const std::vector<int> sigma = detail::min_cost_assignment(
      t, [&](int i, int j) {
        return detail::pair_cost(truth[static_cast<std::size_t>(i)].first,
                                 truth[static_cast<std::size_t>(i)].second,
                                 est[static_cast<std::size_t>(j)].range_m,
                                 est[static_cast<std::size_t>(j)].range_rate_mps);
      });
  std::vector<TargetError> out;
  out.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    const TargetEstimate& e = est[static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)])];
    TargetError err;
    err.target_id = i;
    err.range_error_m = e.range_m - truth[static_cast<std::size_t>(i)].first;
    err.rate_error_mps = e.range_rate_mps - truth[static_cast<std::size_t>(i)].second;
    out.push_back(err);
  }
  return out;
}

/// Full sensing chain of one AP for one trial: jittered conjugate beam toward
/// the targets, echo synthesis per DL segment, quotient, per-segment
/// estimation, and fusion across segments. RNG streams derive from
/// (cfg.seed, trial, ap id), so trials and APs are order-independent.
inline std::vector<TargetEstimate> run_ap(const ScenarioConfig& cfg, int ap_index,
                                          const std::vector<ResourceGrid>& x_dl,
                                          int trial) {
  if (ap_index < 0 || ap_index >= static_cast<int>(cfg.aps.size()))
    throw std::invalid_argument("run_ap: ap_index out of range");
  if (cfg.targets.empty())
    throw std::invalid_argument("run_ap: scenario has no targets");
  const AccessPoint& ap = cfg.aps[static_cast<std::size_t>(ap_index)];

  auto rng_phase = make_stream(cfg.seed, trial, ap.id, Stream::echo_phase);
  auto rng_noise = make_stream(cfg.seed, trial, ap.id, Stream::dl_noise);
  auto rng_interf = make_stream(cfg.seed, trial, ap.id, Stream::dl_interference);

  std::vector<double> beam_angles;
  beam_angles.reserve(cfg.targets.size());
  for (const auto& tgt : cfg.targets)
    beam_angles.push_back(target_geometry(ap, tgt).bearing_rad);
  if (cfg.beam_angle_jitter_rad > 0.0) {
    auto rng_jitter = make_stream(cfg.seed, trial, ap.id, Stream::beam_jitter);
    std::normal_distribution<double> jitter(0.0, cfg.beam_angle_jitter_rad);
    const double lim = kPi / 2 - 1e-6;
    for (double& a : beam_angles)
      a = std::clamp(a + jitter(rng_jitter), -lim, lim);
  }
  const BeamWeights beam = conjugate_beamformer(ap.n_antennas, beam_angles);
  const std::vector<EchoParams> echoes = all_echo_params(cfg, ap, beam, rng_phase);

  const InterferenceSpec interf = interference_spec(cfg);
  const std::vector<ResourceGrid> ys = synthesize_dl_rx(
      cfg, ap_index, x_dl, echoes, interf, rng_noise, rng_interf);

  std::vector<TargetEstimate> fused;
  for (std::size_t s = 0; s < ys.size(); ++s) {
    const QuotientGrid q = quotient_grid(ys[s], x_dl[s], cfg);
    const std::vector<TargetEstimate> est =
        estimate_subband(q, cfg.model_order, cfg);
    fused = (s == 0) ? est : fuse_subbands(fused, est);
  }
  return fused;
}

}  // namespace sbfdsim
