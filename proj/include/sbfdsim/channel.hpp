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
// Post-combining frequency-domain channel models. All powers are relative
// to unit-variance receiver noise per resource element, so SNR and INR
// knobs translate directly into amplitudes. Beamforming gains are folded
// into the echo amplitudes up front; synthesis itself is array-agnostic.

#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sbfdsim/constants.hpp"
#include "sbfdsim/rng.hpp"
#include "sbfdsim/scenario.hpp"
#include "sbfdsim/signal.hpp"

namespace sbfdsim {

/// One target echo after transmit beamforming and receive combining.
struct EchoParams {
  double delay_s = 0.0;     // two-way propagation delay
  double doppler_hz = 0.0;  // negative for receding targets
  std::complex<double> amp{0.0, 0.0};
};

/// Interference knobs, separated from the full config so synthesis can be
/// driven with ablated settings. si_inr_db may be -inf (off) but never NaN
/// or +inf.
struct InterferenceSpec {
  double si_inr_db = -std::numeric_limits<double>::infinity();
  CliMode cli_mode = CliMode::off;
  double cli_suppression_db = 0.0;

  bool si_enabled() const { return std::isfinite(si_inr_db); }
};

inline InterferenceSpec interference_spec(const ScenarioConfig& cfg) {
  return {cfg.residual_si_inr_db, cfg.cli_mode, cfg.cli_suppression_db};
}

/// Echo SNR calibration: a unit-gain target at ref_distance_m produces this
/// amplitude over unit noise, i.e. per-element SNR = snr_db.
inline double ref_amplitude(const ScenarioConfig& cfg) {
  return std::pow(10.0, cfg.snr_db / 20.0);
}

/// Echo parameters for one AP/target pair under the given beam. The random
/// draw is the uniform bulk phase; everything else is geometry. Both the
/// transmit and the receive side use the same weights (monostatic).
inline EchoParams echo_params(const ScenarioConfig& cfg, const AccessPoint& ap,
                              const Target& tgt, const BeamWeights& beam,
                              std::mt19937_64& rng_phase) {
  const TargetGeometry geo = target_geometry(ap, tgt);
  const Eigen::VectorXcd a = steering_vector(ap.n_antennas, geo.bearing_rad);
  const std::complex<double> g_tx = array_gain(a, beam);
  const std::complex<double> g_rx = g_tx;
  const double spread = cfg.ref_distance_m / geo.range_m;
  EchoParams e;
  e.delay_s = 2.0 * geo.range_m / kSpeedOfLight;
  e.doppler_hz = -2.0 * geo.range_rate_mps * cfg.carrier_hz / kSpeedOfLight;
  e.amp = ref_amplitude(cfg) * tgt.rcs_scale * spread * spread * g_tx * g_rx *
          std::polar(1.0, uniform_phase(rng_phase));
  return e;
}

/// Same, with the beam derived from the true bearings of every target in the
/// scenario (one joint conjugate beam per AP).
inline EchoParams echo_params(const ScenarioConfig& cfg, const AccessPoint& ap,
                              const Target& tgt, std::mt19937_64& rng_phase) {
  if (cfg.targets.empty())
    throw std::invalid_argument("echo_params: scenario has no targets");
  std::vector<double> angles;
  angles.reserve(cfg.targets.size());
  for (const auto& t : cfg.targets)
    angles.push_back(target_geometry(ap, t).bearing_rad);
  const BeamWeights beam = conjugate_beamformer(ap.n_antennas, angles);
  return echo_params(cfg, ap, tgt, beam, rng_phase);
}

/// Echoes of every target at one AP under a shared beam; phase draws consume
/// rng_phase in target order.
inline std::vector<EchoParams> all_echo_params(const ScenarioConfig& cfg,
                                               const AccessPoint& ap,
                                               const BeamWeights& beam,
                                               std::mt19937_64& rng_phase) {
  if (cfg.targets.empty())
    throw std::invalid_argument("all_echo_params: scenario has no targets");
  std::vector<EchoParams> echoes;
  echoes.reserve(cfg.targets.size());
  for (const auto& t : cfg.targets)
    echoes.push_back(echo_params(cfg, ap, t, beam, rng_phase));
  return echoes;
}

/// Residual self-interference and cross-link interference on one DL segment,
/// relative to unit noise.
///
/// SI is white CSCG at 10^(si_inr_db/10) per element (-inf disables it).
/// Structured CLI adds delayed copies of the shared waveform from every other
/// AP: one-way delay, zero Doppler, deterministic phase, amplitude
/// ref * (d_ref/d) * 10^(-supp/20), so it aliases to an apparent range of
/// half the AP separation. Gaussian CLI replaces the copies with white noise
/// at the same aggregate power.
inline Eigen::MatrixXcd interference_grid(const ScenarioConfig& cfg, int ap_index,
                                          const ResourceGrid& x_dl,
                                          const InterferenceSpec& interf,
                                          std::mt19937_64& rng_interf) {
  if (ap_index < 0 || ap_index >= static_cast<int>(cfg.aps.size()))
    throw std::invalid_argument("interference_grid: ap_index out of range");
  if (std::isnan(interf.si_inr_db) ||
      interf.si_inr_db == std::numeric_limits<double>::infinity())
    throw std::invalid_argument("interference_grid: si_inr_db must be finite or -inf");
  if (!(interf.cli_suppression_db >= 0.0))
    throw std::invalid_argument("interference_grid: cli_suppression_db must be >= 0");

  const int n_sc = static_cast<int>(x_dl.data.rows());
  const int n_sym = static_cast<int>(x_dl.data.cols());
  Eigen::MatrixXcd grid = Eigen::MatrixXcd::Zero(n_sc, n_sym);

  if (interf.si_enabled()) {
    const double si_amp = std::pow(10.0, interf.si_inr_db / 20.0);
    for (int m = 0; m < n_sym; ++m)
      for (int n = 0; n < n_sc; ++n) grid(n, m) += si_amp * complex_normal(rng_interf);
  }

  if (interf.cli_mode == CliMode::off || cfg.aps.size() < 2) return grid;

  const AccessPoint& victim = cfg.aps[static_cast<std::size_t>(ap_index)];
  if (interf.cli_mode == CliMode::structured) {
    for (std::size_t j = 0; j < cfg.aps.size(); ++j) {
      if (static_cast<int>(j) == ap_index) continue;
      const AccessPoint& src = cfg.aps[j];
      const double d = std::hypot(src.x - victim.x, src.y - victim.y);
      const double amp = ref_amplitude(cfg) * (cfg.ref_distance_m / d) *
                         std::pow(10.0, -interf.cli_suppression_db / 20.0);
      const double tau = d / kSpeedOfLight;
      for (int n = 0; n < n_sc; ++n) {
        const std::complex<double> u =
            std::polar(amp, -kTwoPi * (x_dl.base_sc + n) * cfg.scs_hz * tau);
        for (int m = 0; m < n_sym; ++m) grid(n, m) += u * x_dl.data(n, m);
      }
    }
  } else {  // CliMode::gaussian
    double agg_power = 0.0;
    for (std::size_t j = 0; j < cfg.aps.size(); ++j) {
      if (static_cast<int>(j) == ap_index) continue;
      const AccessPoint& src = cfg.aps[j];
      const double d = std::hypot(src.x - victim.x, src.y - victim.y);
      const double a = ref_amplitude(cfg) * (cfg.ref_distance_m / d) *
                       std::pow(10.0, -interf.cli_suppression_db / 20.0);
      agg_power += a * a;
    }
    const double amp = std::sqrt(agg_power);
    for (int m = 0; m < n_sym; ++m)
      for (int n = 0; n < n_sc; ++n) grid(n, m) += amp * complex_normal(rng_interf);
  }
  return grid;
}

/// Received monostatic DL segment after combining: each echo applies its
/// delay ramp across subcarriers and Doppler ramp across symbols to the
/// transmitted grid, then interference and unit CSCG noise are added.
inline ResourceGrid synthesize_dl_rx(const ScenarioConfig& cfg, int ap_index,
                                     const ResourceGrid& x_dl,
                                     const std::vector<EchoParams>& echoes,
                                     const InterferenceSpec& interf,
                                     std::mt19937_64& rng_noise,
                                     std::mt19937_64& rng_interf,
                                     bool with_noise = true) {
  const int n_sc = static_cast<int>(x_dl.data.rows());
  const int n_sym = static_cast<int>(x_dl.data.cols());
  if (n_sc == 0 || n_sym == 0)
    throw std::invalid_argument("synthesize_dl_rx: empty transmit grid");

  ResourceGrid y;
  y.base_sc = x_dl.base_sc;
  y.data = Eigen::MatrixXcd::Zero(n_sc, n_sym);

  const double t_o = cfg.symbol_duration_s();
  for (const EchoParams& e : echoes) {
    Eigen::VectorXcd u(n_sc), v(n_sym);
    for (int n = 0; n < n_sc; ++n)
      u(n) = std::polar(1.0, -kTwoPi * (x_dl.base_sc + n) * cfg.scs_hz * e.delay_s);
    for (int m = 0; m < n_sym; ++m)
      v(m) = std::polar(1.0, kTwoPi * m * t_o * e.doppler_hz);
    y.data.noalias() += e.amp * (u * v.transpose()).cwiseProduct(x_dl.data);
  }

  y.data += interference_grid(cfg, ap_index, x_dl, interf, rng_interf);

  if (with_noise && cfg.noise_enabled)
    for (int m = 0; m < n_sym; ++m)
      for (int n = 0; n < n_sc; ++n) y.data(n, m) += complex_normal(rng_noise);
  return y;
}

/// All DL segments at once. Grids must line up with the DL sub-bands of the
/// scenario's pattern, in order; noise and interference streams are consumed
/// segment by segment.
inline std::vector<ResourceGrid> synthesize_dl_rx(
    const ScenarioConfig& cfg, int ap_index,
    const std::vector<ResourceGrid>& x_dl_segments,
    const std::vector<EchoParams>& echoes, const InterferenceSpec& interf,
    std::mt19937_64& rng_noise, std::mt19937_64& rng_interf,
    bool with_noise = true) {
  const SubbandMap map = build_map(parse_pattern(cfg.pattern));
  if (x_dl_segments.size() != map.dl_segments.size())
    throw std::invalid_argument("synthesize_dl_rx: expected " +
                                std::to_string(map.dl_segments.size()) +
                                " DL segment grids, got " +
                                std::to_string(x_dl_segments.size()));
  std::vector<ResourceGrid> out;
  out.reserve(x_dl_segments.size());
  for (std::size_t s = 0; s < x_dl_segments.size(); ++s) {
    const ScRange& seg = map.dl_segments[s];
    const ResourceGrid& x = x_dl_segments[s];
    if (x.base_sc != seg.begin || x.data.rows() != seg.length() ||
        x.data.cols() != cfg.n_symbols)
      throw std::invalid_argument("synthesize_dl_rx: grid " + std::to_string(s) +
                                  " does not match its DL segment");
    out.push_back(synthesize_dl_rx(cfg, ap_index, x, echoes, interf, rng_noise,
                                   rng_interf, with_noise));
  }
  return out;
}

/// Rayleigh uplink channel to one AP: i.i.d. CN(0, beta) per antenna with
/// distance-law beta = (d_ref/d)^3.67.
inline Eigen::VectorXcd ul_channel(const ScenarioConfig& cfg,
                                   const UserEquipment& ue, const AccessPoint& ap,
                                   std::mt19937_64& rng) {
  const double d = std::hypot(ue.x - ap.x, ue.y - ap.y);
  if (d < 1e-9)
    throw std::invalid_argument("ul_channel: UE and AP are co-located");
  const double beta = std::pow(cfg.ref_distance_m / d, 3.67);
  const double scale = std::sqrt(beta);
  Eigen::VectorXcd h(ap.n_antennas);
  for (int p = 0; p < ap.n_antennas; ++p) h(p) = scale * complex_normal(rng);
  return h;
}

/// Per-antenna received UL grids: superposition of every UE's symbols scaled
/// by sqrt(tx_power) and its channel coefficient, plus unit noise.
/// symbols[u] is UE u's grid over the UL subcarriers (cfg.ues order);
/// channels[u] is that UE's vector toward this AP.
inline std::vector<Eigen::MatrixXcd> synthesize_ul_rx(
    const ScenarioConfig& cfg, const AccessPoint& ap,
    const std::vector<Eigen::MatrixXcd>& symbols,
    const std::vector<Eigen::VectorXcd>& channels, std::mt19937_64& rng_noise,
    bool with_noise = true) {
  if (symbols.size() != channels.size())
    throw std::invalid_argument("synthesize_ul_rx: symbols/channels size mismatch");
  if (symbols.size() > cfg.ues.size())
    throw std::invalid_argument("synthesize_ul_rx: more symbol grids than UEs");

  int n_sc = 0, n_sym = 0;
  if (!symbols.empty()) {
    n_sc = static_cast<int>(symbols[0].rows());
    n_sym = static_cast<int>(symbols[0].cols());
  } else {
    const SubbandMap map = build_map(parse_pattern(cfg.pattern));
    for (const auto& r : map.ul_segments) n_sc += r.length();
    n_sym = cfg.n_symbols;
  }

  std::vector<Eigen::MatrixXcd> y(static_cast<std::size_t>(ap.n_antennas));
  for (int p = 0; p < ap.n_antennas; ++p)
    y[static_cast<std::size_t>(p)] = Eigen::MatrixXcd::Zero(n_sc, n_sym);

  for (std::size_t u = 0; u < symbols.size(); ++u) {
    if (symbols[u].rows() != n_sc || symbols[u].cols() != n_sym)
      throw std::invalid_argument("synthesize_ul_rx: inconsistent symbol grid shape");
    if (channels[u].size() != ap.n_antennas)
      throw std::invalid_argument("synthesize_ul_rx: channel length != n_antennas");
    const double amp = std::sqrt(cfg.ues[u].tx_power);
    for (int p = 0; p < ap.n_antennas; ++p)
      y[static_cast<std::size_t>(p)].noalias() += amp * channels[u](p) * symbols[u];
  }

  if (with_noise && cfg.noise_enabled)
    for (int p = 0; p < ap.n_antennas; ++p)
      for (int m = 0; m < n_sym; ++m)
        for (int n = 0; n < n_sc; ++n)
          y[static_cast<std::size_t>(p)](n, m) += complex_normal(rng_noise);
  return y;
}

/// True when every target's range migration over the observation window is
/// below one percent of the finest per-segment range resolution, keeping the
/// stationary-phase model valid.
inline bool range_migration_ok(const ScenarioConfig& cfg) {
  const SubbandMap map = build_map(parse_pattern(cfg.pattern));
  int max_len = 0;
  for (const auto& r : map.dl_segments) max_len = std::max(max_len, r.length());
  const double finest_res = kSpeedOfLight / (2.0 * max_len * cfg.scs_hz);
  const double cpi = cfg.n_symbols * cfg.symbol_duration_s();
  double worst = 0.0;
  for (const auto& ap : cfg.aps)
    for (const auto& t : cfg.targets)
      worst = std::max(worst, std::abs(target_geometry(ap, t).range_rate_mps));
  return worst * cpi < 0.01 * finest_res;
}

}  // namespace sbfdsim
