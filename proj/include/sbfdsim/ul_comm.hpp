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
// Uplink reception on the UL sub-band: per-AP maximum ratio combining with
// perfect CSI, equal-weight combining of the per-AP outputs at the CPU,
// and SINR / symbol-error evaluation against the closed form.

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sbfdsim/channel.hpp"
#include "sbfdsim/rng.hpp"
#include "sbfdsim/scenario.hpp"
#include "sbfdsim/signal.hpp"

namespace sbfdsim {

struct UeResult {
  int ue_id = 0;
  double sinr_linear = 0.0;                // closed form
  double sinr_measured_linear = 0.0;       // Monte Carlo, post-combining
  double spectral_efficiency_bps_hz = 0.0;  // log2(1 + closed-form SINR)
  double ser = 1.0;
};

struct UlResult {
  std::vector<UeResult> ues;
  long n_elements = 0;  // resource elements behind ser / measured SINR, per UE
};

/// Maximum ratio combining at one AP: z[n,m] = sum_p conj(h[p]) * y_p[n,m].
inline Eigen::MatrixXcd mrc_combine(const std::vector<Eigen::MatrixXcd>& y,
                                    const Eigen::VectorXcd& h) {
  if (y.empty())
    throw std::invalid_argument("mrc_combine: no antenna grids");
  if (static_cast<int>(y.size()) != h.size())
    throw std::invalid_argument("mrc_combine: antenna count mismatch");
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(y[0].rows(), y[0].cols());
  for (std::size_t p = 1; p < y.size(); ++p)
    if (y[p].rows() != z.rows() || y[p].cols() != z.cols())
      throw std::invalid_argument("mrc_combine: inconsistent grid shapes");
  for (std::size_t p = 0; p < y.size(); ++p)
    z.noalias() += std::conj(h(static_cast<int>(p))) * y[p];
  return z;
}

/// Equal-weight CPU combining of per-AP soft-symbol grids.
inline Eigen::MatrixXcd cpu_combine(const std::vector<Eigen::MatrixXcd>& z_per_ap) {
  if (z_per_ap.empty())
    throw std::invalid_argument("cpu_combine: no AP grids");
  Eigen::MatrixXcd z = z_per_ap[0];
  for (std::size_t j = 1; j < z_per_ap.size(); ++j) {
    if (z_per_ap[j].rows() != z.rows() || z_per_ap[j].cols() != z.cols())
      throw std::invalid_argument("cpu_combine: inconsistent grid shapes");
    z += z_per_ap[j];
  }
  return z;
}

/// Post-CPU-combining SINR with MRC at every AP and unit noise:
///   sinr_u = p_u (sum_j ||h_ju||^2)^2 /
///            ( sum_{u' != u} p_u' |sum_j h_ju^H h_ju'|^2 + sum_j ||h_ju||^2 ).
/// channels[j][u] is UE u's channel at AP j.
inline std::vector<double> sinr_closed_form(
    const std::vector<std::vector<Eigen::VectorXcd>>& channels,
    const std::vector<double>& powers) {
  if (channels.empty())
    throw std::invalid_argument("sinr_closed_form: no APs");
  const std::size_t n_ues = powers.size();
  if (n_ues == 0)
    throw std::invalid_argument("sinr_closed_form: no UEs");
  for (const auto& per_ap : channels)
    if (per_ap.size() != n_ues)
      throw std::invalid_argument("sinr_closed_form: channels/powers size mismatch");

  std::vector<double> sinr(n_ues, 0.0);
  for (std::size_t u = 0; u < n_ues; ++u) {
    double gain = 0.0;
    for (const auto& per_ap : channels) gain += per_ap[u].squaredNorm();
    if (gain <= 0.0)
      throw std::invalid_argument("sinr_closed_form: all-zero channel for a UE");
    double interference = 0.0;
    for (std::size_t v = 0; v < n_ues; ++v) {
      if (v == u) continue;
      std::complex<double> cross(0.0, 0.0);
      for (const auto& per_ap : channels) cross += per_ap[u].dot(per_ap[v]);
      interference += powers[v] * std::norm(cross);
    }
    sinr[u] = powers[u] * gain * gain / (interference + gain);
  }
  return sinr;
}

/// End-to-end UL evaluation: one channel realization, cfg.n_trials slots of
/// fresh symbols and noise, MRC + CPU combining, QPSK detection. Reports the
/// closed-form SINR for the drawn channels next to the measured one. RNG
/// streams derive from cfg.seed.
inline UlResult evaluate_ul(const ScenarioConfig& cfg) {
  if (cfg.ues.empty())
    throw std::invalid_argument("evaluate_ul: scenario has no UEs");
  const std::size_t n_ues = cfg.ues.size();
  const std::size_t n_aps = cfg.aps.size();

  const SubbandMap map = build_map(parse_pattern(cfg.pattern));
  int ul_sc = 0;
  for (const auto& r : map.ul_segments) ul_sc += r.length();
  const int ul_base = map.ul_segments[0].begin;

  // channels[j][u]; one stream per UE, APs drawn in index order within it.
  std::vector<std::vector<Eigen::VectorXcd>> channels(
      n_aps, std::vector<Eigen::VectorXcd>(n_ues));
  for (std::size_t u = 0; u < n_ues; ++u) {
    auto rng = make_stream(cfg.seed, 0, cfg.ues[u].id, Stream::ul_channel);
    for (std::size_t j = 0; j < n_aps; ++j)
      channels[j][u] = ul_channel(cfg, cfg.ues[u], cfg.aps[j], rng);
  }

  std::vector<double> powers;
  powers.reserve(n_ues);
  for (const auto& ue : cfg.ues) powers.push_back(ue.tx_power);
  const std::vector<double> sinr_cf = sinr_closed_form(channels, powers);

  std::vector<double> gain(n_ues, 0.0);
  for (std::size_t u = 0; u < n_ues; ++u)
    for (std::size_t j = 0; j < n_aps; ++j) gain[u] += channels[j][u].squaredNorm();

  std::vector<long> symbol_errors(n_ues, 0);
  std::vector<double> err_energy(n_ues, 0.0);
  long n_elements = 0;

  for (int slot = 0; slot < cfg.n_trials; ++slot) {
    std::vector<Eigen::MatrixXcd> symbols;
    symbols.reserve(n_ues);
    for (const auto& ue : cfg.ues) {
      auto rng = make_stream(cfg.seed, slot, ue.id, Stream::ul_symbols);
      symbols.push_back(
          generate_qpsk_grid(ul_sc, cfg.n_symbols, ul_base, rng).data);
    }

    // z_per_ue[u][j]: UE u's soft symbols from AP j.
    std::vector<std::vector<Eigen::MatrixXcd>> z_per_ue(n_ues);
    for (std::size_t j = 0; j < n_aps; ++j) {
      auto rng_noise = make_stream(cfg.seed, slot, cfg.aps[j].id, Stream::ul_noise);
      const std::vector<Eigen::MatrixXcd> y =
          synthesize_ul_rx(cfg, cfg.aps[j], symbols, channels[j], rng_noise);
      for (std::size_t u = 0; u < n_ues; ++u)
        z_per_ue[u].push_back(mrc_combine(y, channels[j][u]));
    }

    for (std::size_t u = 0; u < n_ues; ++u) {
      const Eigen::MatrixXcd z = cpu_combine(z_per_ue[u]);
      const double scale = gain[u] * std::sqrt(cfg.ues[u].tx_power);
      for (int m = 0; m < z.cols(); ++m)
        for (int n = 0; n < z.rows(); ++n) {
          const std::complex<double> truth = symbols[u](n, m);
          if (qpsk_detect(z(n, m)) != truth) ++symbol_errors[u];
          err_energy[u] += std::norm(z(n, m) - scale * truth);
        }
    }
    n_elements += static_cast<long>(ul_sc) * cfg.n_symbols;
  }

  UlResult result;
  result.n_elements = n_elements;
  for (std::size_t u = 0; u < n_ues; ++u) {
    UeResult r;
    r.ue_id = cfg.ues[u].id;
    r.sinr_linear = sinr_cf[u];
    const double signal = gain[u] * gain[u] * cfg.ues[u].tx_power;
    const double mean_err = err_energy[u] / static_cast<double>(n_elements);
    r.sinr_measured_linear = mean_err > 0.0
                                 ? signal / mean_err
                                 : std::numeric_limits<double>::infinity();
    r.spectral_efficiency_bps_hz = std::log2(1.0 + r.sinr_linear);
    r.ser = static_cast<double>(symbol_errors[u]) / static_cast<double>(n_elements);
    result.ues.push_back(r);
  }
  return result;
}

}  // namespace sbfdsim
