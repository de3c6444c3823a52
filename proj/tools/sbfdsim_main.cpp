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
// Command-line front end: grid inspection, Monte Carlo simulation, residual
// interference sweeps, and uplink evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sbfdsim/sbfdsim.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      throw std::runtime_error("empty entry in list: '" + text + "'");
    std::size_t consumed = 0;
    const double v = std::stod(item, &consumed);
    if (consumed != item.size())
      throw std::runtime_error("invalid number in list: '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw std::runtime_error("empty list");
  return values;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

void print_grid_info(const std::string& pattern, double scs_hz,
                     double bandwidth_hz, double carrier_hz, double cp_fraction,
                     int n_symbols) {
  using namespace sbfdsim;
  const FrameConfig fc = parse_pattern(pattern);
  const SubbandMap map = build_map(fc);
  validate_numerology(fc, scs_hz, bandwidth_hz);

  std::printf("pattern             %s\n", format_pattern(fc).c_str());
  std::printf("total subcarriers   %d  (%d RB)\n", map.total_sc, total_rb(fc));
  std::printf("occupied bandwidth  %.6g MHz of %.6g MHz\n",
              occupied_bandwidth_hz(fc, scs_hz) / 1e6, bandwidth_hz / 1e6);
  std::printf("segments:\n");
  int offset = 0;
  for (const Segment& seg : fc.segments) {
    const int len = seg.rb_count * fc.rb_size_sc;
    const double width_hz = len * scs_hz;
    std::printf("  %-2s  [%5d, %5d)  %5d sc  %8.4f MHz", to_string(seg.kind),
                offset, offset + len, len, width_hz / 1e6);
    if (seg.kind == SegmentKind::dl)
      std::printf("  range resolution %.4g m", kSpeedOfLight / (2.0 * width_hz));
    std::printf("\n");
    offset += len;
  }
  const double t_o = (1.0 + cp_fraction) / scs_hz;
  std::printf("unambiguous range   %.6g m\n", kSpeedOfLight / (2.0 * scs_hz));
  std::printf("unambiguous |rate|  %.6g m/s  (carrier %.6g GHz, T_o %.6g us)\n",
              kSpeedOfLight / (4.0 * carrier_hz * t_o), carrier_hz / 1e9,
              t_o * 1e6);
  const double cpi = n_symbols * t_o;
  std::printf("observation window  %.6g us  (%d symbols)\n", cpi * 1e6, n_symbols);
}

void print_report(const sbfdsim::RmseReport& report) {
  std::printf("run %s  seed %llu  trials %d  failed (AP, trial) pairs %d\n",
              report.run_id.c_str(),
              static_cast<unsigned long long>(report.seed), report.n_trials,
              report.failed_ap_trials);
  std::printf("%5s %8s %8s %14s %14s %14s %14s\n", "ap", "target", "trials",
              "rmse_range_m", "rmse_rate_mps", "bias_range_m", "bias_rate_mps");
  for (const sbfdsim::RmseRow& r : report.rows)
    std::printf("%5d %8d %8d %14.6g %14.6g %14.6g %14.6g\n", r.ap_id,
                r.target_id, r.n_trials, r.rmse_range_m, r.rmse_rate_mps,
                r.bias_range_m, r.bias_rate_mps);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sbfdsim: SBFD cell-free massive MIMO sensing and UL simulator"};
  app.require_subcommand(1);

  // grid-info
  std::string gi_pattern;
  double gi_scs = 30e3, gi_bandwidth = 50e6, gi_carrier = 7e9;
  double gi_cp = 0.0703125;
  int gi_symbols = 14;
  CLI::App* gi = app.add_subcommand(
      "grid-info", "Show the SBFD sub-band layout and derived sensing metrics");
  gi->add_option("--pattern", gi_pattern, "Sub-band pattern, e.g. DL:50,GB:3,UL:27,GB:3,DL:50")
      ->required();
  gi->add_option("--scs", gi_scs, "Subcarrier spacing in Hz");
  gi->add_option("--bandwidth", gi_bandwidth, "Channel bandwidth in Hz");
  gi->add_option("--carrier", gi_carrier, "Carrier frequency in Hz");
  gi->add_option("--cp-fraction", gi_cp, "Cyclic prefix fraction of the useful symbol");
  gi->add_option("--symbols", gi_symbols, "OFDM symbols per slot");

  // simulate
  std::string sim_config, sim_out, sim_trials_out;
  int sim_trials = -1, sim_threads = 1;
  long long sim_seed = -1;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Run the Monte Carlo sensing study for one configuration");
  sim->add_option("--config", sim_config, "Scenario config file")->required();
  sim->add_option("--trials", sim_trials, "Override the configured trial count");
  sim->add_option("--seed", sim_seed, "Override the configured seed");
  sim->add_option("--out", sim_out, "Write the per-(AP, target) summary CSV here");
  sim->add_option("--trials-out", sim_trials_out, "Write the per-trial CSV here");
  sim->add_option("--threads", sim_threads, "Worker threads (results are thread-count independent)");

  // sweep
  std::string sw_config, sw_inr, sw_out;
  int sw_threads = 1;
  CLI::App* sw = app.add_subcommand(
      "sweep", "Sweep the residual SI INR with paired seeds");
  sw->add_option("--config", sw_config, "Scenario config file")->required();
  sw->add_option("--inr", sw_inr, "Comma-separated INR list in dB, increasing")
      ->required();
  sw->add_option("--out", sw_out, "Write the sweep CSV here");
  sw->add_option("--threads", sw_threads, "Worker threads");

  // ul-eval
  std::string ul_config;
  CLI::App* ul = app.add_subcommand(
      "ul-eval", "Evaluate uplink SINR, spectral efficiency and SER");
  ul->add_option("--config", ul_config, "Scenario config file")->required();

  // dump-config
  std::string dc_out;
  CLI::App* dc = app.add_subcommand(
      "dump-config", "Print the built-in default scenario as a config file");
  dc->add_option("--out", dc_out, "Write the config here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gi->parsed()) {
      print_grid_info(gi_pattern, gi_scs, gi_bandwidth, gi_carrier, gi_cp,
                      gi_symbols);
      return 0;
    }

    if (sim->parsed()) {
      sbfdsim::ScenarioConfig cfg = sbfdsim::load_scenario(read_file(sim_config));
      if (sim_trials > 0) cfg.n_trials = sim_trials;
      if (sim_seed >= 0) cfg.seed = static_cast<std::uint64_t>(sim_seed);
      const sbfdsim::SimulationResult result =
          sbfdsim::run_trials(cfg, cfg.n_trials, sim_threads);
      print_report(result.report);
      if (!sim_out.empty()) sbfdsim::emit_csv(result.report, sim_out);
      if (!sim_trials_out.empty()) sbfdsim::write_trials_csv(result, sim_trials_out);
      return 0;
    }

    if (sw->parsed()) {
      sbfdsim::ScenarioConfig cfg = sbfdsim::load_scenario(read_file(sw_config));
      const std::vector<double> inr = parse_double_list(sw_inr);
      const std::vector<sbfdsim::SweepPoint> sweep =
          sbfdsim::sweep_inr(cfg, inr, sw_threads);
      for (const sbfdsim::SweepPoint& p : sweep) {
        std::printf("=== residual SI INR %+.6g dB ===\n", p.inr_db);
        print_report(p.report);
      }
      if (!sw_out.empty()) sbfdsim::write_sweep_csv(sweep, sw_out);
      return 0;
    }

    if (ul->parsed()) {
      const sbfdsim::ScenarioConfig cfg =
          sbfdsim::load_scenario(read_file(ul_config));
      const sbfdsim::UlResult result = sbfdsim::evaluate_ul(cfg);
      std::printf("uplink over %ld resource elements per UE\n", result.n_elements);
      std::printf("%5s %14s %14s %10s %12s\n", "ue", "sinr_cf_db",
                  "sinr_meas_db", "se_bps_hz", "ser");
      for (const sbfdsim::UeResult& r : result.ues)
        std::printf("%5d %14.6g %14.6g %10.6g %12.6g\n", r.ue_id,
                    to_db(r.sinr_linear), to_db(r.sinr_measured_linear),
                    r.spectral_efficiency_bps_hz, r.ser);
      return 0;
    }

    if (dc->parsed()) {
      const std::string text =
          sbfdsim::serialize_scenario(sbfdsim::default_scenario());
      if (dc_out.empty())
        std::fputs(text.c_str(), stdout);
      else
        sbfdsim::write_text_file(dc_out, text);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
