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
// Monte Carlo driver: runs sensing trials, aggregates per-(AP, target) RMSE
// and bias, sweeps residual interference with paired seeds, and serializes
// results as CSV. Trials are independent given (config, trial index), so
// parallel and serial execution produce identical reports.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sbfdsim/radar.hpp"
#include "sbfdsim/rng.hpp"
#include "sbfdsim/scenario.hpp"
#include "sbfdsim/signal.hpp"

namespace sbfdsim {

struct RmseRow {
  int ap_id = 0;
  int target_id = 0;
  int n_trials = 0;  // successful trials behind this row
  double rmse_range_m = 0.0;
  double rmse_rate_mps = 0.0;
  double bias_range_m = 0.0;
  double bias_rate_mps = 0.0;
};

struct RmseReport {
  std::vector<RmseRow> rows;  // ordered by (ap index, target index)
  std::string run_id;         // 16-hex digest of the effective config
  std::uint64_t seed = 0;
  int n_trials = 0;           // configured trial count
  int failed_ap_trials = 0;   // (AP, trial) pairs excluded from aggregation
};

struct TrialRecord {
  int trial = 0;
  int ap_id = 0;
  int target_id = 0;
  double true_range_m = 0.0;
  double est_range_m = 0.0;
  double true_rate_mps = 0.0;
  double est_rate_mps = 0.0;
};

struct SimulationResult {
  RmseReport report;
  std::vector<TrialRecord> trials;  // successful (trial, AP) pairs only
};

struct SweepPoint {
  double inr_db = 0.0;
  RmseReport report;
};

namespace detail {

inline std::string format_csv_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

/// Digest of the effective configuration (seed and trial count included),
/// printed as 16 hex digits; identifies a run across CSV files.
inline std::string config_hash(const ScenarioConfig& cfg) {
  const std::uint64_t h = detail::fnv1a64(serialize_scenario(cfg));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

/// Shared DL waveform of one trial: one QPSK grid per DL segment, identical
/// at every AP, drawn from the trial's waveform stream in segment order.
inline std::vector<ResourceGrid> trial_waveform(const ScenarioConfig& cfg,
                                                int trial) {
  const SubbandMap map = build_map(parse_pattern(cfg.pattern));
  auto rng = make_stream(cfg.seed, trial, 0, Stream::dl_waveform);
  std::vector<ResourceGrid> x;
  x.reserve(map.dl_segments.size());
  for (const auto& seg : map.dl_segments)
    x.push_back(generate_qpsk_grid(seg.length(), cfg.n_symbols, seg.begin, rng));
  return x;
}

/// Monte Carlo sensing evaluation: n_trials independent slots, every AP's
/// chain per slot, truth association, per-(AP, target) RMSE and bias.
/// Failures are recorded per (AP, trial) and excluded; more than 20% overall
/// or a fully failed AP aborts the run. Results are identical for any
/// n_threads >= 1.
inline SimulationResult run_trials(const ScenarioConfig& cfg, int n_trials,
                                   int n_threads = 1) {
  if (n_trials < 1)
    throw std::invalid_argument("run_trials: n_trials must be >= 1");
  if (n_threads < 1)
    throw std::invalid_argument("run_trials: n_threads must be >= 1");
  validate_scenario(cfg);
  if (cfg.targets.empty())
    throw std::invalid_argument("run_trials: scenario has no targets");
  if (cfg.model_order != static_cast<int>(cfg.targets.size()))
    throw std::invalid_argument(
        "run_trials: model_order must equal the target count for per-target "
        "error attribution");

  const int n_aps = static_cast<int>(cfg.aps.size());
  const int n_targets = static_cast<int>(cfg.targets.size());

  // truth[ap][target] = (range, rate), in cfg order.
  std::vector<std::vector<std::pair<double, double>>> truth(
      static_cast<std::size_t>(n_aps));
  for (int j = 0; j < n_aps; ++j)
    for (int t = 0; t < n_targets; ++t) {
      const TargetGeometry g = target_geometry(
          cfg.aps[static_cast<std::size_t>(j)], cfg.targets[static_cast<std::size_t>(t)]);
      truth[static_cast<std::size_t>(j)].emplace_back(g.range_m, g.range_rate_mps);
    }

  struct ApOutcome {
    bool ok = false;
    std::vector<TargetError> errors;
  };
  std::vector<std::vector<ApOutcome>> outcomes(
      static_cast<std::size_t>(n_trials),
      std::vector<ApOutcome>(static_cast<std::size_t>(n_aps)));

  auto worker = [&](int first, int last) {
    for (int t = first; t < last; ++t) {
      const std::vector<ResourceGrid> x_dl = trial_waveform(cfg, t);
      for (int j = 0; j < n_aps; ++j) {
        ApOutcome& out = outcomes[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
        try {
          const std::vector<TargetEstimate> est = run_ap(cfg, j, x_dl, t);
          out.errors = associate_and_error(est, truth[static_cast<std::size_t>(j)]);
          out.ok = true;
        } catch (const std::exception&) {
          out.ok = false;  // recorded below; the trial's other APs continue
        }
      }
    }
  };

  const int threads = std::min(n_threads, n_trials);
  if (threads <= 1) {
    worker(0, n_trials);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_trials + threads - 1) / threads;
    for (int k = 0; k < threads; ++k) {
      const int first = k * chunk;
      const int last = std::min(n_trials, first + chunk);
      if (first < last) pool.emplace_back(worker, first, last);
    }
    for (auto& th : pool) th.join();
  }

  // Deterministic ordered reduction over (trial, ap, target).
  std::vector<std::vector<double>> sum_r(static_cast<std::size_t>(n_aps),
                                         std::vector<double>(static_cast<std::size_t>(n_targets), 0.0));
  auto sum_r2 = sum_r, sum_v = sum_r, sum_v2 = sum_r;
  std::vector<std::vector<int>> count(static_cast<std::size_t>(n_aps),
                                      std::vector<int>(static_cast<std::size_t>(n_targets), 0));

  SimulationResult result;
  int failures = 0;
  for (int t = 0; t < n_trials; ++t)
    for (int j = 0; j < n_aps; ++j) {
      const ApOutcome& out = outcomes[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
      if (!out.ok) {
        ++failures;
        continue;
      }
      for (int k = 0; k < n_targets; ++k) {
        const TargetError& e = out.errors[static_cast<std::size_t>(k)];
        sum_r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] += e.range_error_m;
        sum_r2[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] +=
            e.range_error_m * e.range_error_m;
        sum_v[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] += e.rate_error_mps;
        sum_v2[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] +=
            e.rate_error_mps * e.rate_error_mps;
        ++count[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];

        TrialRecord rec;
        rec.trial = t;
        rec.ap_id = cfg.aps[static_cast<std::size_t>(j)].id;
        rec.target_id = cfg.targets[static_cast<std::size_t>(k)].id;
        rec.true_range_m = truth[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].first;
        rec.true_rate_mps = truth[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].second;
        rec.est_range_m = rec.true_range_m + e.range_error_m;
        rec.est_rate_mps = rec.true_rate_mps + e.rate_error_mps;
        result.trials.push_back(rec);
      }
    }

  if (failures * 5 > n_trials * n_aps)
    throw std::runtime_error("run_trials: " + std::to_string(failures) + " of " +
                             std::to_string(n_trials * n_aps) +
                             " (AP, trial) pairs failed (over 20%)");

  ScenarioConfig effective = cfg;
  effective.n_trials = n_trials;
  result.report.run_id = config_hash(effective);
  result.report.seed = cfg.seed;
  result.report.n_trials = n_trials;
  result.report.failed_ap_trials = failures;
  for (int j = 0; j < n_aps; ++j)
    for (int k = 0; k < n_targets; ++k) {
      const int n = count[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      if (n == 0)
        throw std::runtime_error("run_trials: AP " +
                                 std::to_string(cfg.aps[static_cast<std::size_t>(j)].id) +
                                 " produced no successful trials");
      RmseRow row;
      row.ap_id = cfg.aps[static_cast<std::size_t>(j)].id;
      row.target_id = cfg.targets[static_cast<std::size_t>(k)].id;
      row.n_trials = n;
      row.rmse_range_m =
          std::sqrt(sum_r2[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] / n);
      row.rmse_rate_mps =
          std::sqrt(sum_v2[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] / n);
      row.bias_range_m = sum_r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] / n;
      row.bias_rate_mps = sum_v[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] / n;
      result.report.rows.push_back(row);
    }
  return result;
}

inline SimulationResult run_trials(const ScenarioConfig& cfg) {
  return run_trials(cfg, cfg.n_trials);
}

/// Residual-SI sweep: run_trials per INR point with only residual_si_inr_db
/// varied and the seed held fixed, so noise and waveform realizations are
/// paired across points.
inline std::vector<SweepPoint> sweep_inr(const ScenarioConfig& cfg,
                                         const std::vector<double>& inr_list_db,
                                         int n_threads = 1) {
  if (inr_list_db.empty())
    throw std::invalid_argument("sweep_inr: INR list must be non-empty");
  for (std::size_t i = 1; i < inr_list_db.size(); ++i)
    if (!(inr_list_db[i] > inr_list_db[i - 1]))
      throw std::invalid_argument("sweep_inr: INR list must be strictly increasing");
  std::vector<SweepPoint> sweep;
  sweep.reserve(inr_list_db.size());
  for (double inr : inr_list_db) {
    ScenarioConfig point = cfg;
    point.residual_si_inr_db = inr;
    SweepPoint sp;
    sp.inr_db = inr;
    sp.report = run_trials(point, point.n_trials, n_threads).report;
    sweep.push_back(sp);
  }
  return sweep;
}

inline std::string summary_csv(const RmseReport& report) {
  std::ostringstream out;
  out << "ap_id,target_id,n_trials,rmse_range_m,rmse_rate_mps,bias_range_m,"
         "bias_rate_mps\n";
  for (const RmseRow& r : report.rows)
    out << r.ap_id << ',' << r.target_id << ',' << r.n_trials << ','
        << detail::format_csv_double(r.rmse_range_m) << ','
        << detail::format_csv_double(r.rmse_rate_mps) << ','
        << detail::format_csv_double(r.bias_range_m) << ','
        << detail::format_csv_double(r.bias_rate_mps) << '\n';
  return out.str();
}

inline std::string trials_csv(const SimulationResult& result) {
  std::ostringstream out;
  out << "run_id,trial,ap_id,target_id,true_range_m,est_range_m,true_rate_mps,"
         "est_rate_mps\n";
  for (const TrialRecord& r : result.trials)
    out << result.report.run_id << ',' << r.trial << ',' << r.ap_id << ','
        << r.target_id << ',' << detail::format_csv_double(r.true_range_m) << ','
        << detail::format_csv_double(r.est_range_m) << ','
        << detail::format_csv_double(r.true_rate_mps) << ','
        << detail::format_csv_double(r.est_rate_mps) << '\n';
  return out.str();
}

inline std::string sweep_csv(const std::vector<SweepPoint>& sweep) {
  std::ostringstream out;
  out << "inr_db,ap_id,target_id,n_trials,rmse_range_m,rmse_rate_mps,"
         "bias_range_m,bias_rate_mps\n";
  for (const SweepPoint& p : sweep)
    for (const RmseRow& r : p.report.rows)
      out << detail::format_csv_double(p.inr_db) << ',' << r.ap_id << ','
          << r.target_id << ',' << r.n_trials << ','
          << detail::format_csv_double(r.rmse_range_m) << ','
          << detail::format_csv_double(r.rmse_rate_mps) << ','
          << detail::format_csv_double(r.bias_range_m) << ','
          << detail::format_csv_double(r.bias_rate_mps) << '\n';
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void emit_csv(const RmseReport& report, const std::string& path) {
  write_text_file(path, summary_csv(report));
}

inline void write_trials_csv(const SimulationResult& result, const std::string& path) {
  write_text_file(path, trials_csv(result));
}

inline void write_sweep_csv(const std::vector<SweepPoint>& sweep,
                            const std::string& path) {
  write_text_file(path, sweep_csv(sweep));
}

}  // namespace sbfdsim
