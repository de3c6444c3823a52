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

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sbfdsim/constants.hpp"
#include "sbfdsim/sbfd_grid.hpp"

namespace sbfdsim {

struct AccessPoint {
  int id = 0;
  double x = 0.0, y = 0.0;          // meters
  int n_antennas = 1;               // half-wavelength ULA
  double array_bearing_rad = 0.0;   // boresight direction
};

struct Target {
  int id = 0;
  double x = 0.0, y = 0.0;    // meters
  double vx = 0.0, vy = 0.0;  // meters/second
  double rcs_scale = 1.0;     // linear amplitude multiplier
};

struct UserEquipment {
  int id = 0;
  double x = 0.0, y = 0.0;  // meters
  double tx_power = 1.0;    // linear, noise-relative
};

enum class CliMode { off, gaussian, structured };

inline const char* to_string(CliMode m) {
  switch (m) {
    case CliMode::off: return "off";
    case CliMode::gaussian: return "gaussian";
    case CliMode::structured: return "structured";
  }
  return "?";
}

/// Full experiment description. Immutable after construction; share freely
/// across parallel trials.
struct ScenarioConfig {
  double carrier_hz = 7e9;
  double scs_hz = 30e3;
  int n_symbols = 14;
  double cp_fraction = 0.0703125;  // normal CP, 144/2048
  double bandwidth_hz = 50e6;
  std::string pattern = "DL:50,GB:3,UL:27,GB:3,DL:50";
  std::vector<AccessPoint> aps;
  std::vector<Target> targets;
  std::vector<UserEquipment> ues;
  double snr_db = 10.0;             // echo SNR per resource element at ref distance
  double ref_distance_m = 100.0;    // SNR calibration distance
  double residual_si_inr_db = -10.0;  // -inf disables residual SI
  CliMode cli_mode = CliMode::structured;
  double cli_suppression_db = 35.0;
  int model_order = 3;
  std::uint64_t seed = 12345;
  int n_trials = 200;
  int esprit_subarray_freq = 64;
  // 12 of the 14 symbols: the aperture has to separate range rates a few
  // m/s apart, which a half-slot subarray cannot.
  int esprit_subarray_time = 12;
  double beam_angle_jitter_rad = 0.0;
  bool noise_enabled = true;

  /// Total OFDM symbol duration including the cyclic prefix.
  double symbol_duration_s() const { return (1.0 + cp_fraction) / scs_hz; }

  bool si_enabled() const { return std::isfinite(residual_si_inr_db); }
};

struct TargetGeometry {
  double range_m;
  double bearing_rad;      // relative to array boresight, wrapped to (-pi, pi]
  double range_rate_mps;   // positive = receding
};

inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - kPi;
}

inline TargetGeometry target_geometry(const AccessPoint& ap, const Target& tgt) {
  const double dx = tgt.x - ap.x;
  const double dy = tgt.y - ap.y;
  const double range = std::hypot(dx, dy);
  if (range < 1e-9)
    throw std::invalid_argument("target_geometry: AP and target are co-located");
  const double bearing = wrap_angle(std::atan2(dy, dx) - ap.array_bearing_rad);
  const double range_rate = (tgt.vx * dx + tgt.vy * dy) / range;
  return {range, bearing, range_rate};
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view text, const std::string& key) {
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(std::string(text), &consumed);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid number for '" + key + "': '" +
                                std::string(text) + "'");
  }
  if (consumed != text.size())
    throw std::invalid_argument("invalid number for '" + key + "': '" +
                                std::string(text) + "'");
  return v;
}

inline long long parse_int(std::string_view text, const std::string& key) {
  std::size_t consumed = 0;
  long long v = 0;
  try {
    v = std::stoll(std::string(text), &consumed);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid integer for '" + key + "': '" +
                                std::string(text) + "'");
  }
  if (consumed != text.size())
    throw std::invalid_argument("invalid integer for '" + key + "': '" +
                                std::string(text) + "'");
  return v;
}

inline std::uint64_t parse_uint64(std::string_view text, const std::string& key) {
  std::size_t consumed = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(std::string(text), &consumed);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid unsigned integer for '" + key + "': '" +
                                std::string(text) + "'");
  }
  if (consumed != text.size())
    throw std::invalid_argument("invalid unsigned integer for '" + key + "': '" +
                                std::string(text) + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Parses "k=v k=v ..." attribute lists used by ap/target/ue entries.
inline std::map<std::string, std::string> parse_attributes(std::string_view text,
                                                           const std::string& entry,
                                                           int line_no) {
  std::map<std::string, std::string> attrs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    const std::string_view item = text.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": malformed " +
                                  entry + " attribute '" + std::string(item) + "'");
    const std::string k(item.substr(0, eq));
    if (attrs.count(k))
      throw std::invalid_argument("line " + std::to_string(line_no) + ": duplicate " +
                                  entry + " attribute '" + k + "'");
    attrs[k] = std::string(item.substr(eq + 1));
    pos = end;
  }
  return attrs;
}

inline void reject_unknown_attrs(const std::map<std::string, std::string>& attrs,
                                 const std::set<std::string>& known,
                                 const std::string& entry, int line_no) {
  for (const auto& [k, v] : attrs)
    if (!known.count(k))
      throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown " +
                                  entry + " attribute '" + k + "'");
}

inline std::string require_attr(const std::map<std::string, std::string>& attrs,
                                const std::string& key, const std::string& entry,
                                int line_no) {
  const auto it = attrs.find(key);
  if (it == attrs.end())
    throw std::invalid_argument("line " + std::to_string(line_no) + ": " + entry +
                                " entry missing '" + key + "'");
  return it->second;
}

}  // namespace detail

/// Validates every scenario invariant; error messages name the offending field.
inline void validate_scenario(const ScenarioConfig& cfg) {
  if (!(cfg.carrier_hz > 0.0)) throw std::invalid_argument("carrier_hz must be > 0");
  if (!(cfg.scs_hz > 0.0)) throw std::invalid_argument("scs_hz must be > 0");
  if (cfg.n_symbols < 2) throw std::invalid_argument("n_symbols must be >= 2");
  if (!(cfg.cp_fraction >= 0.0)) throw std::invalid_argument("cp_fraction must be >= 0");
  if (!(cfg.bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth_hz must be > 0");

  const FrameConfig fc = parse_pattern(cfg.pattern);
  const SubbandMap map = build_map(fc);
  validate_numerology(fc, cfg.scs_hz, cfg.bandwidth_hz);

  if (cfg.aps.empty()) throw std::invalid_argument("aps must be non-empty");
  std::set<int> ap_ids;
  for (const auto& ap : cfg.aps) {
    if (!std::isfinite(ap.x) || !std::isfinite(ap.y))
      throw std::invalid_argument("aps: positions must be finite");
    if (ap.n_antennas < 1) throw std::invalid_argument("aps: n_antennas must be >= 1");
    if (!ap_ids.insert(ap.id).second)
      throw std::invalid_argument("aps: duplicate id " + std::to_string(ap.id));
  }
  for (std::size_t i = 0; i < cfg.aps.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.aps.size(); ++j)
      if (std::hypot(cfg.aps[i].x - cfg.aps[j].x, cfg.aps[i].y - cfg.aps[j].y) < 1e-6)
        throw std::invalid_argument("aps: APs " + std::to_string(cfg.aps[i].id) +
                                    " and " + std::to_string(cfg.aps[j].id) +
                                    " are co-located");

  std::set<int> tgt_ids;
  for (const auto& t : cfg.targets) {
    if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.vx) ||
        !std::isfinite(t.vy))
      throw std::invalid_argument("targets: values must be finite");
    if (!(t.rcs_scale > 0.0))
      throw std::invalid_argument("targets: rcs_scale must be > 0");
    if (!tgt_ids.insert(t.id).second)
      throw std::invalid_argument("targets: duplicate id " + std::to_string(t.id));
    for (const auto& ap : cfg.aps)
      if (std::hypot(ap.x - t.x, ap.y - t.y) < 1e-9)
        throw std::invalid_argument("targets: target " + std::to_string(t.id) +
                                    " co-located with AP " + std::to_string(ap.id));
  }

  std::set<int> ue_ids;
  for (const auto& u : cfg.ues) {
    if (!std::isfinite(u.x) || !std::isfinite(u.y))
      throw std::invalid_argument("ues: positions must be finite");
    if (!(u.tx_power > 0.0)) throw std::invalid_argument("ues: tx_power must be > 0");
    if (!ue_ids.insert(u.id).second)
      throw std::invalid_argument("ues: duplicate id " + std::to_string(u.id));
  }

  if (!std::isfinite(cfg.snr_db)) throw std::invalid_argument("snr_db must be finite");
  if (!(cfg.ref_distance_m > 0.0))
    throw std::invalid_argument("ref_distance_m must be > 0");
  if (std::isnan(cfg.residual_si_inr_db) ||
      cfg.residual_si_inr_db == std::numeric_limits<double>::infinity())
    throw std::invalid_argument("residual_si_inr_db must be finite or -inf (off)");
  if (!(cfg.cli_suppression_db >= 0.0))
    throw std::invalid_argument("cli_suppression_db must be >= 0");
  if (!(cfg.beam_angle_jitter_rad >= 0.0))
    throw std::invalid_argument("beam_angle_jitter_rad must be >= 0");
  if (cfg.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");

  if (cfg.esprit_subarray_freq < 2)
    throw std::invalid_argument("esprit_subarray_freq must be >= 2");
  if (cfg.esprit_subarray_time < 2)
    throw std::invalid_argument("esprit_subarray_time must be >= 2");
  if (cfg.esprit_subarray_time > cfg.n_symbols)
    throw std::invalid_argument("esprit_subarray_time must be <= n_symbols");
  for (const auto& r : map.dl_segments)
    if (cfg.esprit_subarray_freq > r.length())
      throw std::invalid_argument(
          "esprit_subarray_freq must be <= shortest DL segment length");
  const int min_subarray = std::min(cfg.esprit_subarray_freq, cfg.esprit_subarray_time);
  if (cfg.model_order < 1) throw std::invalid_argument("model_order must be >= 1");
  if (cfg.model_order > min_subarray / 2)
    throw std::invalid_argument("model_order must be <= floor(min subarray length / 2)");
}

/// Fixed 6-AP / 3-target / 5-UE layout: APs on a 2x3 lattice with boresights
/// toward the area center, all inside a 250 x 250 m square. Target velocities
/// are (18,28), (10,-28), (21,26) m/s.
inline ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  const double cx = 125.0, cy = 125.0;
  const double xs[3] = {50.0, 125.0, 200.0};
  const double ys[2] = {50.0, 200.0};
  int id = 0;
  for (double y : ys)
    for (double x : xs) {
      AccessPoint ap;
      ap.id = id++;
      ap.x = x;
      ap.y = y;
      ap.n_antennas = 4;
      ap.array_bearing_rad = std::atan2(cy - y, cx - x);
      cfg.aps.push_back(ap);
    }
  cfg.targets = {
      {0, 60.0, 80.0, 18.0, 28.0, 1.0},
      {1, 150.0, 170.0, 10.0, -28.0, 1.0},
      {2, 200.0, 60.0, 21.0, 26.0, 1.0},
  };
  cfg.ues = {
      {0, 40.0, 120.0, 1.0},
      {1, 110.0, 40.0, 1.0},
      {2, 210.0, 110.0, 1.0},
      {3, 90.0, 210.0, 1.0},
      {4, 160.0, 150.0, 1.0},
  };
  validate_scenario(cfg);
  return cfg;
}

inline std::string serialize_scenario(const ScenarioConfig& cfg) {
  using detail::format_double;
  std::ostringstream out;
  out << "carrier_hz = " << format_double(cfg.carrier_hz) << "\n";
  out << "scs_hz = " << format_double(cfg.scs_hz) << "\n";
  out << "n_symbols = " << cfg.n_symbols << "\n";
  out << "cp_fraction = " << format_double(cfg.cp_fraction) << "\n";
  out << "bandwidth_hz = " << format_double(cfg.bandwidth_hz) << "\n";
  out << "pattern = " << cfg.pattern << "\n";
  out << "snr_db = " << format_double(cfg.snr_db) << "\n";
  out << "ref_distance_m = " << format_double(cfg.ref_distance_m) << "\n";
  if (cfg.si_enabled())
    out << "residual_si_inr_db = " << format_double(cfg.residual_si_inr_db) << "\n";
  else
    out << "residual_si_inr_db = off\n";
  out << "cli_mode = " << to_string(cfg.cli_mode) << "\n";
  out << "cli_suppression_db = " << format_double(cfg.cli_suppression_db) << "\n";
  out << "model_order = " << cfg.model_order << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "n_trials = " << cfg.n_trials << "\n";
  out << "esprit_subarray_freq = " << cfg.esprit_subarray_freq << "\n";
  out << "esprit_subarray_time = " << cfg.esprit_subarray_time << "\n";
  out << "beam_angle_jitter_rad = " << format_double(cfg.beam_angle_jitter_rad) << "\n";
  out << "noise = " << (cfg.noise_enabled ? "on" : "off") << "\n";
  for (const auto& ap : cfg.aps)
    out << "ap = id=" << ap.id << " x=" << format_double(ap.x)
        << " y=" << format_double(ap.y) << " n_antennas=" << ap.n_antennas
        << " bearing_rad=" << format_double(ap.array_bearing_rad) << "\n";
  for (const auto& t : cfg.targets)
    out << "target = id=" << t.id << " x=" << format_double(t.x)
        << " y=" << format_double(t.y) << " vx=" << format_double(t.vx)
        << " vy=" << format_double(t.vy) << " rcs=" << format_double(t.rcs_scale)
        << "\n";
  for (const auto& u : cfg.ues)
    out << "ue = id=" << u.id << " x=" << format_double(u.x)
        << " y=" << format_double(u.y) << " tx_power=" << format_double(u.tx_power)
        << "\n";
  return out.str();
}

/// Parses the flat key=value scenario text. Unknown keys are rejected with
/// line context; all invariants are validated before returning.
inline ScenarioConfig load_scenario(const std::string& text) {
  using namespace detail;
  ScenarioConfig cfg;
  cfg.aps.clear();
  cfg.targets.clear();
  cfg.ues.clear();

  static const std::set<std::string> scalar_keys = {
      "carrier_hz", "scs_hz", "n_symbols", "cp_fraction", "bandwidth_hz",
      "pattern", "snr_db", "ref_distance_m", "residual_si_inr_db", "cli_mode",
      "cli_suppression_db", "model_order", "seed", "n_trials",
      "esprit_subarray_freq", "esprit_subarray_time", "beam_angle_jitter_rad",
      "noise"};

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string_view stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key{trim(stripped.substr(0, eq))};
    const std::string value{trim(stripped.substr(eq + 1))};

    if (key == "ap") {
      auto attrs = parse_attributes(value, "ap", line_no);
      reject_unknown_attrs(attrs, {"id", "x", "y", "n_antennas", "bearing_rad"},
                           "ap", line_no);
      AccessPoint ap;
      ap.id = static_cast<int>(parse_int(require_attr(attrs, "id", "ap", line_no), "ap.id"));
      ap.x = parse_double(require_attr(attrs, "x", "ap", line_no), "ap.x");
      ap.y = parse_double(require_attr(attrs, "y", "ap", line_no), "ap.y");
      ap.n_antennas = static_cast<int>(
          parse_int(require_attr(attrs, "n_antennas", "ap", line_no), "ap.n_antennas"));
      ap.array_bearing_rad =
          parse_double(require_attr(attrs, "bearing_rad", "ap", line_no), "ap.bearing_rad");
      cfg.aps.push_back(ap);
      continue;
    }
    if (key == "target") {
      auto attrs = parse_attributes(value, "target", line_no);
      reject_unknown_attrs(attrs, {"id", "x", "y", "vx", "vy", "rcs"}, "target",
                           line_no);
      Target t;
      t.id = static_cast<int>(parse_int(require_attr(attrs, "id", "target", line_no), "target.id"));
      t.x = parse_double(require_attr(attrs, "x", "target", line_no), "target.x");
      t.y = parse_double(require_attr(attrs, "y", "target", line_no), "target.y");
      t.vx = parse_double(require_attr(attrs, "vx", "target", line_no), "target.vx");
      t.vy = parse_double(require_attr(attrs, "vy", "target", line_no), "target.vy");
      if (attrs.count("rcs")) t.rcs_scale = parse_double(attrs["rcs"], "target.rcs");
      cfg.targets.push_back(t);
      continue;
    }
    if (key == "ue") {
      auto attrs = parse_attributes(value, "ue", line_no);
      reject_unknown_attrs(attrs, {"id", "x", "y", "tx_power"}, "ue", line_no);
      UserEquipment u;
      u.id = static_cast<int>(parse_int(require_attr(attrs, "id", "ue", line_no), "ue.id"));
      u.x = parse_double(require_attr(attrs, "x", "ue", line_no), "ue.x");
      u.y = parse_double(require_attr(attrs, "y", "ue", line_no), "ue.y");
      if (attrs.count("tx_power")) u.tx_power = parse_double(attrs["tx_power"], "ue.tx_power");
      cfg.ues.push_back(u);
      continue;
    }

    if (!scalar_keys.count(key))
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": duplicate key '" + key + "'");

    if (key == "carrier_hz") cfg.carrier_hz = parse_double(value, key);
    else if (key == "scs_hz") cfg.scs_hz = parse_double(value, key);
    else if (key == "n_symbols") cfg.n_symbols = static_cast<int>(parse_int(value, key));
    else if (key == "cp_fraction") cfg.cp_fraction = parse_double(value, key);
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_double(value, key);
    else if (key == "pattern") cfg.pattern = value;
    else if (key == "snr_db") cfg.snr_db = parse_double(value, key);
    else if (key == "ref_distance_m") cfg.ref_distance_m = parse_double(value, key);
    else if (key == "residual_si_inr_db") {
      if (value == "off") cfg.residual_si_inr_db = -std::numeric_limits<double>::infinity();
      else cfg.residual_si_inr_db = parse_double(value, key);
    } else if (key == "cli_mode") {
      if (value == "off") cfg.cli_mode = CliMode::off;
      else if (value == "gaussian") cfg.cli_mode = CliMode::gaussian;
      else if (value == "structured") cfg.cli_mode = CliMode::structured;
      else
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": cli_mode must be off|gaussian|structured");
    } else if (key == "cli_suppression_db") cfg.cli_suppression_db = parse_double(value, key);
    else if (key == "model_order") cfg.model_order = static_cast<int>(parse_int(value, key));
    else if (key == "seed") cfg.seed = parse_uint64(value, key);
    else if (key == "n_trials") cfg.n_trials = static_cast<int>(parse_int(value, key));
    else if (key == "esprit_subarray_freq")
      cfg.esprit_subarray_freq = static_cast<int>(parse_int(value, key));
    else if (key == "esprit_subarray_time")
      cfg.esprit_subarray_time = static_cast<int>(parse_int(value, key));
    else if (key == "beam_angle_jitter_rad")
      cfg.beam_angle_jitter_rad = parse_double(value, key);
    else if (key == "noise") {
      if (value == "on") cfg.noise_enabled = true;
      else if (value == "off") cfg.noise_enabled = false;
      else
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": noise must be on|off");
    }
  }

  validate_scenario(cfg);
  return cfg;
}

}  // namespace sbfdsim
