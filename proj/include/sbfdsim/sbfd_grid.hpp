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

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sbfdsim {

enum class SegmentKind { dl, ul, gb };

inline const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::dl: return "DL";
    case SegmentKind::ul: return "UL";
    case SegmentKind::gb: return "GB";
  }
  return "?";
}

struct Segment {
  SegmentKind kind;
  int rb_count;
};

/// Ordered frequency-domain partition of one SBFD slot, in resource blocks.
struct FrameConfig {
  std::vector<Segment> segments;
  int rb_size_sc = 12;  // subcarriers per resource block
};

/// Half-open subcarrier index range [begin, end).
struct ScRange {
  int begin;
  int end;
  int length() const { return end - begin; }
};

/// Subcarrier-level view of a frame: disjoint ordered ranges whose union is
/// exactly [0, total_sc).
struct SubbandMap {
  int total_sc = 0;
  std::vector<ScRange> dl_segments;
  std::vector<ScRange> ul_segments;
  std::vector<ScRange> gb_segments;
};

/// Parses "KIND:count(,KIND:count)*" with KIND in {DL, UL, GB}.
inline FrameConfig parse_pattern(std::string_view text) {
  if (text.empty())
    throw std::invalid_argument("pattern: empty pattern");
  FrameConfig fc;
  std::size_t pos = 0;
  int token_index = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view token =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                         : comma - pos);
    ++token_index;
    const std::size_t colon = token.find(':');
    if (token.empty() || colon == std::string_view::npos)
      throw std::invalid_argument("pattern: malformed token " +
                                  std::to_string(token_index) + " '" +
                                  std::string(token) + "' (expected KIND:count)");
    const std::string_view kind_text = token.substr(0, colon);
    SegmentKind kind;
    if (kind_text == "DL") kind = SegmentKind::dl;
    else if (kind_text == "UL") kind = SegmentKind::ul;
    else if (kind_text == "GB") kind = SegmentKind::gb;
    else
      throw std::invalid_argument("pattern: unknown segment kind '" +
                                  std::string(kind_text) + "' in token " +
                                  std::to_string(token_index));
    const std::string_view count_text = token.substr(colon + 1);
    int count = 0;
    const auto [ptr, ec] =
        std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc{} || ptr != count_text.data() + count_text.size())
      throw std::invalid_argument("pattern: malformed count '" +
                                  std::string(count_text) + "' in token " +
                                  std::to_string(token_index));
    if (count < 1)
      throw std::invalid_argument("pattern: rb count must be >= 1 in token " +
                                  std::to_string(token_index));
    fc.segments.push_back({kind, count});
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return fc;
}

inline std::string format_pattern(const FrameConfig& fc) {
  std::string out;
  for (std::size_t i = 0; i < fc.segments.size(); ++i) {
    if (i) out += ',';
    out += to_string(fc.segments[i].kind);
    out += ':';
    out += std::to_string(fc.segments[i].rb_count);
  }
  return out;
}

inline int total_rb(const FrameConfig& fc) {
  int rb = 0;
  for (const auto& s : fc.segments) rb += s.rb_count;
  return rb;
}

/// Assigns subcarrier ranges left to right in segment order.
/// Validates the frame invariants: positive RB counts, at least one DL and
/// one UL segment.
inline SubbandMap build_map(const FrameConfig& fc) {
  if (fc.rb_size_sc < 1)
    throw std::invalid_argument("rb_size_sc must be >= 1");
  bool has_dl = false;
  bool has_ul = false;
  for (const auto& s : fc.segments) {
    if (s.rb_count < 1)
      throw std::invalid_argument("frame: rb count must be >= 1");
    has_dl = has_dl || s.kind == SegmentKind::dl;
    has_ul = has_ul || s.kind == SegmentKind::ul;
  }
  if (!has_dl) throw std::invalid_argument("frame: at least one DL segment required");
  if (!has_ul) throw std::invalid_argument("frame: at least one UL segment required");

  SubbandMap map;
  int sc = 0;
  for (const auto& s : fc.segments) {
    const ScRange r{sc, sc + s.rb_count * fc.rb_size_sc};
    switch (s.kind) {
      case SegmentKind::dl: map.dl_segments.push_back(r); break;
      case SegmentKind::ul: map.ul_segments.push_back(r); break;
      case SegmentKind::gb: map.gb_segments.push_back(r); break;
    }
    sc = r.end;
  }
  map.total_sc = sc;
  return map;
}

inline double occupied_bandwidth_hz(const FrameConfig& fc, double scs_hz) {
  return static_cast<double>(total_rb(fc)) * fc.rb_size_sc * scs_hz;
}

/// Throws unless the occupied grid fits the channel bandwidth (inclusive).
inline void validate_numerology(const FrameConfig& fc, double scs_hz,
                                double bandwidth_hz) {
  if (scs_hz <= 0.0) throw std::invalid_argument("scs_hz must be > 0");
  const double occupied = occupied_bandwidth_hz(fc, scs_hz);
  if (occupied > bandwidth_hz)
    throw std::invalid_argument("occupied bandwidth " + std::to_string(occupied) +
                                " Hz exceeds channel bandwidth " +
                                std::to_string(bandwidth_hz) + " Hz");
}

}  // namespace sbfdsim
