// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdl/metrics.hpp"
#include "vdl/numeric.hpp"

namespace vdl {

namespace detail {

inline std::string csv_field(std::string_view s) {
  const bool needs_quotes = s.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                ": unterminated quoted field");
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline double parse_double_field(const std::string& s, std::size_t lineno) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                ": bad numeric field '" + s + "'");
  }
  return v;
}

inline int parse_int_field(const std::string& s, std::size_t lineno) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                ": bad integer field '" + s + "'");
  }
  return static_cast<int>(v);
}

}  // namespace detail

inline constexpr std::string_view kTrajectoryHeader =
    "phase,step,topic,stance,value,ci_lo,ci_hi";
inline constexpr std::string_view kDriftReportHeader =
    "algorithm,topic,stance,magnitude,time,extremum_value,extremum_step";
inline constexpr std::string_view kHistogramHeader = "bin_lo,bin_hi,count";

struct TrajectoryRow {
  std::string phase;
  int step = 0;
  std::string topic;
  std::string stance;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Flatten one phase's trajectory to rows: checkpoint-major, then topic,
/// then stance. Values and interval bounds carry 17 significant digits.
inline std::vector<TrajectoryRow> trajectory_rows(const std::string& phase,
                                                  const Trajectory& traj,
                                                  const World& world) {
  traj.validate();
  if (traj.n_topics() != world.n_topics()) {
    throw std::invalid_argument("trajectory topics do not match world");
  }
  std::vector<TrajectoryRow> rows;
  for (const auto& snap : traj.checkpoints) {
    for (int t = 0; t < world.n_topics(); ++t) {
      for (Stance s : kStances) {
        const Ci ci = topic_ci(snap, t, s);
        rows.push_back({phase, snap.step, world.topics[static_cast<std::size_t>(t)],
                        std::string(stance_name(s)),
                        snap.per_topic[static_cast<std::size_t>(t)][s], ci.lo, ci.hi});
      }
    }
  }
  return rows;
}

inline std::string render_trajectory_csv(std::span<const TrajectoryRow> rows) {
  std::string out{kTrajectoryHeader};
  out += '\n';
  for (const auto& r : rows) {
    out += detail::csv_field(r.phase);
    out += ',';
    out += std::to_string(r.step);
    out += ',';
    out += detail::csv_field(r.topic);
    out += ',';
    out += r.stance;
    out += ',';
    out += format_g17(r.value);
    out += ',';
    out += format_g17(r.ci_lo);
    out += ',';
    out += format_g17(r.ci_hi);
    out += '\n';
  }
  return out;
}

inline std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));
  if (lines.empty() || lines[0] != kTrajectoryHeader) {
    throw std::invalid_argument("trajectory csv: missing or wrong header (expected '" +
                                std::string(kTrajectoryHeader) + "')");
  }
  std::vector<TrajectoryRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = detail::split_csv_line(lines[i], i + 1);
    if (f.size() != 7) {
      throw std::invalid_argument("csv line " + std::to_string(i + 1) + ": expected 7 fields, got " +
                                  std::to_string(f.size()));
    }
    TrajectoryRow r;
    r.phase = f[0];
    r.step = detail::parse_int_field(f[1], i + 1);
    r.topic = f[2];
    r.stance = f[3];
    r.value = detail::parse_double_field(f[4], i + 1);
    r.ci_lo = detail::parse_double_field(f[5], i + 1);
    r.ci_hi = detail::parse_double_field(f[6], i + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string render_drift_report_csv(const DriftReport& report) {
  std::string out{kDriftReportHeader};
  out += '\n';
  for (const auto& r : report.rows) {
    out += detail::csv_field(report.algorithm);
    out += ',';
    out += detail::csv_field(r.topic);
    out += ',';
    out += stance_name(r.stance);
    out += ',';
    out += format_g17(r.magnitude);
    out += ',';
    out += format_g17(r.time);
    out += ',';
    out += format_g17(r.extremum_value);
    out += ',';
    out += std::to_string(r.extremum_step);
    out += '\n';
  }
  return out;
}

inline std::string render_histogram_csv(const Histogram& hist) {
  std::string out{kHistogramHeader};
  out += '\n';
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out += format_g17(hist.edges[i]);
    out += ',';
    out += format_g17(hist.edges[i + 1]);
    out += ',';
    out += std::to_string(hist.counts[i]);
    out += '\n';
  }
  return out;
}

}  // namespace vdl
