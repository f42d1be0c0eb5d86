// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vdl/csv.hpp"
#include "vdl/json_io.hpp"

namespace vdl {

/// Fixed plot geometry. Every chart is a 800x500 canvas whose plot area is
/// the rectangle x in [60, 780], y in [20, 460]. Data maps affinely:
///
///   px(step)  = 60 + (step - step_min) / (step_max - step_min) * 720
///   py(value) = 20 + (1 - value) * 440        (y domain fixed to [0, 1])
///
/// A single-checkpoint series (step_max == step_min) centers at px = 420.
/// Coordinates are written with two decimals, so emitted geometry sits
/// within 0.005 px of the mapping.
struct PlotGeometry {
  static constexpr double kWidth = 800.0;
  static constexpr double kHeight = 500.0;
  static constexpr double kLeft = 60.0;
  static constexpr double kRight = 780.0;
  static constexpr double kTop = 20.0;
  static constexpr double kBottom = 460.0;

  double step_min = 0.0;
  double step_max = 0.0;

  double px(double step) const {
    if (step_max == step_min) return (kLeft + kRight) / 2.0;
    return kLeft + (step - step_min) / (step_max - step_min) * (kRight - kLeft);
  }

  double py(double value) const { return kTop + (1.0 - value) * (kBottom - kTop); }
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr std::array<std::string_view, 3> kSeriesColors = {
    "#2e7d32",  // support
    "#616161",  // neutral
    "#c62828",  // oppose
};

}  // namespace detail

/// Lowercased file-name stem: alphanumeric runs preserved, everything else
/// collapsed to single underscores.
inline std::string sanitize_name(std::string_view name) {
  std::string out;
  bool pending_sep = false;
  for (char c : name) {
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    if (alnum) {
      if (pending_sep && !out.empty()) out += '_';
      pending_sep = false;
      out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    } else {
      pending_sep = true;
    }
  }
  return out.empty() ? "topic" : out;
}

struct SeriesPoint {
  int step = 0;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Render one (phase, topic) chart: three stance series as polylines with
/// shaded confidence bands, axes and a legend. Pure text, no external assets.
inline std::string render_topic_svg(const std::string& phase, const std::string& topic,
                                    const std::array<std::vector<SeriesPoint>, 3>& series) {
  for (const auto& s : series) {
    if (s.empty()) throw std::invalid_argument("cannot plot an empty series");
  }
  PlotGeometry geo;
  geo.step_min = static_cast<double>(series[0].front().step);
  geo.step_max = geo.step_min;
  for (const auto& s : series) {
    for (const auto& pt : s) {
      geo.step_min = std::min(geo.step_min, static_cast<double>(pt.step));
      geo.step_max = std::max(geo.step_max, static_cast<double>(pt.step));
    }
  }

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
  out += "  <text x=\"60\" y=\"14\" font-family=\"sans-serif\" font-size=\"13\">" +
         detail::xml_escape(topic) + " (" + detail::xml_escape(phase) + ")</text>\n";

  // axes
  out += "  <line x1=\"60\" y1=\"460\" x2=\"780\" y2=\"460\" stroke=\"#000000\"/>\n";
  out += "  <line x1=\"60\" y1=\"20\" x2=\"60\" y2=\"460\" stroke=\"#000000\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    const double y = geo.py(v);
    out += "  <line x1=\"56\" y1=\"" + detail::fmt2(y) + "\" x2=\"60\" y2=\"" +
           detail::fmt2(y) + "\" stroke=\"#000000\"/>\n";
    out += "  <text x=\"52\" y=\"" + detail::fmt2(y + 4.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::fmt2(v) + "</text>\n";
  }
  for (const double step : {geo.step_min, geo.step_max}) {
    const double x = geo.px(step);
    out += "  <line x1=\"" + detail::fmt2(x) + "\" y1=\"460\" x2=\"" + detail::fmt2(x) +
           "\" y2=\"464\" stroke=\"#000000\"/>\n";
    out += "  <text x=\"" + detail::fmt2(x) +
           "\" y=\"478\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           std::to_string(static_cast<long long>(step)) + "</text>\n";
    if (geo.step_max == geo.step_min) break;
  }
  out += "  <text x=\"420\" y=\"494\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"11\">step</text>\n";

  // confidence bands under the lines: upper edge forward, lower edge reversed
  for (std::size_t s = 0; s < 3; ++s) {
    out += "  <polygon id=\"band-" + std::string(kStanceNames[s]) + "\" points=\"";
    for (const auto& pt : series[s]) {
      out += detail::fmt2(geo.px(static_cast<double>(pt.step))) + "," +
             detail::fmt2(geo.py(pt.ci_hi)) + " ";
    }
    for (auto it = series[s].rbegin(); it != series[s].rend(); ++it) {
      out += detail::fmt2(geo.px(static_cast<double>(it->step))) + "," +
             detail::fmt2(geo.py(it->ci_lo));
      if (std::next(it) != series[s].rend()) out += " ";
    }
    out += "\" fill=\"" + std::string(detail::kSeriesColors[s]) +
           "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
  }

  for (std::size_t s = 0; s < 3; ++s) {
    out += "  <polyline id=\"series-" + std::string(kStanceNames[s]) + "\" points=\"";
    for (std::size_t i = 0; i < series[s].size(); ++i) {
      if (i > 0) out += " ";
      out += detail::fmt2(geo.px(static_cast<double>(series[s][i].step))) + "," +
             detail::fmt2(geo.py(series[s][i].value));
    }
    out += "\" fill=\"none\" stroke=\"" + std::string(detail::kSeriesColors[s]) +
           "\" stroke-width=\"1.5\"/>\n";
  }

  // legend
  for (std::size_t s = 0; s < 3; ++s) {
    const double y = 32.0 + 16.0 * static_cast<double>(s);
    out += "  <line x1=\"690\" y1=\"" + detail::fmt2(y) + "\" x2=\"710\" y2=\"" +
           detail::fmt2(y) + "\" stroke=\"" + std::string(detail::kSeriesColors[s]) +
           "\" stroke-width=\"1.5\"/>\n";
    out += "  <text x=\"714\" y=\"" + detail::fmt2(y + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::string(kStanceNames[s]) + "</text>\n";
  }

  out += "</svg>\n";
  return out;
}

/// Emit one SVG per (phase, topic) found in a trajectory CSV. Files are
/// named <phase>_<sanitized topic>.svg inside output_dir; the list of
/// written paths is returned in emission order (phase/topic first-seen).
inline std::vector<std::filesystem::path> emit_plots(const std::string& csv_text,
                                                     const std::filesystem::path& output_dir) {
  const std::vector<TrajectoryRow> rows = parse_trajectory_csv(csv_text);

  std::vector<std::pair<std::string, std::string>> order;  // (phase, topic) first-seen
  std::map<std::pair<std::string, std::string>, std::array<std::vector<SeriesPoint>, 3>>
      charts;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.phase, r.topic);
    auto it = charts.find(key);
    if (it == charts.end()) {
      it = charts.emplace(key, std::array<std::vector<SeriesPoint>, 3>{}).first;
      order.push_back(key);
    }
    const Stance s = stance_from_name(r.stance);
    it->second[static_cast<std::size_t>(s)].push_back({r.step, r.value, r.ci_lo, r.ci_hi});
  }

  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create directory '" + output_dir.string() + "'");

  std::vector<std::filesystem::path> written;
  for (const auto& key : order) {
    const auto& series = charts.at(key);
    const std::filesystem::path file =
        output_dir / (sanitize_name(key.first) + "_" + sanitize_name(key.second) + ".svg");
    write_text_file(file, render_topic_svg(key.first, key.second, series));
    written.push_back(file);
  }
  return written;
}

inline std::vector<std::filesystem::path> emit_plots_file(
    const std::filesystem::path& trajectory_csv, const std::filesystem::path& output_dir) {
  return emit_plots(read_text_file(trajectory_csv), output_dir);
}

}  // namespace vdl
