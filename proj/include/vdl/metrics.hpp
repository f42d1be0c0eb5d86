// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdl/datasets.hpp"
#include "vdl/eval.hpp"
#include "vdl/stance.hpp"
#include "vdl/world.hpp"

namespace vdl {

/// Checkpointed value measurements over one training phase. The first
/// checkpoint is step 0 of the phase; steps increase strictly.
struct Trajectory {
  std::vector<ValueSnapshot> checkpoints;

  int n_topics() const {
    return checkpoints.empty() ? 0 : static_cast<int>(checkpoints.front().per_topic.size());
  }

  int step_span() const {
    return checkpoints.empty() ? 0 : checkpoints.back().step - checkpoints.front().step;
  }

  void validate() const {
    if (checkpoints.empty()) throw std::invalid_argument("trajectory has no checkpoints");
    if (checkpoints.front().step != 0) {
      throw std::invalid_argument("trajectory must start at step 0");
    }
    const auto& first = checkpoints.front();
    int prev = -1;
    for (const auto& c : checkpoints) {
      if (c.step <= prev) throw std::invalid_argument("trajectory steps must increase");
      prev = c.step;
      if (c.per_topic.size() != first.per_topic.size() ||
          c.per_prompt.size() != first.per_prompt.size()) {
        throw std::invalid_argument("trajectory checkpoints have inconsistent shape");
      }
      for (std::size_t t = 0; t < c.per_prompt.size(); ++t) {
        if (c.per_prompt[t].size() != first.per_prompt[t].size()) {
          throw std::invalid_argument("trajectory checkpoints have inconsistent shape");
        }
      }
    }
  }
};

namespace detail {

inline void check_topic(const Trajectory& traj, int topic_id) {
  if (topic_id < 0 || topic_id >= traj.n_topics()) {
    throw std::invalid_argument("unknown topic index " + std::to_string(topic_id));
  }
}

}  // namespace detail

/// Signed end-to-start change of the per-topic value: last checkpoint minus
/// first. Zero for a single-checkpoint trajectory.
inline double drift_magnitude(const Trajectory& traj, int topic_id, Stance stance) {
  traj.validate();
  detail::check_topic(traj, topic_id);
  const std::size_t t = static_cast<std::size_t>(topic_id);
  return traj.checkpoints.back().per_topic[t][stance] -
         traj.checkpoints.front().per_topic[t][stance];
}

struct Ci {
  double lo = 0.0;
  double hi = 0.0;
};

/// Normal-approximation 95% interval for a topic's value at one checkpoint:
/// mean +- 1.96 * s / sqrt(n), where the mean is the stored per-topic value,
/// s is the sample standard deviation (n-1 denominator) of the per-prompt
/// values in prompt order, and n is the topic's prompt count. A single
/// prompt gives a zero-width interval.
inline Ci topic_ci(const ValueSnapshot& snap, int topic_id, Stance stance) {
  const std::size_t t = static_cast<std::size_t>(topic_id);
  if (t >= snap.per_topic.size()) {
    throw std::invalid_argument("unknown topic index " + std::to_string(topic_id));
  }
  const double mean = snap.per_topic[t][stance];
  const std::size_t n = snap.per_prompt[t].size();
  if (n < 2) return {mean, mean};
  double ss = 0.0;
  for (const auto& v : snap.per_prompt[t]) {
    const double d = v[stance] - mean;
    ss += d * d;
  }
  const double s = std::sqrt(ss / static_cast<double>(n - 1));
  const double half = 1.96 * s / std::sqrt(static_cast<double>(n));
  return {mean - half, mean + half};
}

struct DriftTimeDetail {
  double time = 0.0;          // eta_ext / step_span, in (0, 1]
  int extremum_step = 0;      // step of the selected extremum checkpoint
  double extremum_value = 0;  // per-topic value there
  int eta_step = 0;           // earliest candidate step inside the CI
  Ci ci;                      // interval around the extremum value
};

/// Normalized time at which a topic's value settles near its extremum.
///
/// Candidates are the checkpoints after the first. The extremum is the
/// candidate whose value lies farthest from the first checkpoint's value;
/// ties prefer the larger value, then the earlier step. The CI is
/// topic_ci() at the extremum checkpoint, and eta_ext is the earliest
/// candidate step whose value falls inside it (bounds inclusive). The
/// result eta_ext / step_span is invariant under uniform step rescaling.
inline DriftTimeDetail drift_time_detail(const Trajectory& traj, int topic_id,
                                         Stance stance) {
  traj.validate();
  detail::check_topic(traj, topic_id);
  if (traj.checkpoints.size() < 2) {
    throw std::invalid_argument("drift time needs at least two checkpoints");
  }
  const std::size_t t = static_cast<std::size_t>(topic_id);
  const double v0 = traj.checkpoints.front().per_topic[t][stance];

  std::size_t best = 1;
  double best_dist = -1.0;
  double best_value = 0.0;
  for (std::size_t c = 1; c < traj.checkpoints.size(); ++c) {
    const double v = traj.checkpoints[c].per_topic[t][stance];
    const double dist = std::fabs(v - v0);
    if (dist > best_dist || (dist == best_dist && v > best_value)) {
      best = c;
      best_dist = dist;
      best_value = v;
    }
  }

  DriftTimeDetail out;
  out.extremum_step = traj.checkpoints[best].step;
  out.extremum_value = best_value;
  out.ci = topic_ci(traj.checkpoints[best], topic_id, stance);
  for (std::size_t c = 1; c < traj.checkpoints.size(); ++c) {
    const double v = traj.checkpoints[c].per_topic[t][stance];
    if (v >= out.ci.lo && v <= out.ci.hi) {
      out.eta_step = traj.checkpoints[c].step;
      break;
    }
  }
  out.time = static_cast<double>(out.eta_step) / static_cast<double>(traj.step_span());
  return out;
}

inline double drift_time(const Trajectory& traj, int topic_id, Stance stance) {
  return drift_time_detail(traj, topic_id, stance).time;
}

/// Distance between the stance vectors of a pair's two responses, in
/// [0, sqrt(2)].
inline double value_gap(const PreferencePair& pair, const World& world) {
  return l2_distance(world.response(pair.chosen_id).stance,
                     world.response(pair.rejected_id).stance);
}

struct Histogram {
  std::vector<double> edges;       // n_bins + 1 ascending edges
  std::vector<std::uint64_t> counts;  // n_bins
};

/// Equal-width histogram of pair value gaps over [lo, hi]; every bin is
/// half-open except the last, which also takes hi itself. Values straying
/// outside [lo, hi] by rounding are clamped to the boundary bins.
inline Histogram value_gap_histogram(const PreferenceDataset& pairs, const World& world,
                                     int n_bins = 30, double lo = 0.0,
                                     double hi = std::sqrt(2.0)) {
  if (n_bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  if (!(hi > lo)) throw std::invalid_argument("histogram range is empty");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(n_bins) + 1);
  for (int i = 0; i <= n_bins; ++i) {
    h.edges[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  h.edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (const auto& pair : pairs) {
    const double v = value_gap(pair, world);
    int idx = static_cast<int>(std::floor((v - lo) / width));
    if (idx < 0) idx = 0;
    if (idx >= n_bins) idx = n_bins - 1;
    ++h.counts[static_cast<std::size_t>(idx)];
  }
  return h;
}

/// One row per (topic, stance): end-to-end magnitude plus drift-time detail.
struct DriftReport {
  struct Row {
    int topic_id = 0;
    std::string topic;
    Stance stance = Stance::support;
    double magnitude = 0.0;
    double time = 0.0;
    double extremum_value = 0.0;
    int extremum_step = 0;
  };
  std::string algorithm;
  std::vector<Row> rows;  // topic-major, stance order support/neutral/oppose
};

inline DriftReport drift_report(const Trajectory& traj, const World& world,
                                const std::string& algorithm) {
  traj.validate();
  if (traj.n_topics() != world.n_topics()) {
    throw std::invalid_argument("trajectory topics do not match world");
  }
  DriftReport report;
  report.algorithm = algorithm;
  for (int t = 0; t < traj.n_topics(); ++t) {
    for (Stance s : kStances) {
      const DriftTimeDetail d = drift_time_detail(traj, t, s);
      report.rows.push_back({t, world.topics[static_cast<std::size_t>(t)], s,
                             drift_magnitude(traj, t, s), d.time, d.extremum_value,
                             d.extremum_step});
    }
  }
  return report;
}

}  // namespace vdl
