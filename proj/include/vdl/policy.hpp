// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdl/numeric.hpp"
#include "vdl/rng.hpp"
#include "vdl/world.hpp"

namespace vdl {

/// Tabular softmax policy: one free logit per (prompt, candidate response).
/// Candidate order within a prompt is fixed at construction and defines the
/// sampling draw order, so it is part of the deterministic surface.
class Policy {
 public:
  struct Row {
    std::vector<std::string> ids;
    std::vector<double> logits;
  };

  Policy() = default;

  /// Uniform policy over the world's candidates: all logits zero.
  static Policy uniform(const World& world) {
    Policy p;
    for (const Prompt* prompt : world.all_prompts()) {
      Row row;
      row.ids = prompt->response_ids;
      row.logits.assign(row.ids.size(), 0.0);
      p.rows_.emplace(prompt->id, std::move(row));
    }
    return p;
  }

  static Policy from_rows(std::map<std::string, Row> rows) {
    Policy p;
    p.rows_ = std::move(rows);
    for (const auto& [pid, row] : p.rows_) {
      if (row.ids.empty() || row.ids.size() != row.logits.size()) {
        throw std::invalid_argument("policy row for '" + pid + "' is malformed");
      }
    }
    return p;
  }

  const std::map<std::string, Row>& rows() const { return rows_; }
  std::size_t prompt_count() const { return rows_.size(); }

  const Row& row(const std::string& prompt_id) const {
    auto it = rows_.find(prompt_id);
    if (it == rows_.end()) {
      throw std::invalid_argument("policy has no prompt '" + prompt_id + "'");
    }
    return it->second;
  }

  std::size_t candidate_index(const std::string& prompt_id,
                              const std::string& response_id) const {
    const Row& r = row(prompt_id);
    for (std::size_t i = 0; i < r.ids.size(); ++i) {
      if (r.ids[i] == response_id) return i;
    }
    throw std::invalid_argument("prompt '" + prompt_id + "' has no candidate '" +
                                response_id + "'");
  }

  double logit(const std::string& prompt_id, const std::string& response_id) const {
    const Row& r = row(prompt_id);
    return r.logits[candidate_index(prompt_id, response_id)];
  }

  void set_logit(const std::string& prompt_id, const std::string& response_id,
                 double value) {
    Row& r = mutable_row(prompt_id);
    r.logits[candidate_index(prompt_id, response_id)] = value;
  }

  std::span<double> mutable_logits(const std::string& prompt_id) {
    return mutable_row(prompt_id).logits;
  }

  /// log pi(response | prompt) under softmax of the row's logits.
  double response_logprob(const std::string& prompt_id,
                          const std::string& response_id) const {
    const Row& r = row(prompt_id);
    const std::size_t i = candidate_index(prompt_id, response_id);
    return r.logits[i] - log_sum_exp(r.logits);
  }

  /// Candidate distribution at the given temperature, in candidate order.
  std::vector<double> probs(const std::string& prompt_id, double temperature = 1.0) const {
    return softmax(row(prompt_id).logits, temperature);
  }

  /// k independent draws from the tempered candidate distribution.
  std::vector<std::string> sample_responses(const std::string& prompt_id, int k,
                                            double temperature, std::uint64_t seed) const {
    if (k < 0) throw std::invalid_argument("sample count must be nonnegative");
    const Row& r = row(prompt_id);
    const std::vector<double> p = softmax(r.logits, temperature);
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(r.ids[rng.categorical(p)]);
    return out;
  }

  /// Largest |logit| with its location; the trainers' divergence guard.
  struct LogitExtreme {
    double value = 0.0;
    std::string prompt_id;
    std::string response_id;
  };
  LogitExtreme max_abs_logit() const {
    LogitExtreme worst;
    for (const auto& [pid, row] : rows_) {
      for (std::size_t i = 0; i < row.logits.size(); ++i) {
        if (std::fabs(row.logits[i]) >= std::fabs(worst.value)) {
          worst = {row.logits[i], pid, row.ids[i]};
        }
      }
    }
    return worst;
  }

  bool operator==(const Policy& other) const { return rows_same(other); }

 private:
  Row& mutable_row(const std::string& prompt_id) {
    auto it = rows_.find(prompt_id);
    if (it == rows_.end()) {
      throw std::invalid_argument("policy has no prompt '" + prompt_id + "'");
    }
    return it->second;
  }

  bool rows_same(const Policy& other) const {
    if (rows_.size() != other.rows_.size()) return false;
    auto a = rows_.begin();
    auto b = other.rows_.begin();
    for (; a != rows_.end(); ++a, ++b) {
      if (a->first != b->first || a->second.ids != b->second.ids ||
          a->second.logits != b->second.logits) {
        return false;
      }
    }
    return true;
  }

  std::map<std::string, Row> rows_;
};

/// Immutable copy of a policy taken at a point in time. Objectives that
/// regularize toward "where training started" read log-probs from here;
/// later mutation of the live policy cannot leak in.
class ReferenceSnapshot {
 public:
  explicit ReferenceSnapshot(const Policy& policy) : frozen_(policy) {}

  double response_logprob(const std::string& prompt_id,
                          const std::string& response_id) const {
    return frozen_.response_logprob(prompt_id, response_id);
  }

  std::vector<double> probs(const std::string& prompt_id, double temperature = 1.0) const {
    return frozen_.probs(prompt_id, temperature);
  }

  const Policy& policy() const { return frozen_; }

 private:
  Policy frozen_;
};

inline ReferenceSnapshot snapshot_reference(const Policy& policy) {
  return ReferenceSnapshot(policy);
}

/// Sparse gradient accumulator: rows appear only for prompts a batch touched,
/// each aligned with the owning table's candidate order.
struct GradTable {
  std::map<std::string, std::vector<double>> rows;

  std::vector<double>& row(const std::string& prompt_id, std::size_t arity) {
    auto it = rows.find(prompt_id);
    if (it == rows.end()) {
      it = rows.emplace(prompt_id, std::vector<double>(arity, 0.0)).first;
    }
    return it->second;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [pid, r] : rows) {
      for (double g : r) m = std::max(m, std::fabs(g));
    }
    return m;
  }
};

/// policy.logits += scale * grad for every row in the table.
inline void apply_gradient(Policy& policy, const GradTable& grad, double scale) {
  for (const auto& [pid, g] : grad.rows) {
    auto logits = policy.mutable_logits(pid);
    if (g.size() != logits.size()) {
      throw std::invalid_argument("gradient row for '" + pid + "' has wrong arity");
    }
    for (std::size_t i = 0; i < g.size(); ++i) logits[i] += scale * g[i];
  }
}

}  // namespace vdl
