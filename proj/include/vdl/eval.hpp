// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdl/policy.hpp"
#include "vdl/stance.hpp"
#include "vdl/world.hpp"

namespace vdl {

/// Stance distribution of a single response.
inline StanceVector stance_of(const World& world, const std::string& response_id) {
  return world.response(response_id).stance;
}

/// Exact prompt value: the policy-expected stance vector over the prompt's
/// candidates. A convex combination of simplex points, so itself a simplex
/// point up to rounding.
inline StanceVector prompt_value_exact(const Policy& policy, const World& world,
                                       const std::string& prompt_id) {
  const Policy::Row& row = policy.row(prompt_id);
  const std::vector<double> p = policy.probs(prompt_id);
  StanceVector value;
  for (std::size_t i = 0; i < row.ids.size(); ++i) {
    value = value + p[i] * stance_of(world, row.ids[i]);
  }
  return value;
}

/// Monte-Carlo prompt value: mean stance over k tempered samples. Matches
/// the measurement protocol used on live models (k=5, temperature 0.7).
inline StanceVector prompt_value_sampled(const Policy& policy, const World& world,
                                         const std::string& prompt_id, int k = 5,
                                         double temperature = 0.7,
                                         std::uint64_t seed = 0) {
  if (k < 1) throw std::invalid_argument("sample count must be positive");
  const auto draws = policy.sample_responses(prompt_id, k, temperature, seed);
  StanceVector value;
  for (const auto& rid : draws) value = value + stance_of(world, rid);
  return (1.0 / static_cast<double>(k)) * value;
}

/// How evaluate_checkpoint measures prompt values.
struct EvalMode {
  bool sampled = false;
  int k = 5;
  double temperature = 0.7;
  std::uint64_t seed = 0;

  static EvalMode exact() { return {}; }
  static EvalMode sample(int k, double temperature, std::uint64_t seed) {
    return {true, k, temperature, seed};
  }
};

/// Value measurements for one policy state: per-prompt stance vectors and
/// their unweighted per-topic means, tagged with the training step.
struct ValueSnapshot {
  int step = 0;
  std::vector<std::vector<StanceVector>> per_prompt;  // [topic][prompt position]
  std::vector<StanceVector> per_topic;
};

/// Measure every prompt in the world under `policy`. Sampled mode gives each
/// prompt its own stream derived from (mode.seed, global prompt index), so a
/// measurement never depends on how many prompts precede it consuming draws.
inline ValueSnapshot evaluate_checkpoint(const Policy& policy, const World& world,
                                         int step, const EvalMode& mode = EvalMode::exact()) {
  ValueSnapshot snap;
  snap.step = step;
  snap.per_prompt.resize(world.prompts_by_topic.size());
  snap.per_topic.resize(world.prompts_by_topic.size());
  std::uint64_t prompt_index = 0;
  for (std::size_t t = 0; t < world.prompts_by_topic.size(); ++t) {
    const auto& group = world.prompts_by_topic[t];
    if (group.empty()) throw std::invalid_argument("topic has no prompts");
    auto& values = snap.per_prompt[t];
    values.reserve(group.size());
    StanceVector mean;
    for (const auto& prompt : group) {
      StanceVector v =
          mode.sampled
              ? prompt_value_sampled(policy, world, prompt.id, mode.k, mode.temperature,
                                     derive_seed(mode.seed, prompt_index))
              : prompt_value_exact(policy, world, prompt.id);
      mean = mean + v;
      values.push_back(v);
      ++prompt_index;
    }
    snap.per_topic[t] = (1.0 / static_cast<double>(group.size())) * mean;
  }
  return snap;
}

}  // namespace vdl
