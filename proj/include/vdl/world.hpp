// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vdl/rng.hpp"
#include "vdl/stance.hpp"

namespace vdl {

/// Mixture weights over the three one-hot stances; nonnegative, sum 1.
using StanceMix = std::array<double, 3>;

inline void validate_stance_mix(const StanceMix& w) {
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw std::invalid_argument("stance mix weights must be nonnegative");
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("stance mix weights must sum to 1");
  }
}

/// Canonical contested-topic names. Worlds with more topics than this cycle
/// through the list with a numeric suffix ("Discussions on Abortion 2", ...).
inline constexpr std::array<std::string_view, 11> kTopicNames = {
    "Discussions on Abortion",
    "Gender and LGBTQ+ Identity",
    "Climate Change Concerns",
    "Immigration Policies",
    "Economic and Social Policy",
    "Race and Racism",
    "Election and Political Discussions",
    "Religion and Spirituality Beliefs",
    "Ethics of Death and Penalty",
    "Work and Attitudes",
    "Family and Relationship Values",
};

inline std::string topic_name(int index) {
  if (index < 0) throw std::invalid_argument("topic index must be nonnegative");
  const std::size_t n = kTopicNames.size();
  std::string name(kTopicNames[static_cast<std::size_t>(index) % n]);
  const int round = index / static_cast<int>(n);
  if (round > 0) name += " " + std::to_string(round + 1);
  return name;
}

/// A candidate response: opaque id, a token length used for length-normalized
/// objectives, and its stance distribution (one-hot for generated worlds, but
/// any simplex point is admissible).
struct Response {
  std::string id;
  int token_length = 1;
  StanceVector stance;
};

struct Prompt {
  std::string id;
  int topic_id = 0;
  std::vector<std::string> response_ids;
};

/// A synthetic evaluation universe: topics, prompts grouped per topic, and
/// the shared response table. Ordered containers throughout so iteration
/// order (and hence every downstream artifact) is deterministic.
struct World {
  std::vector<std::string> topics;
  std::vector<std::vector<Prompt>> prompts_by_topic;  // aligned with `topics`
  std::map<std::string, Response> responses;

  int n_topics() const { return static_cast<int>(topics.size()); }

  std::size_t prompt_count() const {
    std::size_t n = 0;
    for (const auto& group : prompts_by_topic) n += group.size();
    return n;
  }

  const Response& response(const std::string& id) const {
    auto it = responses.find(id);
    if (it == responses.end()) {
      throw std::invalid_argument("unknown response id '" + id + "'");
    }
    return it->second;
  }

  const Prompt& prompt(const std::string& id) const {
    for (const auto& group : prompts_by_topic) {
      for (const auto& p : group) {
        if (p.id == id) return p;
      }
    }
    throw std::invalid_argument("unknown prompt id '" + id + "'");
  }

  /// All prompts in canonical order: topic-major, then position.
  std::vector<const Prompt*> all_prompts() const {
    std::vector<const Prompt*> out;
    out.reserve(prompt_count());
    for (const auto& group : prompts_by_topic) {
      for (const auto& p : group) out.push_back(&p);
    }
    return out;
  }

  /// Referential integrity: every prompt's topic and responses resolve,
  /// response stances are on the simplex, token lengths positive.
  void validate() const {
    if (topics.empty()) throw std::invalid_argument("world has no topics");
    if (prompts_by_topic.size() != topics.size()) {
      throw std::invalid_argument("world prompt groups do not match topics");
    }
    for (std::size_t t = 0; t < prompts_by_topic.size(); ++t) {
      for (const auto& p : prompts_by_topic[t]) {
        if (p.topic_id != static_cast<int>(t)) {
          throw std::invalid_argument("prompt '" + p.id + "' has mismatched topic id");
        }
        if (p.response_ids.empty()) {
          throw std::invalid_argument("prompt '" + p.id + "' has no responses");
        }
        for (const auto& rid : p.response_ids) {
          const Response& r = response(rid);  // throws if missing
          if (r.token_length < 1) {
            throw std::invalid_argument("response '" + rid + "' has nonpositive length");
          }
          r.stance.validate();
        }
      }
    }
  }
};

/// Generate a world with `n_topics` topics, `prompts_per_topic` prompts each
/// and `responses_per_prompt` one-hot-stance responses per prompt.
///
/// Coverage rule: the first responses of every prompt get one of each stance
/// with nonzero mixture weight (in support/neutral/oppose order), so every
/// prompt is guaranteed at least one candidate of every represented stance.
/// Remaining responses draw their stance from the mixture. Token lengths are
/// uniform on [length_range.first, length_range.second].
///
/// Ids follow "t{topic}p{prompt}" / "t{topic}p{prompt}r{response}".
inline World generate_world(int n_topics, int prompts_per_topic, int responses_per_prompt,
                            const StanceMix& stance_weights,
                            std::pair<int, int> length_range, std::uint64_t seed) {
  if (n_topics < 1 || prompts_per_topic < 1 || responses_per_prompt < 1) {
    throw std::invalid_argument("world dimensions must be positive");
  }
  validate_stance_mix(stance_weights);
  if (length_range.first < 1 || length_range.second < length_range.first) {
    throw std::invalid_argument("invalid token length range");
  }

  std::vector<Stance> forced;
  for (std::size_t s = 0; s < 3; ++s) {
    if (stance_weights[s] > 0.0) forced.push_back(static_cast<Stance>(s));
  }
  if (static_cast<int>(forced.size()) > responses_per_prompt) {
    throw std::invalid_argument(
        "responses_per_prompt too small to cover every nonzero-weight stance");
  }

  const std::vector<double> weights(stance_weights.begin(), stance_weights.end());
  const std::size_t length_span =
      static_cast<std::size_t>(length_range.second - length_range.first + 1);

  Rng rng(seed);
  World world;
  world.topics.reserve(static_cast<std::size_t>(n_topics));
  world.prompts_by_topic.resize(static_cast<std::size_t>(n_topics));
  for (int t = 0; t < n_topics; ++t) {
    world.topics.push_back(topic_name(t));
    auto& group = world.prompts_by_topic[static_cast<std::size_t>(t)];
    group.reserve(static_cast<std::size_t>(prompts_per_topic));
    for (int j = 0; j < prompts_per_topic; ++j) {
      Prompt prompt;
      prompt.id = "t" + std::to_string(t) + "p" + std::to_string(j);
      prompt.topic_id = t;
      prompt.response_ids.reserve(static_cast<std::size_t>(responses_per_prompt));
      for (int k = 0; k < responses_per_prompt; ++k) {
        Response r;
        r.id = prompt.id + "r" + std::to_string(k);
        const Stance s = k < static_cast<int>(forced.size())
                             ? forced[static_cast<std::size_t>(k)]
                             : static_cast<Stance>(rng.categorical(weights));
        r.stance = StanceVector::one_hot(s);
        r.token_length =
            length_range.first + static_cast<int>(rng.uniform_index(length_span));
        prompt.response_ids.push_back(r.id);
        world.responses.emplace(r.id, std::move(r));
      }
      group.push_back(std::move(prompt));
    }
  }
  return world;
}

}  // namespace vdl
