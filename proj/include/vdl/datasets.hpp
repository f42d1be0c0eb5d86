// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdl/errors.hpp"
#include "vdl/rng.hpp"
#include "vdl/world.hpp"

namespace vdl {

/// Discrete stance label of a response: argmax of its stance vector,
/// ties breaking toward support < neutral < oppose.
inline Stance response_label(const Response& r) { return r.stance.argmax(); }

/// Named stance mixes measured on real prompt corpora: assistant-style
/// traffic is mostly neutral, instruction-tuning data skews supportive.
inline StanceMix stance_mix_preset(const std::string& name) {
  if (name == "wildchat-like") return {0.186, 0.628, 0.186};
  if (name == "alpaca-like") return {0.619, 0.1905, 0.1905};
  throw std::invalid_argument("unknown stance mix preset '" + name +
                              "' (expected 'wildchat-like' or 'alpaca-like')");
}

struct SftExample {
  std::string prompt_id;
  std::string response_id;
};

struct SftDataset {
  std::vector<SftExample> examples;
  /// Examples where no candidate matched the drawn stance and the response
  /// fell back to a uniform draw over all candidates.
  int fallback_count = 0;
};

struct PreferencePair {
  std::string prompt_id;
  std::string chosen_id;
  std::string rejected_id;  // always distinct from chosen_id
};

using PreferenceDataset = std::vector<PreferencePair>;

/// Which stance the preference signal favors in opposed pairs.
enum class Alignment { support_aligned, oppose_aligned };

inline std::string_view alignment_name(Alignment a) {
  return a == Alignment::support_aligned ? "support_aligned" : "oppose_aligned";
}

inline Alignment alignment_from_name(const std::string& name) {
  if (name == "support_aligned") return Alignment::support_aligned;
  if (name == "oppose_aligned") return Alignment::oppose_aligned;
  throw std::invalid_argument("unknown alignment '" + name +
                              "' (expected 'support_aligned' or 'oppose_aligned')");
}

namespace detail {

/// Candidate ids of `prompt` whose label is `s`, in candidate order.
inline std::vector<const std::string*> candidates_with_label(const World& world,
                                                             const Prompt& prompt,
                                                             Stance s) {
  std::vector<const std::string*> out;
  for (const auto& rid : prompt.response_ids) {
    if (response_label(world.response(rid)) == s) out.push_back(&rid);
  }
  return out;
}

}  // namespace detail

/// Draw `n` supervised examples. Per example: a uniform prompt, a stance from
/// `target_mix`, and a uniform candidate among that prompt's responses with
/// the drawn stance label; if the prompt has none, a uniform candidate over
/// all responses (counted in fallback_count).
inline SftDataset generate_sft_dataset(const World& world, const StanceMix& target_mix,
                                       int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("dataset size must be nonnegative");
  validate_stance_mix(target_mix);
  const auto prompts = world.all_prompts();
  if (prompts.empty()) throw std::invalid_argument("world has no prompts");

  const std::vector<double> weights(target_mix.begin(), target_mix.end());
  Rng rng(seed);
  SftDataset out;
  out.examples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Prompt& prompt = *prompts[rng.uniform_index(prompts.size())];
    const Stance s = static_cast<Stance>(rng.categorical(weights));
    const auto matching = detail::candidates_with_label(world, prompt, s);
    std::string response_id;
    if (!matching.empty()) {
      response_id = *matching[rng.uniform_index(matching.size())];
    } else {
      response_id = prompt.response_ids[rng.uniform_index(prompt.response_ids.size())];
      ++out.fallback_count;
    }
    out.examples.push_back({prompt.id, response_id});
  }
  return out;
}

/// Draw `n` preference pairs. Per pair: a uniform prompt, then with
/// probability `gap` an opposed pair (chosen from the aligned stance class,
/// rejected from the opposite class), otherwise a same-stance pair: two
/// distinct responses from a stance class drawn uniformly among the classes
/// holding at least two candidates.
///
/// Infeasibility is checked up front so failures do not depend on the draw
/// sequence: every prompt must carry support and oppose candidates, and when
/// gap < 1 every prompt must have some stance class with two candidates.
inline PreferenceDataset generate_preference_dataset(const World& world, double gap,
                                                     Alignment alignment, int n,
                                                     std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("dataset size must be nonnegative");
  if (!(gap >= 0.0 && gap <= 1.0)) {
    throw std::invalid_argument("gap must lie in [0, 1]");
  }
  const auto prompts = world.all_prompts();
  if (prompts.empty()) throw std::invalid_argument("world has no prompts");

  for (const Prompt* p : prompts) {
    if (detail::candidates_with_label(world, *p, Stance::support).empty() ||
        detail::candidates_with_label(world, *p, Stance::oppose).empty()) {
      throw GenerationInfeasibleError("prompt '" + p->id +
                                      "' lacks support or oppose candidates");
    }
    if (gap < 1.0) {
      bool any_pairable = false;
      for (Stance s : kStances) {
        if (detail::candidates_with_label(world, *p, s).size() >= 2) {
          any_pairable = true;
          break;
        }
      }
      if (!any_pairable) {
        throw GenerationInfeasibleError(
            "prompt '" + p->id + "' has no stance class with two responses");
      }
    }
  }

  const Stance chosen_class =
      alignment == Alignment::support_aligned ? Stance::support : Stance::oppose;
  const Stance rejected_class =
      alignment == Alignment::support_aligned ? Stance::oppose : Stance::support;

  Rng rng(seed);
  PreferenceDataset out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Prompt& prompt = *prompts[rng.uniform_index(prompts.size())];
    PreferencePair pair;
    pair.prompt_id = prompt.id;
    if (rng.bernoulli(gap)) {
      const auto chosen = detail::candidates_with_label(world, prompt, chosen_class);
      const auto rejected = detail::candidates_with_label(world, prompt, rejected_class);
      pair.chosen_id = *chosen[rng.uniform_index(chosen.size())];
      pair.rejected_id = *rejected[rng.uniform_index(rejected.size())];
    } else {
      std::vector<Stance> eligible;
      for (Stance s : kStances) {
        if (detail::candidates_with_label(world, prompt, s).size() >= 2) {
          eligible.push_back(s);
        }
      }
      const Stance s = eligible[rng.uniform_index(eligible.size())];
      const auto pool = detail::candidates_with_label(world, prompt, s);
      const std::size_t a = rng.uniform_index(pool.size());
      std::size_t b = rng.uniform_index(pool.size() - 1);
      if (b >= a) ++b;
      pair.chosen_id = *pool[a];
      pair.rejected_id = *pool[b];
    }
    out.push_back(std::move(pair));
  }
  return out;
}

/// Swap chosen and rejected in every pair. Applying twice is the identity.
inline PreferenceDataset flip_labels(const PreferenceDataset& pairs) {
  PreferenceDataset out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.prompt_id, p.rejected_id, p.chosen_id});
  return out;
}

}  // namespace vdl
