// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdl/datasets.hpp"
#include "vdl/errors.hpp"
#include "vdl/eval.hpp"
#include "vdl/metrics.hpp"
#include "vdl/numeric.hpp"
#include "vdl/policy.hpp"
#include "vdl/rng.hpp"
#include "vdl/world.hpp"

namespace vdl {

enum class Algorithm { sft, dpo, simpo, rlhf };

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::sft: return "sft";
    case Algorithm::dpo: return "dpo";
    case Algorithm::simpo: return "simpo";
    case Algorithm::rlhf: return "rlhf";
  }
  throw std::invalid_argument("bad algorithm enum value");
}

inline Algorithm algorithm_from_name(const std::string& name) {
  if (name == "sft") return Algorithm::sft;
  if (name == "dpo") return Algorithm::dpo;
  if (name == "simpo") return Algorithm::simpo;
  if (name == "rlhf") return Algorithm::rlhf;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (expected sft, dpo, simpo or rlhf)");
}

/// Abort threshold for any |logit| during training.
inline constexpr double kDivergenceLimit = 1e6;

/// Internal reward-model fit schedule used by the rlhf trainer.
inline constexpr int kRewardFitEpochs = 200;
inline constexpr double kRewardFitLearningRate = 0.1;

struct TrainerConfig {
  Algorithm algorithm = Algorithm::sft;
  double learning_rate = 2e-5;
  double beta = 0.1;      // preference sharpness (dpo, simpo)
  double gamma = 0.5;     // simpo target margin
  double kl_coef = 0.05;  // rlhf penalty weight
  int epochs = 3;
  int batch_size = 32;
  int checkpoint_every = 0;  // 0 resolves to max(1, total_steps / 20)
  std::uint64_t shuffle_seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be nonnegative");
    if ((algorithm == Algorithm::dpo || algorithm == Algorithm::simpo) && !(beta > 0.0)) {
      throw std::invalid_argument("beta must be positive");
    }
    if (algorithm == Algorithm::simpo && gamma < 0.0) {
      throw std::invalid_argument("gamma must be nonnegative");
    }
    if (algorithm == Algorithm::rlhf && kl_coef < 0.0) {
      throw std::invalid_argument("kl_coef must be nonnegative");
    }
  }
};

/// Stock hyperparameters per algorithm.
inline TrainerConfig default_config(Algorithm a) {
  TrainerConfig c;
  c.algorithm = a;
  switch (a) {
    case Algorithm::sft:
      c.learning_rate = 2e-5;
      break;
    case Algorithm::dpo:
      c.learning_rate = 1e-5;
      c.beta = 0.1;
      break;
    case Algorithm::simpo:
      c.learning_rate = 5e-7;
      c.beta = 2.0;
      c.gamma = 0.5;
      break;
    case Algorithm::rlhf:
      c.learning_rate = 5e-7;
      c.kl_coef = 0.05;
      break;
  }
  return c;
}

/// Learned reward table: one scalar per (prompt, candidate response), same
/// index set and candidate order as the world's policy.
class RewardModel {
 public:
  struct Row {
    std::vector<std::string> ids;
    std::vector<double> values;
  };

  static RewardModel zeros(const World& world) {
    RewardModel m;
    for (const Prompt* prompt : world.all_prompts()) {
      Row row;
      row.ids = prompt->response_ids;
      row.values.assign(row.ids.size(), 0.0);
      m.rows_.emplace(prompt->id, std::move(row));
    }
    return m;
  }

  const std::map<std::string, Row>& rows() const { return rows_; }

  const Row& row(const std::string& prompt_id) const {
    auto it = rows_.find(prompt_id);
    if (it == rows_.end()) {
      throw std::invalid_argument("reward model has no prompt '" + prompt_id + "'");
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

  double reward(const std::string& prompt_id, const std::string& response_id) const {
    const Row& r = row(prompt_id);
    return r.values[candidate_index(prompt_id, response_id)];
  }

  std::vector<double>& mutable_values(const std::string& prompt_id) {
    auto it = rows_.find(prompt_id);
    if (it == rows_.end()) {
      throw std::invalid_argument("reward model has no prompt '" + prompt_id + "'");
    }
    return it->second.values;
  }

 private:
  std::map<std::string, Row> rows_;
};

struct LossGrad {
  double value = 0.0;  // batch-mean loss (or objective, for rlhf)
  GradTable grad;
};

/// Mean negative log-likelihood of the labeled responses, with its exact
/// gradient: d/dlogit_j = (p_j - [j = y]) / batch.
inline LossGrad sft_loss_and_grad(const Policy& policy, std::span<const SftExample> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossGrad out;
  for (const auto& ex : batch) {
    const Policy::Row& row = policy.row(ex.prompt_id);
    const std::size_t y = policy.candidate_index(ex.prompt_id, ex.response_id);
    const std::vector<double> p = softmax(row.logits);
    out.value -= inv * (row.logits[y] - log_sum_exp(row.logits));
    auto& g = out.grad.row(ex.prompt_id, row.ids.size());
    for (std::size_t j = 0; j < p.size(); ++j) g[j] += inv * p[j];
    g[y] -= inv;
  }
  return out;
}

/// Mean -log sigmoid(beta * (margin vs the reference)) over pairs. Within a
/// prompt the softmax normalizers cancel, so d(margin)/dlogit_j is just
/// beta * ([j = w] - [j = l]).
inline LossGrad dpo_loss_and_grad(const Policy& policy, const ReferenceSnapshot& ref,
                                  std::span<const PreferencePair> batch, double beta) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossGrad out;
  for (const auto& pair : batch) {
    const std::size_t w = policy.candidate_index(pair.prompt_id, pair.chosen_id);
    const std::size_t l = policy.candidate_index(pair.prompt_id, pair.rejected_id);
    const double margin =
        beta * ((policy.response_logprob(pair.prompt_id, pair.chosen_id) -
                 ref.response_logprob(pair.prompt_id, pair.chosen_id)) -
                (policy.response_logprob(pair.prompt_id, pair.rejected_id) -
                 ref.response_logprob(pair.prompt_id, pair.rejected_id)));
    out.value += inv * softplus(-margin);
    const double dloss_dmargin = -sigmoid(-margin);
    auto& g = out.grad.row(pair.prompt_id, policy.row(pair.prompt_id).ids.size());
    g[w] += inv * dloss_dmargin * beta;
    g[l] -= inv * dloss_dmargin * beta;
  }
  return out;
}

/// Reference-free margin loss on length-normalized log-probs:
/// mean -log sigmoid((beta/|y_w|) log pi(y_w) - (beta/|y_l|) log pi(y_l) - gamma).
inline LossGrad simpo_loss_and_grad(const Policy& policy, const World& world,
                                    std::span<const PreferencePair> batch, double beta,
                                    double gamma) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossGrad out;
  for (const auto& pair : batch) {
    const Policy::Row& row = policy.row(pair.prompt_id);
    const std::size_t w = policy.candidate_index(pair.prompt_id, pair.chosen_id);
    const std::size_t l = policy.candidate_index(pair.prompt_id, pair.rejected_id);
    const double cw = beta / static_cast<double>(world.response(pair.chosen_id).token_length);
    const double cl = beta / static_cast<double>(world.response(pair.rejected_id).token_length);
    const double lse = log_sum_exp(row.logits);
    const double score = cw * (row.logits[w] - lse) - cl * (row.logits[l] - lse) - gamma;
    out.value += inv * softplus(-score);
    const double dloss_dscore = -sigmoid(-score);
    const std::vector<double> p = softmax(row.logits);
    auto& g = out.grad.row(pair.prompt_id, row.ids.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double dscore = cw * ((j == w ? 1.0 : 0.0) - p[j]) -
                            cl * ((j == l ? 1.0 : 0.0) - p[j]);
      g[j] += inv * dloss_dscore * dscore;
    }
  }
  return out;
}

/// Exact-expectation policy objective: mean over prompt instances of
/// E_p[r] - kl_coef * KL(p || ref). Returned gradient is the ascent
/// direction d(objective)/dlogit. Both terms are shift-invariant in the
/// logits, and the KL term vanishes identically at the reference.
inline LossGrad rlhf_objective_and_grad(const Policy& policy, const ReferenceSnapshot& ref,
                                        const RewardModel& rewards,
                                        std::span<const std::string> prompt_batch,
                                        double kl_coef) {
  if (prompt_batch.empty()) throw std::invalid_argument("empty batch");
  const double inv = 1.0 / static_cast<double>(prompt_batch.size());
  LossGrad out;
  for (const auto& pid : prompt_batch) {
    const Policy::Row& row = policy.row(pid);
    const std::vector<double> p = softmax(row.logits);
    const std::vector<double> q = ref.probs(pid);
    const RewardModel::Row& rrow = rewards.row(pid);
    if (rrow.ids != row.ids) {
      throw std::invalid_argument("reward model row for '" + pid +
                                  "' does not match the policy candidates");
    }
    double expected_reward = 0.0;
    double kl = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      expected_reward += p[j] * rrow.values[j];
      // p log p -> 0 as p -> 0, so fully starved candidates contribute nothing
      if (p[j] > 0.0) kl += p[j] * (std::log(p[j]) - std::log(q[j]));
    }
    out.value += inv * (expected_reward - kl_coef * kl);
    auto& g = out.grad.row(pid, row.ids.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] == 0.0) continue;  // the p_j log p_j terms vanish in the limit
      const double advantage = rrow.values[j] - expected_reward;
      const double kl_term = (std::log(p[j]) - std::log(q[j])) - kl;
      g[j] += inv * p[j] * (advantage - kl_coef * kl_term);
    }
  }
  return out;
}

/// Bradley-Terry logistic loss of a reward table on preference pairs:
/// mean -log sigmoid(r_chosen - r_rejected). At an all-zero table every
/// pair contributes log 2.
inline LossGrad reward_bt_loss_and_grad(const RewardModel& rewards,
                                        std::span<const PreferencePair> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossGrad out;
  for (const auto& pair : batch) {
    const RewardModel::Row& row = rewards.row(pair.prompt_id);
    const std::size_t w = rewards.candidate_index(pair.prompt_id, pair.chosen_id);
    const std::size_t l = rewards.candidate_index(pair.prompt_id, pair.rejected_id);
    const double diff = row.values[w] - row.values[l];
    out.value += inv * softplus(-diff);
    const double d = -sigmoid(-diff);
    auto& g = out.grad.row(pair.prompt_id, row.ids.size());
    g[w] += inv * d;
    g[l] -= inv * d;
  }
  return out;
}

/// Fit a reward table to `pairs` by full-batch gradient descent from zeros.
/// The fit is deterministic; `seed` is accepted for signature stability but
/// full-batch descent never consumes randomness. When `loss_curve` is given
/// it receives epochs+1 entries: the loss before each update and after the
/// last one.
inline RewardModel reward_model_fit(const World& world, const PreferenceDataset& pairs,
                                    int epochs = kRewardFitEpochs,
                                    double learning_rate = kRewardFitLearningRate,
                                    std::uint64_t seed = 0,
                                    std::vector<double>* loss_curve = nullptr) {
  (void)seed;
  if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (pairs.empty()) throw std::invalid_argument("cannot fit a reward model to no pairs");
  RewardModel model = RewardModel::zeros(world);
  if (loss_curve) loss_curve->clear();
  for (int e = 0; e < epochs; ++e) {
    const LossGrad lg = reward_bt_loss_and_grad(model, pairs);
    if (loss_curve) loss_curve->push_back(lg.value);
    for (const auto& [pid, g] : lg.grad.rows) {
      auto& values = model.mutable_values(pid);
      for (std::size_t j = 0; j < g.size(); ++j) values[j] -= learning_rate * g[j];
    }
  }
  if (loss_curve) loss_curve->push_back(reward_bt_loss_and_grad(model, pairs).value);
  return model;
}

/// Measurement callback: given the live policy and a step index, produce the
/// checkpoint snapshot. An empty hook means exact evaluation of the world.
using EvalHook = std::function<ValueSnapshot(const Policy&, int step)>;

namespace detail {

inline int resolve_cadence(const TrainerConfig& cfg, int total_steps) {
  if (cfg.checkpoint_every > 0) return cfg.checkpoint_every;
  return std::max(1, total_steps / 20);
}

inline void check_divergence(const Policy& policy, Algorithm algorithm, int step) {
  const Policy::LogitExtreme extreme = policy.max_abs_logit();
  if (std::fabs(extreme.value) > kDivergenceLimit) {
    std::ostringstream msg;
    msg << algorithm_name(algorithm) << " training diverged at step " << step
        << ": logit(" << extreme.prompt_id << ", " << extreme.response_id
        << ") = " << extreme.value << " exceeds |" << kDivergenceLimit << "|";
    throw TrainerDivergenceError(msg.str(), step, extreme.prompt_id, extreme.value);
  }
}

/// Shared minibatch loop. `step_fn(indices)` computes the update for one
/// batch and applies it to the policy.
template <typename StepFn>
Trajectory run_loop(Policy& policy, const World& world, std::size_t n,
                    const TrainerConfig& cfg, const EvalHook& hook, StepFn&& step_fn) {
  cfg.validate();
  EvalHook eval = hook;
  if (!eval) {
    eval = [&world](const Policy& p, int step) {
      return evaluate_checkpoint(p, world, step);
    };
  }
  if (n == 0) throw std::invalid_argument("training dataset is empty");

  const int steps_per_epoch =
      static_cast<int>((n + static_cast<std::size_t>(cfg.batch_size) - 1) /
                       static_cast<std::size_t>(cfg.batch_size));
  const int total_steps = cfg.epochs * steps_per_epoch;
  const int cadence = resolve_cadence(cfg, total_steps);

  Trajectory traj;
  ValueSnapshot first = eval(policy, 0);
  first.step = 0;
  traj.checkpoints.push_back(std::move(first));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(cfg.shuffle_seed);

  int step = 0;
  int last_recorded = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      step_fn(std::span<const std::size_t>(order.data() + start, stop - start));
      ++step;
      check_divergence(policy, cfg.algorithm, step);
      if ((step % cadence == 0 || step == total_steps) && step != last_recorded) {
        ValueSnapshot snap = eval(policy, step);
        snap.step = step;
        traj.checkpoints.push_back(std::move(snap));
        last_recorded = step;
      }
    }
  }
  return traj;
}

}  // namespace detail

/// Supervised fine-tuning pass over `data`. Mutates `policy` in place and
/// returns the checkpoint trajectory (hook at step 0, every cadence steps,
/// and the final step).
inline Trajectory train(Policy& policy, const World& world, const SftDataset& data,
                        const TrainerConfig& cfg, const EvalHook& hook = {}) {
  if (cfg.algorithm != Algorithm::sft) {
    throw std::invalid_argument("an sft dataset trains only with the sft algorithm");
  }
  std::vector<SftExample> batch;
  return detail::run_loop(
      policy, world, data.examples.size(), cfg, hook,
      [&](std::span<const std::size_t> idx) {
        batch.clear();
        for (std::size_t i : idx) batch.push_back(data.examples[i]);
        const LossGrad lg = sft_loss_and_grad(policy, batch);
        apply_gradient(policy, lg.grad, -cfg.learning_rate);
      });
}

/// Preference-phase pass (dpo, simpo or rlhf). The reference snapshot is
/// taken from `policy` at entry; for rlhf the reward model is fitted to
/// `data` up front with the stock internal schedule.
inline Trajectory train(Policy& policy, const World& world, const PreferenceDataset& data,
                        const TrainerConfig& cfg, const EvalHook& hook = {}) {
  if (cfg.algorithm == Algorithm::sft) {
    throw std::invalid_argument("a preference dataset cannot train with sft");
  }
  const ReferenceSnapshot ref = snapshot_reference(policy);
  RewardModel rewards;
  if (cfg.algorithm == Algorithm::rlhf) {
    rewards = reward_model_fit(world, data);
  }

  std::vector<PreferencePair> batch;
  std::vector<std::string> prompt_batch;
  return detail::run_loop(
      policy, world, data.size(), cfg, hook, [&](std::span<const std::size_t> idx) {
        LossGrad lg;
        double scale = 0.0;
        switch (cfg.algorithm) {
          case Algorithm::dpo:
            batch.clear();
            for (std::size_t i : idx) batch.push_back(data[i]);
            lg = dpo_loss_and_grad(policy, ref, batch, cfg.beta);
            scale = -cfg.learning_rate;
            break;
          case Algorithm::simpo:
            batch.clear();
            for (std::size_t i : idx) batch.push_back(data[i]);
            lg = simpo_loss_and_grad(policy, world, batch, cfg.beta, cfg.gamma);
            scale = -cfg.learning_rate;
            break;
          case Algorithm::rlhf:
            prompt_batch.clear();
            for (std::size_t i : idx) prompt_batch.push_back(data[i].prompt_id);
            lg = rlhf_objective_and_grad(policy, ref, rewards, prompt_batch, cfg.kl_coef);
            scale = cfg.learning_rate;  // ascent on the objective
            break;
          case Algorithm::sft:
            break;  // unreachable, checked above
        }
        apply_gradient(policy, lg.grad, scale);
      });
}

}  // namespace vdl
