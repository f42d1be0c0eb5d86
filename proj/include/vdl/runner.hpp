// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "vdl/config.hpp"
#include "vdl/csv.hpp"
#include "vdl/datasets.hpp"
#include "vdl/errors.hpp"
#include "vdl/eval.hpp"
#include "vdl/json_io.hpp"
#include "vdl/metrics.hpp"
#include "vdl/policy.hpp"
#include "vdl/svg.hpp"
#include "vdl/trainers.hpp"
#include "vdl/version.hpp"
#include "vdl/world.hpp"

namespace vdl {

/// Fixed sub-seed indices under a run's master seed. Every random stream in
/// the pipeline gets its own derivation so no stage can perturb another.
enum class SeedStream : std::uint64_t {
  world = 0,
  sft_data = 1,
  pref_data = 2,
  sft_shuffle = 3,
  pref_shuffle = 4,
  eval_base = 5,
};

inline std::uint64_t stream_seed(std::uint64_t master, SeedStream stream) {
  return derive_seed(master, static_cast<std::uint64_t>(stream));
}

namespace detail {

inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("VDL_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::filesystem::path(cfg.output_dir);
}

inline void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
}

/// Checkpoint measurement for one phase; sampled mode derives a fresh seed
/// per (phase, step) so checkpoints are independent measurements.
inline EvalHook make_eval_hook(const World& world, const EvalConfig& eval,
                               std::uint64_t eval_seed, int phase_index) {
  if (!eval.sampled) {
    return [&world](const Policy& p, int step) { return evaluate_checkpoint(p, world, step); };
  }
  const std::uint64_t phase_seed = derive_seed(eval_seed, static_cast<std::uint64_t>(phase_index));
  const int k = eval.k;
  const double temperature = eval.temperature;
  return [&world, phase_seed, k, temperature](const Policy& p, int step) {
    const EvalMode mode =
        EvalMode::sample(k, temperature, derive_seed(phase_seed, static_cast<std::uint64_t>(step)));
    return evaluate_checkpoint(p, world, step, mode);
  };
}

inline std::string pad_index(std::size_t index, std::size_t total) {
  std::size_t width = 3;
  std::size_t digits = 1;
  for (std::size_t v = total > 0 ? total - 1 : 0; v >= 10; v /= 10) ++digits;
  if (digits > width) width = digits;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", static_cast<int>(width), index);
  return buf;
}

}  // namespace detail

/// Execute the full pipeline for one config: generate the world, run the SFT
/// phase, then the preference phase, and persist every artifact under the
/// output directory (honoring VDL_OUTPUT_DIR unless told otherwise).
/// Returns the artifact directory. A diverging trainer leaves diagnostic.txt
/// in the directory and rethrows.
inline std::filesystem::path run_experiment(const ExperimentConfig& cfg,
                                            bool honor_env = true) {
  if (!cfg.sweep.empty()) {
    throw ConfigError("config contains a sweep grid; use the sweep entry point");
  }
  const std::filesystem::path dir =
      honor_env ? detail::resolve_output_dir(cfg) : std::filesystem::path(cfg.output_dir);
  detail::make_dir(dir);

  const std::uint64_t master = cfg.master_seed;
  const World world = generate_world(
      cfg.world.n_topics, cfg.world.prompts_per_topic, cfg.world.responses_per_prompt,
      cfg.world.stance_weights, {cfg.world.length_min, cfg.world.length_max},
      stream_seed(master, SeedStream::world));
  write_text_file(dir / "world.json", save_world(world));

  const SftDataset sft_data = generate_sft_dataset(world, cfg.sft.resolved_mix(), cfg.sft.n,
                                                   stream_seed(master, SeedStream::sft_data));
  write_text_file(dir / "sft.json", save_sft(sft_data));

  PreferenceDataset pref_data =
      generate_preference_dataset(world, cfg.pref.gap, cfg.pref.alignment, cfg.pref.n,
                                  stream_seed(master, SeedStream::pref_data));
  if (cfg.pref.flip) pref_data = flip_labels(pref_data);
  write_text_file(dir / "pref.json", save_pref(pref_data));

  Policy policy = Policy::uniform(world);
  write_text_file(dir / "policy_base.json", save_policy(policy));

  const std::uint64_t eval_seed = stream_seed(master, SeedStream::eval_base);

  TrainerConfig sft_cfg = cfg.sft.trainer;
  sft_cfg.checkpoint_every = cfg.eval.checkpoint_every;
  sft_cfg.shuffle_seed = stream_seed(master, SeedStream::sft_shuffle);
  TrainerConfig pref_cfg = cfg.pref.trainer;
  pref_cfg.checkpoint_every = cfg.eval.checkpoint_every;
  pref_cfg.shuffle_seed = stream_seed(master, SeedStream::pref_shuffle);

  Trajectory sft_traj, pref_traj;
  try {
    sft_traj = train(policy, world, sft_data, sft_cfg,
                     detail::make_eval_hook(world, cfg.eval, eval_seed, 0));
    write_text_file(dir / "policy_sft.json", save_policy(policy));
    pref_traj = train(policy, world, pref_data, pref_cfg,
                      detail::make_eval_hook(world, cfg.eval, eval_seed, 1));
    write_text_file(dir / "policy_final.json", save_policy(policy));
  } catch (const TrainerDivergenceError& e) {
    write_text_file(dir / "diagnostic.txt", std::string(e.what()) + "\n");
    throw;
  }

  std::vector<TrajectoryRow> rows = trajectory_rows("sft", sft_traj, world);
  const std::vector<TrajectoryRow> pref_rows = trajectory_rows("pref", pref_traj, world);
  rows.insert(rows.end(), pref_rows.begin(), pref_rows.end());
  const std::string traj_csv = render_trajectory_csv(rows);
  write_text_file(dir / "trajectory.csv", traj_csv);

  if (sft_traj.checkpoints.size() >= 2) {
    write_text_file(dir / "drift_report_sft.csv",
                    render_drift_report_csv(drift_report(sft_traj, world, "sft")));
  }
  if (pref_traj.checkpoints.size() >= 2) {
    write_text_file(dir / "drift_report_pref.csv",
                    render_drift_report_csv(drift_report(
                        pref_traj, world, std::string(algorithm_name(cfg.pref.trainer.algorithm)))));
  }

  write_text_file(dir / "value_gap_hist.csv",
                  render_histogram_csv(value_gap_histogram(pref_data, world)));

  emit_plots(traj_csv, dir / "plots");

  ojson meta;
  meta["version"] = kVersion;
  meta["master_seed"] = cfg.master_seed;
  meta["sft_fallback_count"] = sft_data.fallback_count;
  meta["pref_flipped"] = cfg.pref.flip;
  meta["conventions"] = {
      {"drift_time_extremum",
       "candidate checkpoints exclude the start; farthest value from the start wins, "
       "ties prefer the larger value, then the earlier step"}};
  write_text_file(dir / "run_meta.json", meta.dump(2) + "\n");

  return dir;
}

/// One resolved sweep cell: the flattened config plus its grid position.
struct SweepCell {
  std::size_t index = 0;
  ExperimentConfig config;
};

/// Expand a sweep grid into per-cell configs. Axes iterate in document
/// order with the last axis fastest; cell seeds derive from (master_seed,
/// cell index) so reordering the grid never changes a cell's stream.
inline std::vector<SweepCell> expand_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep.empty()) throw ConfigError("config has no sweep grid");
  std::vector<std::string> paths;
  std::vector<std::vector<ojson>> axes;
  std::size_t total = 1;
  for (const auto& [path, values] : cfg.sweep.items()) {
    paths.push_back(path);
    axes.emplace_back(values.begin(), values.end());
    total *= axes.back().size();
  }

  ojson base = cfg.raw;
  base.erase("sweep");

  std::vector<SweepCell> cells;
  cells.reserve(total);
  for (std::size_t cell = 0; cell < total; ++cell) {
    ojson doc = base;
    std::size_t stride = total;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      stride /= axes[a].size();
      const std::size_t pick = (cell / stride) % axes[a].size();
      doc = detail::apply_override(doc, paths[a], axes[a][pick]);
    }
    ExperimentConfig cell_cfg = detail::build_config(doc);
    cell_cfg.raw = doc;
    cell_cfg.master_seed = derive_seed(cfg.master_seed, cell);
    cells.push_back({cell, std::move(cell_cfg)});
  }
  return cells;
}

/// Run every cell of a sweep under <output_dir>/cell_<index>/.
inline std::vector<std::filesystem::path> sweep_experiment(const ExperimentConfig& cfg) {
  const std::vector<SweepCell> cells = expand_sweep(cfg);
  const std::filesystem::path base_dir = detail::resolve_output_dir(cfg);
  detail::make_dir(base_dir);

  std::vector<std::filesystem::path> dirs;
  dirs.reserve(cells.size());
  for (const SweepCell& cell : cells) {
    ExperimentConfig run_cfg = cell.config;
    run_cfg.output_dir =
        (base_dir / ("cell_" + detail::pad_index(cell.index, cells.size()))).string();
    dirs.push_back(run_experiment(run_cfg, /*honor_env=*/false));
  }
  return dirs;
}

}  // namespace vdl
