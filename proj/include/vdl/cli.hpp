// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vdl/config.hpp"
#include "vdl/errors.hpp"
#include "vdl/json_io.hpp"
#include "vdl/metrics.hpp"
#include "vdl/runner.hpp"
#include "vdl/svg.hpp"
#include "vdl/version.hpp"

namespace vdl {

/// Entry point behind main(). `args` excludes the program name. Exit codes:
/// 0 success, 1 runtime failure (missing file, bad config, divergence),
/// 2 usage error (unknown subcommand or flag).
inline int cli(const std::vector<std::string>& args) {
  CLI::App app{"Synthetic training-dynamics workbench: stance-valued worlds, "
               "preference optimization and drift reports"};
  app.name("vdl");
  app.set_version_flag("--version", std::string("vdl ") + kVersion);

  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--seed", seed, "Override the config's master_seed")
      ->each([&seed_given](const std::string&) { seed_given = true; });

  std::string config_path, trajectory_path, out_dir, pref_path, world_path;

  CLI::App* run_cmd = app.add_subcommand("run", "Run one experiment from a JSON config");
  run_cmd->add_option("config", config_path, "Experiment config file")->required();

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Run every cell of a config's sweep grid");
  sweep_cmd->add_option("config", config_path, "Experiment config file with a sweep grid")
      ->required();

  CLI::App* plot_cmd =
      app.add_subcommand("plot", "Render SVG charts from a trajectory CSV");
  plot_cmd->add_option("trajectory", trajectory_path, "trajectory.csv file")->required();
  plot_cmd->add_option("outdir", out_dir, "Directory for the SVG files")->required();

  CLI::App* gap_cmd = app.add_subcommand(
      "gap", "Histogram the value gaps of a preference dataset (value_gap_hist.csv)");
  gap_cmd->add_option("pref", pref_path, "Preference dataset JSON")->required();
  gap_cmd->add_option("world", world_path, "World JSON the dataset refers to")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    std::cout << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (run_cmd->parsed() || sweep_cmd->parsed()) {
      ExperimentConfig cfg = parse_config(read_text_file(config_path));
      if (seed_given) cfg.master_seed = seed;
      if (run_cmd->parsed()) {
        const auto dir = run_experiment(cfg);
        std::cout << dir.string() << "\n";
      } else {
        for (const auto& dir : sweep_experiment(cfg)) std::cout << dir.string() << "\n";
      }
      return 0;
    }
    if (plot_cmd->parsed()) {
      const auto files = emit_plots_file(trajectory_path, out_dir);
      for (const auto& f : files) std::cout << f.string() << "\n";
      return 0;
    }
    if (gap_cmd->parsed()) {
      const World world = load_world(read_text_file(world_path));
      const PreferenceDataset pairs = load_pref(read_text_file(pref_path));
      const std::filesystem::path out = "value_gap_hist.csv";
      write_text_file(out, render_histogram_csv(value_gap_histogram(pairs, world)));
      std::cout << out.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::cerr << app.help();
  return 2;
}

}  // namespace vdl
