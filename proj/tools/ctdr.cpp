// Copyright 2026 The ctdr Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ctdr/config.hpp"
#include "ctdr/errors.hpp"
#include "ctdr/pipeline.hpp"
#include "ctdr/synth.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "Config file of 'key = value' lines");
  cmd->add_option("-o,--out", opts.out_dir, "Output directory (overrides output.dir)");
  cmd->add_option("--seed", opts.seed, "Search seed (overrides tabular.seed)");
  cmd->add_flag("-v,--verbose", opts.verbose, "Debug logging");
  cmd->add_flag("-q,--quiet", opts.quiet, "Warnings and errors only");
}

ctdr::PipelineConfig load_config(const CommonOptions& opts) {
  ctdr::PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = ctdr::parse_config(ctdr::read_file(opts.config_path));
  ctdr::apply_env_overrides(cfg);
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trial-level dosing-error risk pipeline"};
  app.require_subcommand(1);
  CommonOptions opts;

  std::optional<ctdr::Stage> stage;
  for (ctdr::Stage s : ctdr::all_stages()) {
    auto* cmd = app.add_subcommand(std::string(ctdr::pipeline_stage_name(s)), "Run the stage unconditionally");
    add_common(cmd, opts);
    cmd->callback([&stage, s] { stage = s; });
  }
  bool run_all = false;
  auto* run = app.add_subcommand("run", "Run every stage, skipping ones that are up to date");
  add_common(run, opts);
  run->callback([&run_all] { run_all = true; });

  auto* config = app.add_subcommand("config", "Inspect configuration");
  config->require_subcommand(1);
  bool show_defaults = false;
  bool show_effective = false;
  config->add_subcommand("show-defaults", "Print every key with its default")->callback([&] { show_defaults = true; });
  auto* show = config->add_subcommand("show", "Print the effective configuration");
  add_common(show, opts);
  show->callback([&] { show_effective = true; });

  ctdr::SynthConfig synth_cfg;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus, term list and config");
  synth->add_option("-o,--out", synth_dir, "Directory to write into")->required();
  synth->add_option("-n,--trials", synth_cfg.n_trials, "Number of documents")->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "Generator seed")->capture_default_str();
  synth->add_option("--signal", synth_cfg.signal, "Scale of the planted effects")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ctdr::ExitCode::kUsage);
  }

  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(opts.verbose ? spdlog::level::debug : opts.quiet ? spdlog::level::warn : spdlog::level::info);
  try {
    if (show_defaults) {
      std::cout << ctdr::config_to_string(ctdr::PipelineConfig{});
    } else if (show_effective) {
      std::cout << ctdr::config_to_string(load_config(opts));
    } else if (synth->parsed()) {
      ctdr::write_synthetic_corpus(synth_cfg, synth_dir);
      spdlog::info("wrote {} documents to {}", synth_cfg.n_trials, synth_dir);
    } else if (run_all) {
      const auto outcomes = ctdr::run_all(load_config(opts));
      std::size_t skipped = 0;
      for (const auto& o : outcomes) skipped += o.skipped ? 1 : 0;
      spdlog::info("done: {} stages run, {} up to date", outcomes.size() - skipped, skipped);
    } else if (stage) {
      ctdr::run_stage(*stage, load_config(opts));
    }
  } catch (const ctdr::Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return static_cast<int>(ctdr::ExitCode::kInternal);
  }
  return 0;
}
