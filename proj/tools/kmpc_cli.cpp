/*
 Copyright 2026 The kmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// kmpc run | plot | check
//
// Exit codes: 0 success, 1 runtime failure (a run aborted, a check failed),
// 2 usage or configuration error.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "kmpc/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

struct RunOptions {
  std::string config_path;
  std::string out_dir = "results";
  std::optional<double> scale;
  std::vector<std::string> controllers;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<double> duration;
  std::string residual_mode;
};

int do_run(const RunOptions& opt) {
  kmpc::ExperimentConfig config;
  try {
    if (!opt.config_path.empty()) config = kmpc::load_config(opt.config_path);
    if (opt.scale) config.nominal_scale = *opt.scale;
    if (!opt.controllers.empty()) config.controllers = opt.controllers;
    if (opt.seed) config.base_seed = *opt.seed;
    if (opt.runs) config.run_count = *opt.runs;
    if (opt.duration) config.duration = *opt.duration;
    if (!opt.residual_mode.empty()) {
      try {
        config.residual_mode = kmpc::residual_mode_from_string(opt.residual_mode);
      } catch (const kmpc::ContractError& e) {
        throw kmpc::ConfigError("mpc.residual_mode", e.what());
      }
    }
    config.validate();
  } catch (const kmpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }

  const kmpc::ExperimentResult result = kmpc::simulate(config);
  const kmpc::RunArtifact art = kmpc::write_artifacts(result, opt.out_dir);
  for (const std::string& name : config.controllers) {
    int ok = 0, aborted = 0;
    double mean = 0.0;
    for (const kmpc::RunLog* log : result.logs_for(name)) {
      if (log->failed) {
        ++aborted;
        continue;
      }
      const double e = kmpc::final_stabilization_error(*log);
      mean += e;
      ok += e < 0.05 ? 1 : 0;
    }
    const int done = config.run_count - aborted;
    std::printf("%-8s final ||x||^2 mean %.4g, %d/%d below 0.05, %d aborted\n", name.c_str(),
                done > 0 ? mean / done : 0.0, ok, config.run_count, aborted);
  }
  for (const kmpc::RunLog& log : result.logs) {
    if (log.failed) {
      std::fprintf(stderr, "run %d (%s) aborted: %s\n", log.run, log.controller.c_str(),
                   log.failure.c_str());
    }
  }
  std::printf("wrote %s\n", art.runs_csv.parent_path().string().c_str());
  return result.any_failed() ? kRuntimeFailure : kOk;
}

int do_plot(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::ifstream runs(root / "runs.csv");
  if (!runs) {
    std::cerr << "plot: cannot open " << (root / "runs.csv").string() << '\n';
    return kUsage;
  }
  double dt = kmpc::ExperimentConfig{}.dt();
  if (std::filesystem::exists(root / "config.json")) {
    try {
      dt = kmpc::load_config(root / "config.json").dt();
    } catch (const kmpc::ConfigError& e) {
      std::cerr << "plot: config error: " << e.what() << '\n';
      return kUsage;
    }
  }
  std::vector<kmpc::RunLog> logs;
  try {
    logs = kmpc::read_runs_csv(runs);
  } catch (const std::exception& e) {
    std::cerr << "plot: " << e.what() << '\n';
    return kUsage;
  }
  for (const auto& p : kmpc::write_plots(logs, dt, root)) std::printf("wrote %s\n", p.c_str());
  return kOk;
}

int do_check(const std::vector<std::string>& only, bool list) {
  if (list) {
    for (const auto& c : kmpc::acceptance::all_checks()) {
      std::printf("%-18s %s\n", c.name.c_str(), c.description.c_str());
    }
    return kOk;
  }
  try {
    return kmpc::acceptance::run_checks(only, std::cout) ? kOk : kRuntimeFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "check: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online Koopman residual learning with MPC on a cart-pole"};
  app.set_version_flag("--version", std::string(kmpc::kVersion));
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Simulate an experiment and write CSVs and plots");
  run_cmd->add_option("config", run.config_path, "JSON config (defaults when omitted)");
  run_cmd->add_option("-o,--out", run.out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--scale", run.scale, "Nominal model scale factor");
  run_cmd->add_option("--controllers", run.controllers, "koopman, rff, nominal, oracle")
      ->delimiter(',');
  run_cmd->add_option("--seeds", run.seed, "Base seed; run i uses base + i");
  run_cmd->add_option("--runs", run.runs, "Number of seeded runs");
  run_cmd->add_option("--duration", run.duration, "Episode length in seconds");
  run_cmd->add_option("--residual-mode", run.residual_mode, "propagate or hold_constant");

  std::string plot_dir;
  auto* plot_cmd = app.add_subcommand("plot", "Regenerate plots from an existing run directory");
  plot_cmd->add_option("dir", plot_dir, "Directory holding runs.csv")->required();

  std::vector<std::string> only;
  bool list = false;
  auto* check_cmd = app.add_subcommand("check", "Run the acceptance checks");
  check_cmd->add_option("--only", only, "Run only the named checks")->delimiter(',');
  check_cmd->add_flag("--list", list, "List the checks and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return do_run(run);
    if (*plot_cmd) return do_plot(plot_dir);
    if (*check_cmd) return do_check(only, list);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}
