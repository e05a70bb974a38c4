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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "kmpc/controllers.hpp"
#include "kmpc/dynamics.hpp"
#include "kmpc/metrics.hpp"
#include "kmpc/mpc.hpp"

namespace kmpc {

inline constexpr std::string_view kVersion = "0.1.0";

/// Cart-pole stabilization experiment. Defaults reproduce the reference setup:
/// 6 s at 15 Hz, horizon 20, Q = diag(5, 0.1, 5, 0.1), R = 0.1, nominal model
/// at 75 % of the true masses and length, 20 seeded runs.
struct ExperimentConfig {
  std::string rng = "splitmix64-ctr";
  std::uint64_t base_seed = 0;
  int run_count = 20;
  double duration = 6.0;      // s
  double control_rate = 15.0;  // Hz
  int substeps = 1;           // physics RK4 steps per control period
  std::vector<std::string> controllers{"koopman", "rff", "nominal", "oracle"};

  CartPoleParams true_params{};
  double nominal_scale = 0.75;

  int horizon = 20;
  std::vector<double> q_diag{5.0, 0.1, 5.0, 0.1};
  double r = 0.1;
  double input_bound = 10.0;  // N, symmetric box
  int max_iterations = 50;
  double convergence_tol = 1e-7;
  ResidualMode residual_mode = ResidualMode::propagate;

  double eta = 0.01;
  StepSchedule schedule = StepSchedule::constant;
  double projection_radius = 10.0;
  double residual_cap = 10.0;

  RffOptions rff{};

  std::vector<double> init_low{-1.0, -0.1, -0.2, -0.1};
  std::vector<double> init_high{1.0, 0.1, 0.2, 0.1};

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  /// duration * control_rate, validated to be integral.
  int steps() const;
  double dt() const { return 1.0 / control_rate; }

  MpcConfig mpc_config() const;
  ControllerContext controller_context(std::uint64_t seed) const;
};

/// Structured-text (JSON) config. Unknown keys and ill-typed values throw
/// ConfigError naming the field; absent keys keep their defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& config);

/// seed of run i.
std::uint64_t run_seed(const ExperimentConfig& config, int run);

/// x_1 of run i, uniform in the init box, drawn from run i's own stream.
State sample_initial_state(const ExperimentConfig& config, int run);

/// Closed loop of one controller on the true plant from x_1. Controller aborts
/// are caught and mark the log as failed.
RunLog simulate_run(const ExperimentConfig& config, int run, std::string_view controller,
                    const State& x1);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunLog> logs;  // run-major, controllers in config order
  bool any_failed() const;
  std::vector<const RunLog*> logs_for(std::string_view controller) const;
};

ExperimentResult simulate(const ExperimentConfig& config);

struct RunArtifact {
  std::filesystem::path runs_csv;
  std::filesystem::path aggregate_csv;
  std::filesystem::path summary_csv;
  std::filesystem::path config_snapshot;
  std::vector<std::filesystem::path> plots;
  std::string version;
};

/// Writes runs.csv, aggregate.csv, summary.csv, config.json and the SVG plots.
RunArtifact write_artifacts(const ExperimentResult& result, const std::filesystem::path& out_dir);

/// simulate + write_artifacts.
RunArtifact run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// CSV layer. runs.csv holds one row per (run, controller, t):
//   run,controller,t,x1..x4,u,w1..w4,what1..what4,stage_cost,loss
void write_runs_csv(std::ostream& out, const std::vector<RunLog>& logs);
std::vector<RunLog> read_runs_csv(std::istream& in);
// aggregate.csv: controller,t,time,err_mean,err_min,err_max,pred_mean,pred_min,pred_max,
//   lifted_mean,lifted_min,lifted_max
void write_aggregate_csv(std::ostream& out, const std::vector<RunLog>& logs, double dt);
// summary.csv: one row per (run, controller) with the final state.
void write_summary_csv(std::ostream& out, const std::vector<RunLog>& logs);

/// Stabilization error, sample trajectory and prediction error plots.
std::vector<std::filesystem::path> write_plots(const std::vector<RunLog>& logs, double dt,
                                               const std::filesystem::path& out_dir);

}  // namespace kmpc
