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

#include "kmpc/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kmpc/rng.hpp"

namespace kmpc {

namespace {

constexpr std::uint64_t kInitStream = 0;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::uint64_t run_seed(const ExperimentConfig& config, int run) {
  return config.base_seed + static_cast<std::uint64_t>(run);
}

State sample_initial_state(const ExperimentConfig& config, int run) {
  CounterRng rng(run_seed(config, run), kInitStream);
  State x(4);
  for (int i = 0; i < 4; ++i) x[i] = rng.uniform(config.init_low[i], config.init_high[i]);
  return x;
}

RunLog simulate_run(const ExperimentConfig& config, int run, std::string_view controller,
                    const State& x1) {
  RunLog log;
  log.run = run;
  log.seed = run_seed(config, run);
  log.controller = std::string(controller);
  log.scale = config.nominal_scale;
  log.dt = config.dt();

  const ControllerContext ctx = config.controller_context(log.seed);
  const MpcConfig& mpc = ctx.mpc;
  const int steps = config.steps();
  log.steps.reserve(static_cast<std::size_t>(steps));

  State x = x1;
  try {
    auto policy = make_controller(controller, ctx);
    for (int t = 1; t <= steps; ++t) {
      const ControlInput u = policy->step(t, x);
      const State x_next = ctx.true_plant.step(x, u);
      policy->observe(u, x_next);
      const StepInfo& info = policy->info();
      StepRecord rec;
      rec.t = t;
      rec.x = x;
      rec.u = u;
      rec.w = info.observed_residual;
      rec.w_hat = info.predicted_residual;
      rec.lifted_error = info.lifted_error;
      rec.stage_cost = stage_cost(mpc, x, u);
      rec.loss = info.loss;
      rec.iterations = info.iterations;
      rec.converged = info.converged;
      log.steps.push_back(std::move(rec));
      x = x_next;
    }
    log.final_state = x;
  } catch (const std::exception& e) {
    log.failed = true;
    log.failure = e.what();
  }
  return log;
}

bool ExperimentResult::any_failed() const {
  for (const RunLog& log : logs) {
    if (log.failed) return true;
  }
  return false;
}

std::vector<const RunLog*> ExperimentResult::logs_for(std::string_view controller) const {
  std::vector<const RunLog*> out;
  for (const RunLog& log : logs) {
    if (log.controller == controller) out.push_back(&log);
  }
  return out;
}

ExperimentResult simulate(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  for (int run = 0; run < config.run_count; ++run) {
    const State x1 = sample_initial_state(config, run);
    for (const std::string& name : config.controllers) {
      result.logs.push_back(simulate_run(config, run, name, x1));
    }
  }
  return result;
}

void write_runs_csv(std::ostream& out, const std::vector<RunLog>& logs) {
  out << "run,controller,t,x1,x2,x3,x4,u,w1,w2,w3,w4,what1,what2,what3,what4,stage_cost,loss\n";
  for (const RunLog& log : logs) {
    for (const StepRecord& s : log.steps) {
      out << log.run << ',' << log.controller << ',' << s.t;
      for (Eigen::Index i = 0; i < 4; ++i) out << ',' << num(s.x[i]);
      out << ',' << num(s.u[0]);
      for (Eigen::Index i = 0; i < 4; ++i) out << ',' << num(s.w[i]);
      for (Eigen::Index i = 0; i < 4; ++i) out << ',' << num(s.w_hat[i]);
      out << ',' << num(s.stage_cost) << ',' << num(s.loss) << '\n';
    }
  }
}

std::vector<RunLog> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("run,controller,t,", 0) != 0) {
    throw ContractError("runs.csv: missing or unexpected header");
  }
  std::vector<RunLog> logs;
  std::map<std::pair<int, std::string>, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 18) {
      throw ContractError("runs.csv: line " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " fields, expected 18");
    }
    const int run = std::stoi(cells[0]);
    const auto key = std::make_pair(run, cells[1]);
    auto it = index.find(key);
    if (it == index.end()) {
      RunLog log;
      log.run = run;
      log.controller = cells[1];
      logs.push_back(std::move(log));
      it = index.emplace(key, logs.size() - 1).first;
    }
    StepRecord s;
    s.t = std::stoi(cells[2]);
    s.x.resize(4);
    s.u.resize(1);
    s.w.resize(4);
    s.w_hat.resize(4);
    for (int i = 0; i < 4; ++i) s.x[i] = std::stod(cells[3 + i]);
    s.u[0] = std::stod(cells[7]);
    for (int i = 0; i < 4; ++i) s.w[i] = std::stod(cells[8 + i]);
    for (int i = 0; i < 4; ++i) s.w_hat[i] = std::stod(cells[12 + i]);
    s.lifted_error = s.w - s.w_hat;
    s.stage_cost = std::stod(cells[16]);
    s.loss = std::stod(cells[17]);
    logs[it->second].steps.push_back(std::move(s));
  }
  return logs;
}

namespace {

std::vector<std::string> controller_order(const std::vector<RunLog>& logs) {
  std::vector<std::string> names;
  for (const RunLog& log : logs) {
    bool seen = false;
    for (const auto& n : names) seen = seen || n == log.controller;
    if (!seen) names.push_back(log.controller);
  }
  return names;
}

// Completed logs of one controller, truncated to the shortest length.
std::vector<std::vector<double>> collect(const std::vector<RunLog>& logs, const std::string& name,
                                         std::vector<double> (*metric)(const RunLog&)) {
  std::vector<std::vector<double>> series;
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const RunLog& log : logs) {
    if (log.controller != name || log.failed) continue;
    series.push_back(metric(log));
    len = std::min(len, series.back().size());
  }
  for (auto& s : series) s.resize(len);
  return series;
}

}  // namespace

void write_aggregate_csv(std::ostream& out, const std::vector<RunLog>& logs, double dt) {
  out << "controller,t,time,err_mean,err_min,err_max,pred_mean,pred_min,pred_max,"
         "lifted_mean,lifted_min,lifted_max\n";
  for (const std::string& name : controller_order(logs)) {
    const Band err = aggregate(collect(logs, name, &stabilization_error));
    const Band pred = aggregate(collect(logs, name, &prediction_error));
    const Band lifted = aggregate(collect(logs, name, &lifted_prediction_error));
    for (std::size_t i = 0; i < err.mean.size(); ++i) {
      out << name << ',' << (i + 1) << ',' << num(static_cast<double>(i) * dt) << ','
          << num(err.mean[i]) << ',' << num(err.min[i]) << ',' << num(err.max[i]) << ','
          << num(pred.mean[i]) << ',' << num(pred.min[i]) << ',' << num(pred.max[i]) << ','
          << num(lifted.mean[i]) << ',' << num(lifted.min[i]) << ',' << num(lifted.max[i]) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<RunLog>& logs) {
  out << "run,controller,seed,scale,steps,failed,final_x1,final_x2,final_x3,final_x4,"
         "final_sq_error,total_cost,unconverged_steps\n";
  for (const RunLog& log : logs) {
    double total = 0.0;
    int unconverged = 0;
    for (const StepRecord& s : log.steps) {
      total += s.stage_cost;
      unconverged += s.converged ? 0 : 1;
    }
    out << log.run << ',' << log.controller << ',' << log.seed << ',' << num(log.scale) << ','
        << log.steps.size() << ',' << (log.failed ? 1 : 0);
    for (Eigen::Index i = 0; i < 4; ++i) {
      out << ',' << (log.final_state.size() == 4 ? num(log.final_state[i]) : std::string("nan"));
    }
    out << ',' << num(final_stabilization_error(log)) << ',' << num(total) << ',' << unconverged
        << '\n';
  }
}

RunArtifact write_artifacts(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunArtifact art;
  art.version = std::string(kVersion);
  art.runs_csv = out_dir / "runs.csv";
  art.aggregate_csv = out_dir / "aggregate.csv";
  art.summary_csv = out_dir / "summary.csv";
  art.config_snapshot = out_dir / "config.json";
  {
    auto out = open_out(art.runs_csv);
    write_runs_csv(out, result.logs);
  }
  {
    auto out = open_out(art.aggregate_csv);
    write_aggregate_csv(out, result.logs, result.config.dt());
  }
  {
    auto out = open_out(art.summary_csv);
    write_summary_csv(out, result.logs);
  }
  {
    auto out = open_out(art.config_snapshot);
    out << dump_config(result.config);
  }
  {
    auto out = open_out(out_dir / "VERSION");
    out << "kmpc " << kVersion << '\n';
  }
  art.plots = write_plots(result.logs, result.config.dt(), out_dir);
  return art;
}

RunArtifact run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  return write_artifacts(simulate(config), out_dir);
}

}  // namespace kmpc
