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

#include "checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "kmpc/harness.hpp"
#include "kmpc/rng.hpp"
#include "oracles.hpp"

namespace kmpc::acceptance {

namespace {

std::string sci(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Eigen::VectorXd flatten(const KoopmanModel& m) {
  Eigen::VectorXd v(m.a.size() + m.b.size());
  v << Eigen::Map<const Eigen::VectorXd>(m.a.data(), m.a.size()),
      Eigen::Map<const Eigen::VectorXd>(m.b.data(), m.b.size());
  return v;
}

KoopmanModel unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index a_cols,
                       Eigen::Index b_cols) {
  KoopmanModel m;
  m.a = Eigen::Map<const Matrix>(v.data(), rows, a_cols);
  m.b = Eigen::Map<const Matrix>(v.data() + rows * a_cols, rows, b_cols);
  return m;
}

// Entries uniform on [-scale, scale].
Vector random_vector(CounterRng& rng, Eigen::Index n, double scale) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

Matrix random_matrix(CounterRng& rng, Eigen::Index r, Eigen::Index c, double scale) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-scale, scale);
  }
  return m;
}

CheckResult gradient_oracle() {
  Timer timer;
  const ObservableSet obs = cartpole_observables();
  CounterRng rng(20260, 7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    KoopmanModel model{random_matrix(rng, 4, 4, 1.0), random_matrix(rng, 4, 9, 1.0)};
    const Residual w_prev = random_vector(rng, 4, 1.0);
    const Residual w_curr = random_vector(rng, 4, 1.0);
    const Features z = random_vector(rng, 5, 1.0);
    const ModelGradient g = gradient(model, obs, w_prev, z, w_curr);
    const Eigen::VectorXd analytic = flatten(KoopmanModel{g.da, g.db});
    const Eigen::VectorXd numeric = oracle::central_difference(
        [&](const Eigen::VectorXd& v) {
          return loss(unflatten(v, 4, 4, 9), obs, w_prev, z, w_curr);
        },
        flatten(model), 1e-5);
    const double rel = (analytic - numeric).norm() / std::max(numeric.norm(), 1e-300);
    worst = std::max(worst, rel);
  }
  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = worst < 1e-6 && r.seconds < 1.0;
  r.measured = "max rel err " + sci(worst) + " over 100 instances";
  r.tolerance = "< 1e-06, runtime < 1 s";
  return r;
}

CheckResult solver_oracle() {
  Timer timer;
  CounterRng rng(31, 3);
  // Double integrator with a random mass, sampled weights and initial state.
  const double mass = rng.uniform(0.5, 2.0);
  const double dt = rng.uniform(0.05, 0.2);
  Matrix a(2, 2), b(2, 1);
  a << 0.0, 1.0, 0.0, 0.0;
  b << 0.0, 1.0 / mass;
  MpcConfig config;
  config.horizon = 20;
  config.q = Vector(Eigen::Vector2d(rng.uniform(0.5, 5.0), rng.uniform(0.1, 1.0))).asDiagonal();
  config.r = Matrix::Constant(1, 1, rng.uniform(0.05, 1.0));
  config.input_low = Vector::Constant(1, -1e6);
  config.input_high = Vector::Constant(1, 1e6);
  config.max_iterations = 50;
  config.convergence_tol = 1e-12;
  State x0(2);
  x0 << rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0);

  const Plant plant = make_linear_plant(a, b, dt);
  const TrajectorySolution sol = solve_nominal(config, plant, x0);
  Matrix m, n;
  oracle::rk4_linear_map(a, b, dt, m, n);
  const double expected = oracle::riccati_cost(m, n, config.q, config.r, x0, config.horizon);
  const double rel = std::abs(sol.cost - expected) / std::abs(expected);

  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = rel < 1e-6 && r.seconds < 1.0;
  r.measured = "rel cost gap " + sci(rel) + " (iLQR " + sci(sol.cost) + ", Riccati " +
               sci(expected) + ")";
  r.tolerance = "< 1e-06, runtime < 1 s";
  return r;
}

CheckResult integrator_order() {
  Timer timer;
  const CartPoleParams params;
  const oracle::CartPoleReference reference{params.cart_mass, params.pole_mass,
                                            params.half_length, params.gravity};
  const std::array<double, 4> s0{0.1, 0.2, 0.6, -0.4};
  const double force = 2.0;
  const auto exact = reference.integrate(s0, force, 1.0, 1000000);

  auto error_at = [&](int steps_per_second) {
    const Plant plant = make_cartpole_plant(params, 1.0 / steps_per_second);
    State x = Eigen::Map<const Eigen::Vector4d>(s0.data());
    const ControlInput u = ControlInput::Constant(1, force);
    for (int i = 0; i < steps_per_second; ++i) x = plant.step(x, u);
    return (x - Eigen::Map<const Eigen::Vector4d>(exact.data())).norm();
  };
  const double coarse = error_at(15);
  const double fine = error_at(30);
  const double factor = coarse / fine;

  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = factor >= 12.0;
  r.measured = "error ratio " + sci(factor) + " (dt=1/15: " + sci(coarse) + ", dt=1/30: " +
               sci(fine) + ")";
  r.tolerance = ">= 12";
  return r;
}

bool stabilized(const RunLog& log, double threshold) {
  if (log.failed) return false;
  const double e = final_stabilization_error(log);
  return std::isfinite(e) && e < threshold;
}

CheckResult no_mismatch() {
  Timer timer;
  ExperimentConfig config;
  config.nominal_scale = 1.0;
  config.controllers = {"nominal"};
  const ExperimentResult result = simulate(config);
  int ok = 0;
  double worst = 0.0;
  for (const RunLog& log : result.logs) {
    ok += stabilized(log, 1e-3) ? 1 : 0;
    worst = std::max(worst, log.failed ? INFINITY : final_stabilization_error(log));
  }
  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = ok == config.run_count;
  r.measured = std::to_string(ok) + "/" + std::to_string(config.run_count) +
               " runs stabilized, worst ||x_T||^2 " + sci(worst);
  r.tolerance = "all 20 runs < 1e-03 by t = 6 s";
  return r;
}

// Mean over completed runs of the per-run window mean of `metric`.
double window_average(const ExperimentResult& result, const std::string& controller,
                      std::vector<double> (*metric)(const RunLog&), double seconds) {
  double total = 0.0;
  int count = 0;
  for (const RunLog* log : result.logs_for(controller)) {
    if (log->failed) return INFINITY;
    const std::vector<double> v = metric(*log);
    const auto window = static_cast<std::size_t>(std::lround(seconds / result.config.dt()));
    const std::size_t begin = v.size() > window ? v.size() - window : 0;
    total += window_mean(v, begin, v.size());
    ++count;
  }
  return count == 0 ? INFINITY : total / count;
}

CheckResult mismatch_75() {
  Timer timer;
  ExperimentConfig config;
  config.nominal_scale = 0.75;
  config.controllers = {"koopman", "rff", "nominal"};
  const ExperimentResult result = simulate(config);

  int koopman_ok = 0;
  for (const RunLog* log : result.logs_for("koopman")) koopman_ok += stabilized(*log, 0.05);
  const double err_k = window_average(result, "koopman", &stabilization_error, 1.0);
  const double err_r = window_average(result, "rff", &stabilization_error, 1.0);
  const double err_n = window_average(result, "nominal", &stabilization_error, 1.0);
  const double pred_k = window_average(result, "koopman", &prediction_error, 2.0);
  const double zero_n = window_average(result, "nominal", &residual_norm, 2.0);

  const bool a = koopman_ok == config.run_count;
  const bool b = err_k <= err_r && err_r <= err_n;
  const bool c = pred_k < 0.5 * zero_n;
  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = a && b && c && r.seconds < 300.0;
  r.measured = std::string("(a) ") + (a ? "ok" : "FAIL") + " koopman " +
               std::to_string(koopman_ok) + "/20 < 0.05; (b) " + (b ? "ok" : "FAIL") +
               " final-1s error koopman " + sci(err_k) + " rff " + sci(err_r) + " nominal " +
               sci(err_n) + "; (c) " + (c ? "ok" : "FAIL") + " koopman pred err " +
               sci(pred_k) + " vs nominal ||w|| " + sci(zero_n);
  r.tolerance = "(a) all runs; (b) ordered; (c) ratio < 0.5; runtime < 300 s";
  return r;
}

CheckResult mismatch_55() {
  Timer timer;
  ExperimentConfig config;
  config.nominal_scale = 0.55;
  config.residual_mode = ResidualMode::propagate;
  config.controllers = {"koopman", "rff"};
  const ExperimentResult result = simulate(config);
  auto failures = [&](const char* name) {
    int n = 0;
    for (const RunLog* log : result.logs_for(name)) n += stabilized(*log, 0.1) ? 0 : 1;
    return n;
  };
  const int fail_k = failures("koopman");
  const int fail_r = failures("rff");
  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = (config.run_count - fail_k) >= 18 && fail_k <= fail_r;
  r.measured = "koopman " + std::to_string(config.run_count - fail_k) +
               "/20 stabilized; failures koopman " + std::to_string(fail_k) + ", rff " +
               std::to_string(fail_r);
  r.tolerance = ">= 18/20 runs < 0.1, koopman failures <= rff failures";
  return r;
}

CheckResult estimation_regret_growth() {
  Timer timer;
  constexpr int kSteps = 10000;
  const ObservableSet obs = cartpole_observables();
  CounterRng rng(4242, 11);

  // Ground-truth parameter inside the ball: stable A, moderate B.
  KoopmanModel truth{0.5 * Matrix::Identity(4, 4) + random_matrix(rng, 4, 4, 0.05),
                     random_matrix(rng, 4, 9, 0.1)};
  const double radius = 10.0;

  // Synthetic plant: a stable linear state driven by random inputs supplies
  // the features; the residual follows the lifted-linear model exactly.
  Matrix drive = 0.9 * Matrix::Identity(4, 4);
  State x = State::Zero(4);
  Residual w_prev = Residual::Zero(4);
  OgdLearner learner(obs, 1.0 / std::sqrt(static_cast<double>(kSteps)), radius);
  std::vector<EstimationSample> samples;
  samples.reserve(kSteps);
  for (int t = 0; t < kSteps; ++t) {
    const ControlInput u = ControlInput::Constant(1, rng.uniform(-2.0, 2.0));
    const Features z = make_features(x, u);
    const Residual w = predict_residual(truth, obs, w_prev, z);
    const OgdLearner::Update up = learner.update(z, w);
    samples.push_back({w_prev, z, w, up.loss});
    w_prev = w;
    x = drive * x + random_vector(rng, 4, 0.5);
  }
  const EstimationRegret est = estimation_regret(samples, obs, radius);
  const double exponent = sublinearity_exponent(est.cumulative);

  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = std::isfinite(exponent) && exponent < 0.6;
  r.measured = "growth exponent " + sci(exponent) + ", regret at T " + sci(est.regret) +
               ", comparator norm " + sci(est.comparator.norm());
  r.tolerance = "< 0.6 over T = 10000";
  return r;
}

CheckResult dynamic_regret_growth() {
  Timer timer;
  ExperimentConfig config;
  config.nominal_scale = 0.75;
  config.duration = 60.0;
  config.controllers = {"koopman", "oracle"};
  const ExperimentResult result = simulate(config);

  std::vector<double> mean_gap;
  int runs = 0;
  bool aborted = false;
  for (int run = 0; run < config.run_count; ++run) {
    const RunLog& alg = result.logs[static_cast<std::size_t>(2 * run)];
    const RunLog& ref = result.logs[static_cast<std::size_t>(2 * run + 1)];
    if (alg.failed || ref.failed) {
      aborted = true;
      continue;
    }
    const RegretReport rep = dynamic_regret(alg, ref);
    if (mean_gap.empty()) mean_gap.assign(rep.cumulative_gap.size(), 0.0);
    for (std::size_t i = 0; i < mean_gap.size(); ++i) mean_gap[i] += rep.cumulative_gap[i];
    ++runs;
  }
  for (double& g : mean_gap) g /= std::max(runs, 1);
  double exponent = NAN;
  try {
    exponent = sublinearity_exponent(mean_gap);
  } catch (const std::exception&) {
  }
  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = !aborted && std::isfinite(exponent) && exponent < 0.9;
  r.informational = true;
  r.measured = "growth exponent " + sci(exponent) + " of mean cumulative gap over " +
               std::to_string(runs) + " runs, gap at 60 s " +
               sci(mean_gap.empty() ? NAN : mean_gap.back());
  r.tolerance = "< 0.9 on the second half (soft)";
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CheckResult determinism() {
  Timer timer;
  ExperimentConfig config;
  config.run_count = 3;
  config.duration = 2.0;
  config.base_seed = 17;
  const auto root = std::filesystem::temp_directory_path() /
                    ("kmpc-determinism-" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  run_experiment(config, root / "a");
  run_experiment(config, root / "b");
  bool same = true;
  std::string diff;
  for (const char* name : {"runs.csv", "aggregate.csv", "summary.csv"}) {
    const std::string a = read_file(root / "a" / name);
    const std::string b = read_file(root / "b" / name);
    if (a.empty() || a != b) {
      same = false;
      diff += std::string(name) + " ";
    }
  }
  std::filesystem::remove_all(root);
  CheckResult r;
  r.seconds = timer.seconds();
  r.passed = same;
  r.measured = same ? "runs.csv, aggregate.csv, summary.csv identical" : "differs: " + diff;
  r.tolerance = "byte-identical";
  return r;
}

}  // namespace

const std::vector<Check>& all_checks() {
  static const std::vector<Check> checks{
      {"gradient_oracle", "OGD gradient vs central differences", gradient_oracle},
      {"solver_oracle", "iLQR vs discrete Riccati on a double integrator", solver_oracle},
      {"integrator_order", "cart-pole RK4 global error ratio on halving dt", integrator_order},
      {"no_mismatch", "nominal MPC with an exact model", no_mismatch},
      {"mismatch_75", "75% mismatch stabilization and prediction properties", mismatch_75},
      {"mismatch_55", "55% mismatch stabilization counts", mismatch_55},
      {"estimation_regret", "OGD estimation regret growth", estimation_regret_growth},
      {"dynamic_regret", "cost gap to the oracle surrogate over 60 s", dynamic_regret_growth},
      {"determinism", "repeat invocations give identical CSVs", determinism},
  };
  return checks;
}

std::string format_result(const CheckResult& r) {
  const char* tag = r.passed ? "PASS" : (r.informational ? "INFO" : "FAIL");
  char secs[32];
  std::snprintf(secs, sizeof(secs), "%.2f", r.seconds);
  return std::string(tag) + " " + r.name + ": " + r.measured + " (tolerance " + r.tolerance +
         ") [" + secs + " s]";
}

bool run_checks(const std::vector<std::string>& only, std::ostream& out,
                std::vector<CheckResult>* results) {
  for (const std::string& name : only) {
    const auto& checks = all_checks();
    if (std::none_of(checks.begin(), checks.end(), [&](const Check& c) { return c.name == name; })) {
      throw std::invalid_argument("unknown check '" + name + "'");
    }
  }
  bool ok = true;
  for (const Check& check : all_checks()) {
    if (!only.empty() && std::find(only.begin(), only.end(), check.name) == only.end()) continue;
    CheckResult r;
    try {
      r = check.run();
    } catch (const std::exception& e) {
      r.passed = false;
      r.measured = std::string("aborted: ") + e.what();
      r.tolerance = "-";
    }
    r.name = check.name;
    out << format_result(r) << std::endl;
    if (!r.passed && !r.informational) ok = false;
    if (results) results->push_back(r);
  }
  return ok;
}

}  // namespace kmpc::acceptance
