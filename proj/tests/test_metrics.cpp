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

#include <doctest.h>

#include <cmath>

#include "kmpc/metrics.hpp"
#include "kmpc/rng.hpp"

using namespace kmpc;

namespace {

RunLog log_with_costs(const std::vector<double>& costs) {
  RunLog log;
  int t = 1;
  for (double c : costs) {
    StepRecord s;
    s.t = t++;
    s.x = State::Zero(4);
    s.u = ControlInput::Zero(1);
    s.w = Residual::Zero(4);
    s.w_hat = Residual::Zero(4);
    s.lifted_error = Vector::Zero(4);
    s.stage_cost = c;
    log.steps.push_back(s);
  }
  log.final_state = State::Zero(4);
  return log;
}

std::vector<double> power_series(int n, double p) {
  std::vector<double> v;
  for (int t = 1; t <= n; ++t) v.push_back(std::pow(t, p));
  return v;
}

ObservableSet scalar_observables() {
  ObservableSet obs;
  obs.residual_dim = 1;
  obs.feature_dim = 1;
  obs.lifted_dim = 1;
  obs.exogenous_dim = 1;
  obs.phi = [](const Vector& w) { return w; };
  obs.psi = [](const Vector&, const Vector& z) { return z; };
  obs.recovery = Matrix::Identity(1, 1);
  return obs;
}

}  // namespace

TEST_CASE("stabilization error") {
  RunLog log = log_with_costs({0, 0, 0});
  for (double e : stabilization_error(log)) CHECK(e == 0.0);
  log.steps[1].x = (State(4) << 1, 0, 0, 0).finished();
  CHECK(stabilization_error(log)[1] == 1.0);
  log.final_state = (State(4) << 0, 2, 0, 0).finished();
  CHECK(final_stabilization_error(log) == 4.0);
}

TEST_CASE("prediction and residual norms") {
  RunLog log = log_with_costs({0});
  log.steps[0].w = (Vector(4) << 3, 0, 4, 0).finished();
  log.steps[0].w_hat = (Vector(4) << 3, 0, 0, 0).finished();
  log.steps[0].lifted_error = (Vector(4) << 0, 0, 4, 0).finished();
  CHECK(prediction_error(log)[0] == 4.0);
  CHECK(residual_norm(log)[0] == 5.0);
  CHECK(lifted_prediction_error(log)[0] == 4.0);
}

TEST_CASE("dynamic regret sign convention and sums") {
  const RunLog alg = log_with_costs({3, 2, 1});
  const RunLog ref = log_with_costs({1, 1, 1});
  const RegretReport r = dynamic_regret(alg, ref);
  CHECK(r.cumulative_cost == 6.0);
  CHECK(r.oracle_cost == 3.0);
  CHECK(r.dynamic_regret == 3.0);
  CHECK(r.dynamic_regret == r.cumulative_cost - r.oracle_cost);
  CHECK(r.cumulative_gap == std::vector<double>{2, 3, 3});
  CHECK(dynamic_regret(alg, alg).dynamic_regret == 0.0);
  CHECK(dynamic_regret(ref, alg).dynamic_regret < 0.0);
  CHECK(cumulative_cost(alg) == std::vector<double>{3, 5, 6});
}

TEST_CASE("sublinearity exponent on constructed sequences") {
  CHECK(sublinearity_exponent(power_series(1000, 1.0)) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(sublinearity_exponent(power_series(1000, 0.5)) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(sublinearity_exponent(power_series(1000, 0.75)) == doctest::Approx(0.75).epsilon(0.05));
  CHECK_THROWS(sublinearity_exponent(power_series(5, 1.0)));
  std::vector<double> negative = power_series(100, 1.0);
  negative.back() = -1.0;
  CHECK_THROWS(sublinearity_exponent(negative));
}

TEST_CASE("estimation regret against the batch fit") {
  const ObservableSet obs = scalar_observables();
  // w_t = 0.6 w_{t-1} + 0.3 z_t exactly.
  CounterRng rng(8, 8);
  std::vector<EstimationSample> samples;
  OgdLearner learner(obs, 0.05, 10.0);
  double w_prev = 0.0;
  double first_losses = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const Features z = Vector::Constant(1, rng.uniform(-1, 1));
    const double w = 0.6 * w_prev + 0.3 * z[0];
    const auto up = learner.update(z, Vector::Constant(1, w));
    if (t < 200) first_losses += up.loss;
    samples.push_back({Vector::Constant(1, w_prev), z, Vector::Constant(1, w), up.loss});
    w_prev = w;
  }
  const EstimationRegret est = estimation_regret(samples, obs, 10.0);
  CHECK(est.comparator.a(0, 0) == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(est.comparator.b(0, 0) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(est.regret > 0.0);
  CHECK(est.regret <= first_losses * 1.5);
  CHECK(est.cumulative.size() == samples.size());

  // A learner already at the comparator pays exactly the comparator loss.
  std::vector<EstimationSample> perfect = samples;
  for (auto& s : perfect) s.online_loss = 0.0;
  CHECK(std::abs(estimation_regret(perfect, obs, 10.0).regret) < 1e-20);

  // The comparator respects the ball.
  CHECK(batch_least_squares(samples, obs, 0.1).norm() <= 0.1 + 1e-12);
}

TEST_CASE("estimation samples are rebuilt causally from a log") {
  RunLog log = log_with_costs({0, 0, 0});
  for (int t = 0; t < 3; ++t) {
    log.steps[t].w = Vector::Constant(4, t + 1.0);
    log.steps[t].x = Vector::Constant(4, 0.1 * t);
    log.steps[t].u = Vector::Constant(1, -t);
    log.steps[t].loss = 0.5 * t;
  }
  const auto samples = estimation_samples(log);
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].w_prev.norm() == 0.0);
  CHECK(samples[1].w_prev == log.steps[0].w);
  CHECK(samples[2].z.size() == 5);
  CHECK(samples[2].z[4] == -2.0);
  CHECK(samples[2].online_loss == 1.0);
}

TEST_CASE("aggregation and windows") {
  const Band b = aggregate({{1, 4}, {3, 2}});
  CHECK(b.mean == std::vector<double>{2, 3});
  CHECK(b.min == std::vector<double>{1, 2});
  CHECK(b.max == std::vector<double>{3, 4});
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(window_mean(v, 2, 4) == 3.5);
  CHECK(aggregate({}).mean.empty());
}

TEST_CASE("metrics are pure") {
  RunLog log = log_with_costs({1.5, 0.25, 2.0});
  log.steps[0].x = Vector::LinSpaced(4, 0.1, 0.4);
  CHECK(stabilization_error(log) == stabilization_error(log));
  CHECK(dynamic_regret(log, log).cumulative_gap == dynamic_regret(log, log).cumulative_gap);
}
