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

#include "kmpc/controllers.hpp"
#include "kmpc/harness.hpp"

using namespace kmpc;

namespace {

ControllerContext default_context(double scale = 0.75, std::uint64_t seed = 0) {
  ExperimentConfig config;
  config.nominal_scale = scale;
  return config.controller_context(seed);
}

State state(double a, double b, double c, double d) {
  return (State(4) << a, b, c, d).finished();
}

ObservableSet constant_psi(double value) {
  ObservableSet obs;
  obs.residual_dim = 1;
  obs.feature_dim = 2;
  obs.lifted_dim = 1;
  obs.exogenous_dim = 1;
  obs.phi = [](const Vector& w) { return w; };
  obs.psi = [value](const Vector&, const Vector&) { return Vector::Constant(1, value); };
  obs.recovery = Matrix::Identity(1, 1);
  return obs;
}

MpcConfig scalar_config() {
  MpcConfig c;
  c.horizon = 5;
  c.q = Matrix::Identity(1, 1);
  c.r = Matrix::Constant(1, 1, 0.1);
  c.input_low = Vector::Constant(1, -1);
  c.input_high = Vector::Constant(1, 1);
  return c;
}

Plant integrator() {
  return make_linear_plant(Matrix::Zero(1, 1), Matrix::Identity(1, 1), 0.1);
}

}  // namespace

TEST_CASE("all controllers agree with nominal MPC at t = 1") {
  const ControllerContext ctx = default_context();
  const State x1 = state(0.5, -0.05, 0.12, 0.03);
  const double u_nominal = make_controller("nominal", ctx)->step(1, x1)[0];
  for (const char* name : {"koopman", "rff"}) {
    const double u = make_controller(name, ctx)->step(1, x1)[0];
    CHECK(std::abs(u - u_nominal) < 1e-9);
  }
}

TEST_CASE("zero state at t = 1 gives a near-zero input") {
  const ControllerContext ctx = default_context();
  for (const std::string& name : controller_names()) {
    CHECK(std::abs(make_controller(name, ctx)->step(1, State::Zero(4))[0]) < 1e-6);
  }
}

TEST_CASE("exact nominal transitions leave the learned model unchanged") {
  const ControllerContext ctx = default_context();
  auto ctrl = make_controller("koopman", ctx);
  auto& learning = dynamic_cast<LearningMpc&>(*ctrl);
  const State x = state(0.3, 0, 0.1, 0);
  const ControlInput u = ctrl->step(1, x);
  ctrl->observe(u, ctx.nominal_plant.step(x, u));
  CHECK(ctrl->info().observed_residual.norm() == 0.0);
  CHECK(ctrl->info().loss == 0.0);
  CHECK(learning.learner().model().is_zero());
}

TEST_CASE("scalar learning controller reproduces the worked OGD step") {
  OgdLearner learner(constant_psi(2.0), 0.01, 10.0);
  learner.set_model({Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.2)});
  learner.set_prev_residual(Vector::Constant(1, 1.0));
  const Plant nominal = integrator();
  LearningMpc ctrl("scalar", nominal, scalar_config(), learner, 10.0);
  const State x = Vector::Constant(1, 0.2);
  const ControlInput u = ctrl.step(1, x);
  CHECK(ctrl.info().predicted_residual[0] == doctest::Approx(0.9));
  ctrl.observe(u, nominal.step(x, u) + Vector::Constant(1, 1.0));  // w = 1
  CHECK(ctrl.info().loss == doctest::Approx(0.01));
  CHECK(ctrl.learner().model().a(0, 0) == doctest::Approx(0.502));
  CHECK(ctrl.learner().model().b(0, 0) == doctest::Approx(0.204));
}

TEST_CASE("constant residuals drive the lifted prediction error to zero monotonically") {
  OgdLearner learner(constant_psi(1.0), 0.05, 10.0);
  const Plant nominal = integrator();
  LearningMpc ctrl("scalar", nominal, scalar_config(), learner, 10.0);
  State x = Vector::Constant(1, 0.5);
  double previous = INFINITY;
  for (int t = 1; t <= 400; ++t) {
    const ControlInput u = ctrl.step(t, x);
    const State next = nominal.step(x, u) + Vector::Constant(1, 0.3);
    ctrl.observe(u, next);
    const double err = ctrl.info().lifted_error.norm();
    if (t > 1 && previous > 1e-12) CHECK(err <= previous);
    previous = err;
    x = next;
  }
  CHECK(previous < 1e-4);
}

TEST_CASE("residual cap bounds what the learner sees") {
  OgdLearner learner(constant_psi(1.0), 0.01, 10.0);
  const Plant nominal = integrator();
  LearningMpc ctrl("scalar", nominal, scalar_config(), learner, 0.5);
  const State x = Vector::Constant(1, 0.0);
  const ControlInput u = ctrl.step(1, x);
  ctrl.observe(u, nominal.step(x, u) + Vector::Constant(1, 40.0));
  CHECK(ctrl.info().observed_residual[0] == doctest::Approx(0.5));
}

TEST_CASE("controllers are causal: changing the future never changes the past") {
  const ControllerContext ctx = default_context();
  const Plant changed = make_cartpole_plant(CartPoleParams{}.scaled(1.3), ctx.true_plant.dt());
  constexpr int kSwitch = 12;
  for (const char* name : {"koopman", "rff", "nominal"}) {
    std::vector<double> base, replay;
    for (int pass = 0; pass < 2; ++pass) {
      auto ctrl = make_controller(name, ctx);
      State x = state(0.4, 0, -0.1, 0);
      std::vector<double>& out = pass == 0 ? base : replay;
      for (int t = 1; t <= 20; ++t) {
        const ControlInput u = ctrl->step(t, x);
        out.push_back(u[0]);
        const Plant& plant = (pass == 1 && t >= kSwitch) ? changed : ctx.true_plant;
        const State next = plant.step(x, u);
        ctrl->observe(u, next);
        x = next;
      }
    }
    for (int t = 0; t < kSwitch; ++t) CHECK(base[t] == replay[t]);
    bool diverged = false;
    for (int t = kSwitch; t < 20; ++t) diverged = diverged || base[t] != replay[t];
    CHECK(diverged);
  }
}

TEST_CASE("random Fourier features are seeded and bounded") {
  const RffOptions opts{200, 1.0};
  const RffModel a(9, opts, 42);
  const RffModel b(9, opts, 42);
  const RffModel c(9, opts, 43);
  CHECK(a.feature_count() == 200);
  CHECK(a.frequencies() == b.frequencies());
  CHECK(a.phases() == b.phases());
  CHECK(a.frequencies() != c.frequencies());
  const double bound = std::sqrt(2.0 / 200);
  Vector v = Vector::LinSpaced(9, -3, 3);
  const Vector f = a.features(v);
  CHECK(f.size() == 200);
  CHECK(f.cwiseAbs().maxCoeff() <= bound + 1e-15);
  for (Eigen::Index j = 0; j < a.phases().size(); ++j) {
    CHECK(a.phases()[j] >= 0.0);
    CHECK(a.phases()[j] < 2 * 3.14159265358979323846);
  }
  // Sample standard deviation of the frequencies is close to sigma.
  const Matrix& w = a.frequencies();
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().sum() / (w.size() - 1));
  CHECK(sd == doctest::Approx(1.0).epsilon(0.05));

  const ObservableSet obs = a.observables(4, 5);
  CHECK(obs.exogenous_dim == 200);
  CHECK(obs.lifted_dim == 4);
}

TEST_CASE("controller registry") {
  const ControllerContext ctx = default_context();
  CHECK_THROWS_WITH_AS(make_controller("gp", ctx), doctest::Contains("reserved"), ContractError);
  CHECK_THROWS_AS(make_controller("pid", ctx), ContractError);
  for (const std::string& name : controller_names()) CHECK(make_controller(name, ctx)->name() == name);
}

TEST_CASE("the oracle predicts the true defect exactly") {
  const ControllerContext ctx = default_context();
  auto oracle = make_controller("oracle", ctx);
  const State x = state(0.2, 0, 0.1, 0);
  const ControlInput u = oracle->step(1, x);
  oracle->observe(u, ctx.true_plant.step(x, u));
  CHECK((oracle->info().observed_residual - oracle->info().predicted_residual).norm() < 1e-15);
}
