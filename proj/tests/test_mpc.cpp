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

#include "kmpc/mpc.hpp"
#include "kmpc/rng.hpp"
#include "oracles.hpp"

using namespace kmpc;

namespace {

MpcConfig cartpole_config(double bound = 10.0) {
  MpcConfig c;
  c.horizon = 20;
  c.q = Vector((Vector(4) << 5.0, 0.1, 5.0, 0.1).finished()).asDiagonal();
  c.r = Matrix::Constant(1, 1, 0.1);
  c.input_low = Vector::Constant(1, -bound);
  c.input_high = Vector::Constant(1, bound);
  return c;
}

State state(double a, double b, double c, double d) {
  return (State(4) << a, b, c, d).finished();
}

Plant cartpole(double scale = 1.0) {
  return make_cartpole_plant(CartPoleParams{}.scaled(scale), 1.0 / 15);
}

}  // namespace

TEST_CASE("rollout cost matches a direct sum over independently stepped states") {
  const MpcConfig c = cartpole_config();
  const Plant plant = cartpole();
  const ObservableSet obs = identity_observables(4, 5);
  std::vector<ControlInput> inputs;
  for (int k = 0; k < c.horizon; ++k) inputs.push_back(ControlInput::Constant(1, 0.3 * std::sin(k)));
  const State x0 = state(0.4, 0.0, 0.1, -0.1);
  const RolloutResult r = rollout(c, plant, KoopmanModel::zeros(obs), obs, x0, Residual::Zero(4), inputs);

  const oracle::CartPoleReference ref;
  std::vector<Vector> states{x0};
  std::array<double, 4> s{0.4, 0.0, 0.1, -0.1};
  for (int k = 0; k < c.horizon; ++k) {
    s = ref.integrate(s, inputs[k][0], 1.0 / 15, 1);
    states.push_back(Eigen::Map<const Eigen::Vector4d>(s.data()));
  }
  CHECK(r.cost == doctest::Approx(oracle::quadratic_cost(states, inputs, c.q, c.r)).epsilon(1e-12));
  for (int k = 0; k <= c.horizon; ++k) CHECK((r.states[k] - states[k]).norm() < 1e-12);
}

TEST_CASE("zero inputs at the origin cost nothing") {
  const MpcConfig c = cartpole_config();
  const ObservableSet obs = cartpole_observables();
  const std::vector<ControlInput> zeros(20, ControlInput::Zero(1));
  const RolloutResult r =
      rollout(c, cartpole(), KoopmanModel::zeros(obs), obs, State::Zero(4), Residual::Zero(4), zeros);
  CHECK(r.cost == 0.0);
}

TEST_CASE("hold_constant adds w_init at every step") {
  MpcConfig c = cartpole_config();
  c.residual_mode = ResidualMode::hold_constant;
  const ObservableSet obs = cartpole_observables();
  const Plant plant = cartpole();
  const Residual w = state(0.01, 0.0, -0.02, 0.0);
  const std::vector<ControlInput> zeros(20, ControlInput::Zero(1));
  const RolloutResult r = rollout(c, plant, KoopmanModel::zeros(obs), obs, State::Zero(4), w, zeros);
  State x = State::Zero(4);
  for (int k = 0; k < 20; ++k) {
    CHECK(r.residuals[k] == w);
    x = plant.step(x, zeros[k], w);
  }
  CHECK((r.states.back() - x).norm() == 0.0);
}

TEST_CASE("propagate mode rolls the learned recursion forward") {
  MpcConfig c = cartpole_config();
  c.residual_mode = ResidualMode::propagate;
  const ObservableSet obs = cartpole_observables();
  const Plant plant = cartpole(0.75);
  KoopmanModel m{0.5 * Matrix::Identity(4, 4), Matrix::Constant(4, 9, 0.01)};
  const Residual w0 = state(0.01, 0.02, 0.0, -0.01);
  std::vector<ControlInput> inputs(20, ControlInput::Constant(1, 0.5));
  const State x0 = state(0.1, 0, 0.05, 0);
  const RolloutResult r = rollout(c, plant, m, obs, x0, w0, inputs);
  State x = x0;
  Residual w = w0;
  for (int k = 0; k < 20; ++k) {
    w = m.a * w + m.b * obs.exogenous(w, make_features(x, inputs[k]));
    CHECK((r.residuals[k] - w).norm() < 1e-15);
    x = plant.step(x, inputs[k], w);
  }
  CHECK((r.states.back() - x).norm() < 1e-12);

  // With the same model, the two modes predict different futures.
  MpcConfig hold = c;
  hold.residual_mode = ResidualMode::hold_constant;
  const RolloutResult h = rollout(hold, plant, m, obs, x0, w0, inputs);
  CHECK((h.states.back() - r.states.back()).norm() > 1e-6);
}

TEST_CASE("zero model reduces to the nominal problem") {
  const MpcConfig c = cartpole_config();
  const Plant plant = cartpole(0.75);
  const ObservableSet obs = cartpole_observables();
  const State x0 = state(0.6, 0.05, -0.15, 0.1);
  for (ResidualMode mode : {ResidualMode::propagate, ResidualMode::hold_constant}) {
    MpcConfig cm = c;
    cm.residual_mode = mode;
    const TrajectorySolution a = solve(cm, plant, KoopmanModel::zeros(obs), obs, x0, Residual::Zero(4));
    const TrajectorySolution b = solve_nominal(c, plant, x0);
    CHECK(std::abs(a.cost - b.cost) <= 1e-12 * std::max(1.0, b.cost));
    CHECK(std::abs(a.inputs[0][0] - b.inputs[0][0]) < 1e-9);
  }
}

TEST_CASE("the origin is optimal at equilibrium") {
  const TrajectorySolution s = solve_nominal(cartpole_config(), cartpole(), State::Zero(4));
  CHECK(s.inputs[0].norm() < 1e-6);
  CHECK(s.cost < 1e-12);
}

TEST_CASE("unconstrained linear problems match the Riccati recursion") {
  CounterRng rng(2024, 9);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3;
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
    Matrix b(n, 1);
    for (int i = 0; i < n; ++i) b(i, 0) = rng.uniform(-1, 1);
    const double dt = 0.1;
    Matrix m, nn;
    oracle::rk4_linear_map(a, b, dt, m, nn);
    // Controllability of the discrete pair.
    Matrix ctrb(n, n);
    Matrix col = nn;
    for (int k = 0; k < n; ++k, col = m * col) ctrb.col(k) = col;
    if (Eigen::FullPivLU<Matrix>(ctrb).rank() < n) continue;

    MpcConfig c;
    c.horizon = 15;
    c.q = Matrix::Identity(n, n) * rng.uniform(0.5, 3.0);
    c.r = Matrix::Constant(1, 1, rng.uniform(0.1, 1.0));
    c.input_low = Vector::Constant(1, -1e8);
    c.input_high = Vector::Constant(1, 1e8);
    c.convergence_tol = 1e-12;
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0[i] = rng.uniform(-1, 1);
    const TrajectorySolution s = solve_nominal(c, make_linear_plant(a, b, dt), x0);
    const double expected = oracle::riccati_cost(m, nn, c.q, c.r, x0, c.horizon);
    CHECK(std::abs(s.cost - expected) / expected < 1e-6);
  }
}

TEST_CASE("box constraints hold exactly and the cost never worsens") {
  const MpcConfig c = cartpole_config(1.0);
  const Plant plant = cartpole(0.75);
  const ObservableSet obs = cartpole_observables();
  CounterRng rng(11, 0);
  const KoopmanModel m{Matrix::Identity(4, 4) * 0.3, Matrix::Constant(4, 9, 0.02)};
  std::optional<std::vector<ControlInput>> warm;
  for (int trial = 0; trial < 10; ++trial) {
    const State x0 = state(rng.uniform(-3, 3), rng.uniform(-1, 1), rng.uniform(-0.5, 0.5),
                           rng.uniform(-1, 1));
    const TrajectorySolution s = solve(c, plant, m, obs, x0, Residual::Zero(4), warm);
    REQUIRE(s.inputs.size() == 20);
    for (const ControlInput& u : s.inputs) {
      CHECK(u[0] >= -1.0);
      CHECK(u[0] <= 1.0);
    }
    CHECK(s.cost <= s.initial_cost);
    // The reported cost is the cost of the returned inputs.
    const RolloutResult r = rollout(c, plant, m, obs, x0, Residual::Zero(4), s.inputs);
    CHECK(r.cost == doctest::Approx(s.cost).epsilon(1e-12));
    std::vector<ControlInput> noisy = s.inputs;
    for (auto& u : noisy) u[0] = rng.uniform(-5, 5);
    warm = noisy;  // deliberately out of the box
  }
  // Far from the origin the bound is active.
  const TrajectorySolution far = solve_nominal(c, plant, state(3, 0, 0.5, 0));
  CHECK(std::abs(far.inputs[0][0]) == 1.0);
}

TEST_CASE("warm start shift repeats the last input") {
  std::vector<ControlInput> in;
  for (int k = 0; k < 4; ++k) in.push_back(ControlInput::Constant(1, k));
  const auto s = shift_warm_start(in);
  REQUIRE(s.size() == 4);
  CHECK(s[0][0] == 1.0);
  CHECK(s[2][0] == 3.0);
  CHECK(s[3][0] == 3.0);
  CHECK(shift_warm_start({}).empty());
}

TEST_CASE("configuration and input contracts") {
  MpcConfig c = cartpole_config();
  c.horizon = 0;
  CHECK_THROWS_AS(c.validate(4, 1), ContractError);
  c = cartpole_config();
  c.r = Matrix::Constant(1, 1, 0.0);
  CHECK_THROWS_AS(c.validate(4, 1), ContractError);
  c = cartpole_config();
  c.input_low = Vector::Constant(1, 20.0);
  CHECK_THROWS_AS(c.validate(4, 1), ContractError);
  c = cartpole_config();
  CHECK_THROWS_AS(solve_nominal(c, cartpole(), State::Zero(3)), ContractError);
  CHECK_THROWS_AS(residual_mode_from_string("sometimes"), ContractError);
  CHECK(residual_mode_from_string("hold_constant") == ResidualMode::hold_constant);
  CHECK(to_string(ResidualMode::propagate) == "propagate");

  std::vector<ControlInput> nan(20, ControlInput::Constant(1, NAN));
  const TrajectorySolution s = solve_nominal(c, cartpole(), state(0.1, 0, 0, 0), nan);
  CHECK(s.inputs[0].allFinite());
}

TEST_CASE("iteration cap reports non-convergence") {
  MpcConfig c = cartpole_config();
  c.max_iterations = 1;
  c.convergence_tol = 0.0;
  const TrajectorySolution s = solve_nominal(c, cartpole(), state(0.8, 0, 0.2, 0));
  CHECK(s.iterations == 1);
  CHECK_FALSE(s.converged);
}
