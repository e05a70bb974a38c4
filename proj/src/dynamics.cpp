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

#include "kmpc/dynamics.hpp"

#include <cmath>
#include <utility>

namespace kmpc {

namespace {

void check_term(double value, const char* term) {
  if (!std::isfinite(value)) {
    throw NumericDomainError(std::string("cart-pole dynamics: non-finite ") + term);
  }
}

}  // namespace

CartPoleParams CartPoleParams::scaled(double factor) const {
  CartPoleParams p = *this;
  p.cart_mass *= factor;
  p.pole_mass *= factor;
  p.half_length *= factor;
  return p;
}

void CartPoleParams::validate() const {
  if (!(cart_mass > 0.0) || !(pole_mass > 0.0) || !(half_length > 0.0) || !(gravity > 0.0)) {
    throw ContractError("cart-pole parameters must be strictly positive");
  }
}

CartPoleAccelerations cartpole_accelerations(const CartPoleParams& params,
                                             const Eigen::Ref<const State>& state, double force) {
  require_size(state.size(), 4, "cart-pole state");
  const double theta = state[2];
  const double theta_dot = state[3];
  const double total_mass = params.cart_mass + params.pole_mass;
  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);
  const double ml = params.pole_mass * params.half_length;

  const double denom =
      params.half_length * (4.0 / 3.0 - params.pole_mass * cos_t * cos_t / total_mass);
  check_term(denom, "thetaddot denominator");
  const double thetaddot =
      (params.gravity * sin_t + cos_t * ((-ml * theta_dot * theta_dot * sin_t - force) / total_mass)) /
      denom;
  check_term(thetaddot, "thetaddot");
  const double xddot =
      (ml * (theta_dot * theta_dot * sin_t - thetaddot * cos_t) + force) / total_mass;
  check_term(xddot, "xddot");
  return {xddot, thetaddot};
}

Plant::Plant(int state_dim, int input_dim, Drift drift, InputMatrix input_matrix, double dt,
             int substeps)
    : state_dim_(state_dim),
      input_dim_(input_dim),
      drift_(std::move(drift)),
      input_matrix_(std::move(input_matrix)),
      dt_(dt),
      substeps_(substeps) {
  if (state_dim_ <= 0 || input_dim_ <= 0) throw ContractError("plant dimensions must be positive");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ContractError("plant dt must be positive");
  if (substeps_ < 1) throw ContractError("plant substeps must be >= 1");
  if (!drift_ || !input_matrix_) throw ContractError("plant requires drift and input matrix");
}

Vector Plant::drift(const Vector& x) const {
  require_size(x.size(), state_dim_, "plant state");
  return drift_(x);
}

Matrix Plant::input_matrix(const Vector& x) const {
  require_size(x.size(), state_dim_, "plant state");
  return input_matrix_(x);
}

Vector Plant::vector_field(const Vector& x, const ControlInput& u) const {
  require_size(u.size(), input_dim_, "plant input");
  return drift(x) + input_matrix(x) * u;
}

State Plant::step(const State& x, const ControlInput& u) const {
  require_size(x.size(), state_dim_, "plant state");
  require_size(u.size(), input_dim_, "plant input");
  const double h = dt_ / substeps_;
  State s = x;
  for (int i = 0; i < substeps_; ++i) {
    const Vector k1 = vector_field(s, u);
    const Vector k2 = vector_field(s + 0.5 * h * k1, u);
    const Vector k3 = vector_field(s + 0.5 * h * k2, u);
    const Vector k4 = vector_field(s + h * k3, u);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require_finite(s, "RK4 intermediate state");
  }
  return s;
}

State Plant::step(const State& x, const ControlInput& u, const Residual& w) const {
  require_size(w.size(), state_dim_, "plant residual");
  State next = step(x, u) + w;
  require_finite(next, "next state");
  return next;
}

Plant make_cartpole_plant(const CartPoleParams& params, double dt, int substeps) {
  params.validate();
  // Both accelerations are affine in F; split them into drift and input column.
  auto drift = [params](const Vector& x) {
    const CartPoleAccelerations acc = cartpole_accelerations(params, x, 0.0);
    Vector f(4);
    f << x[1], acc.cart, x[3], acc.pole;
    return f;
  };
  auto input = [params](const Vector& x) {
    const double total_mass = params.cart_mass + params.pole_mass;
    const double cos_t = std::cos(x[2]);
    const double denom =
        params.half_length * (4.0 / 3.0 - params.pole_mass * cos_t * cos_t / total_mass);
    const double dthetaddot = -cos_t / (total_mass * denom);
    const double dxddot =
        (1.0 - params.pole_mass * params.half_length * cos_t * dthetaddot) / total_mass;
    Matrix g = Matrix::Zero(4, 1);
    g(1, 0) = dxddot;
    g(3, 0) = dthetaddot;
    return g;
  };
  return Plant(4, 1, drift, input, dt, substeps);
}

Plant make_linear_plant(const Matrix& a, const Matrix& b, double dt, int substeps) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw ContractError("linear plant: A must be square and B must have A's row count");
  }
  return Plant(
      static_cast<int>(a.rows()), static_cast<int>(b.cols()),
      [a](const Vector& x) -> Vector { return a * x; }, [b](const Vector&) -> Matrix { return b; },
      dt, substeps);
}

Residual extract_residual(const Plant& nominal, const State& x_t, const ControlInput& u_t,
                          const State& x_next) {
  require_finite(x_t, "x_t");
  require_finite(u_t, "u_t");
  require_finite(x_next, "x_next");
  require_size(x_next.size(), nominal.state_dim(), "x_next");
  return x_next - nominal.step(x_t, u_t);
}

Residual clamp_residual(const Residual& w, double radius) {
  const double norm = w.norm();
  if (norm > radius) return w * (radius / norm);
  return w;
}

ControlInput clamp_input(const ControlInput& u, const Vector& low, const Vector& high) {
  require_size(low.size(), u.size(), "input lower bound");
  require_size(high.size(), u.size(), "input upper bound");
  return u.cwiseMax(low).cwiseMin(high);
}

}  // namespace kmpc
