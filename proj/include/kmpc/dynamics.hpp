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

#include <functional>

#include "kmpc/types.hpp"

namespace kmpc {

/// Physical parameters of the cart-pole. The pole has length 2 * half_length.
struct CartPoleParams {
  double cart_mass = 1.0;    // kg
  double pole_mass = 0.1;    // kg
  double half_length = 0.5;  // m
  double gravity = 9.8;      // m/s^2

  /// Scales masses and length (not gravity) by `factor`.
  CartPoleParams scaled(double factor) const;
  void validate() const;
};

struct CartPoleAccelerations {
  double cart;  // xddot, m/s^2
  double pole;  // thetaddot, rad/s^2
};

/// Continuous-time accelerations of the cart-pole under horizontal force `force`.
/// `state` is [x, xdot, theta, thetadot]; theta = 0 is upright.
CartPoleAccelerations cartpole_accelerations(const CartPoleParams& params,
                                             const Eigen::Ref<const State>& state, double force);

/// Control-affine plant xdot = f(x) + g(x) u, discretized with classical RK4 under
/// zero-order hold. One call to `step` advances one control period `dt`, split
/// into `substeps` equal RK4 steps.
class Plant {
 public:
  using Drift = std::function<Vector(const Vector&)>;
  using InputMatrix = std::function<Matrix(const Vector&)>;

  Plant(int state_dim, int input_dim, Drift drift, InputMatrix input_matrix, double dt,
        int substeps = 1);

  int state_dim() const { return state_dim_; }
  int input_dim() const { return input_dim_; }
  double dt() const { return dt_; }
  int substeps() const { return substeps_; }

  Vector drift(const Vector& x) const;
  Matrix input_matrix(const Vector& x) const;
  Vector vector_field(const Vector& x, const ControlInput& u) const;

  /// Nominal discrete step with no residual.
  State step(const State& x, const ControlInput& u) const;
  /// Discrete step of x_{t+1} = F(x_t, u_t) + w_t; the residual enters once per step.
  State step(const State& x, const ControlInput& u, const Residual& w) const;

 private:
  int state_dim_;
  int input_dim_;
  Drift drift_;
  InputMatrix input_matrix_;
  double dt_;
  int substeps_;
};

Plant make_cartpole_plant(const CartPoleParams& params, double dt, int substeps = 1);

/// Linear time-invariant plant xdot = A x + B u.
Plant make_linear_plant(const Matrix& a, const Matrix& b, double dt, int substeps = 1);

/// w_t = x_{t+1} - F_nominal(x_t, u_t), where F_nominal is one full nominal RK4 step.
Residual extract_residual(const Plant& nominal, const State& x_t, const ControlInput& u_t,
                          const State& x_next);

/// Radial projection of `w` onto the L2 ball of the given radius.
Residual clamp_residual(const Residual& w, double radius);

/// Elementwise clamp of `u` into [low, high].
ControlInput clamp_input(const ControlInput& u, const Vector& low, const Vector& high);

}  // namespace kmpc
