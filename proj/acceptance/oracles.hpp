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

// Reference computations used to check the library. Nothing here calls the
// code path it is meant to check.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>

namespace kmpc::oracle {

/// Cart-pole right-hand side written out directly from the equations of
/// motion, with its own fixed-step RK4. [x, xd, th, thd], force held constant.
struct CartPoleReference {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double gravity = 9.8;

  std::array<double, 4> derivative(const std::array<double, 4>& s, double force) const;
  std::array<double, 4> integrate(std::array<double, 4> s, double force, double duration,
                                  long steps) const;
};

/// Central finite-difference gradient of a scalar function of a flat vector.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& at, double step);

/// Optimal cost x0' P_0 x0 of sum_{k<N} x'Qx + u'Ru under x+ = A x + B u with
/// no terminal weight, by the finite-horizon Riccati recursion.
double riccati_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                    const Eigen::MatrixXd& r, const Eigen::VectorXd& x0, int horizon);

/// Exact one-step map of RK4 (zero-order hold) applied to xdot = A x + B u:
/// x+ = M x + N u with M = sum_{k<=4} (hA)^k / k!, N = sum_{k<=3} h^{k+1} A^k / (k+1)! B.
void rk4_linear_map(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double h,
                    Eigen::MatrixXd& m, Eigen::MatrixXd& n);

/// Sum of x'Qx + u'Ru over a trajectory, k = 0..N-1.
double quadratic_cost(const std::vector<Eigen::VectorXd>& states,
                      const std::vector<Eigen::VectorXd>& inputs, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& r);

}  // namespace kmpc::oracle
