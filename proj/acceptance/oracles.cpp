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

#include "oracles.hpp"

#include <cmath>

namespace kmpc::oracle {

std::array<double, 4> CartPoleReference::derivative(const std::array<double, 4>& s,
                                                    double force) const {
  const double total = cart_mass + pole_mass;
  const double sin_t = std::sin(s[2]);
  const double cos_t = std::cos(s[2]);
  const double temp = (force + pole_mass * half_length * s[3] * s[3] * sin_t) / total;
  const double theta_acc =
      (gravity * sin_t - cos_t * temp) /
      (half_length * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total));
  const double x_acc = temp - pole_mass * half_length * theta_acc * cos_t / total;
  return {s[1], x_acc, s[3], theta_acc};
}

std::array<double, 4> CartPoleReference::integrate(std::array<double, 4> s, double force,
                                                   double duration, long steps) const {
  const double h = duration / static_cast<double>(steps);
  auto axpy = [](const std::array<double, 4>& a, const std::array<double, 4>& b, double c) {
    return std::array<double, 4>{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2],
                                 a[3] + c * b[3]};
  };
  for (long i = 0; i < steps; ++i) {
    const auto k1 = derivative(s, force);
    const auto k2 = derivative(axpy(s, k1, h / 2), force);
    const auto k3 = derivative(axpy(s, k2, h / 2), force);
    const auto k4 = derivative(axpy(s, k3, h), force);
    for (int j = 0; j < 4; ++j) s[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return s;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& at, double step) {
  Eigen::VectorXd g(at.size());
  Eigen::VectorXd probe = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    probe[i] = at[i] + step;
    const double up = f(probe);
    probe[i] = at[i] - step;
    const double down = f(probe);
    probe[i] = at[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double riccati_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                    const Eigen::MatrixXd& r, const Eigen::VectorXd& x0, int horizon) {
  // P_N = 0; P_k = Q + A'P A - A'P B (R + B'P B)^{-1} B'P A, for k = N-1..0.
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int k = horizon - 1; k >= 0; --k) {
    const Eigen::MatrixXd s = r + b.transpose() * p * b;
    const Eigen::MatrixXd gain = s.ldlt().solve(b.transpose() * p * a);
    p = q + a.transpose() * p * a - a.transpose() * p * b * gain;
    p = 0.5 * (p + p.transpose());
  }
  return x0.dot(p * x0);
}

void rk4_linear_map(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double h,
                    Eigen::MatrixXd& m, Eigen::MatrixXd& n) {
  const Eigen::Index dim = a.rows();
  m = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(dim, dim) * h;  // h^{k+1} A^k / (k+1)!
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(dim, dim);
  double fact = 1.0;
  for (int k = 1; k <= 4; ++k) {
    power = power * a * h;
    fact *= k;
    m += power / fact;
    if (k <= 3) s += power * h / (fact * (k + 1));
  }
  n = s * b;
}

double quadratic_cost(const std::vector<Eigen::VectorXd>& states,
                      const std::vector<Eigen::VectorXd>& inputs, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& r) {
  double total = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    total += states[k].dot(q * states[k]) + inputs[k].dot(r * inputs[k]);
  }
  return total;
}

}  // namespace kmpc::oracle
