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

#include <Eigen/Dense>
#include <string>

#include "kmpc/errors.hpp"

namespace kmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Plant state x_t, e.g. cart-pole [x, xdot, theta, thetadot].
using State = Eigen::VectorXd;
// Control u_t, e.g. cart-pole [F].
using ControlInput = Eigen::VectorXd;
// Per-step residual defect w_t, same length as the state.
using Residual = Eigen::VectorXd;
// Feature vector z_t, a subset of [x_t; u_t].
using Features = Eigen::VectorXd;

inline void require_finite(const Eigen::Ref<const Matrix>& m, const std::string& what) {
  if (!m.allFinite()) throw NumericDomainError(what + " is not finite");
}

inline void require_size(Eigen::Index actual, Eigen::Index expected, const std::string& what) {
  if (actual != expected) {
    throw ContractError(what + ": expected length " + std::to_string(expected) + ", got " +
                        std::to_string(actual));
  }
}

}  // namespace kmpc
