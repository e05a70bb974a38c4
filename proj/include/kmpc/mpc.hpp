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

#include <optional>
#include <string_view>
#include <vector>

#include "kmpc/dynamics.hpp"
#include "kmpc/koopman.hpp"

namespace kmpc {

/// How the learned residual enters the horizon.
///  - propagate: w_k = h(w_{k-1}, z_k) rolled forward from the last observed residual.
///  - hold_constant: w_k = w_init for every k.
enum class ResidualMode { propagate, hold_constant };

std::string_view to_string(ResidualMode mode);
ResidualMode residual_mode_from_string(std::string_view name);

struct MpcConfig {
  int horizon = 20;
  Matrix q;  // stage state weight
  Matrix r;  // stage input weight
  Vector input_low;
  Vector input_high;
  int max_iterations = 50;
  double convergence_tol = 1e-7;  // absolute cost decrease
  ResidualMode residual_mode = ResidualMode::propagate;
  double fd_step = 1e-6;
  int max_line_search = 12;

  void validate(int state_dim, int input_dim) const;
};

double stage_cost(const MpcConfig& config, const State& x, const ControlInput& u);

struct RolloutResult {
  std::vector<State> states;        // N + 1
  std::vector<Residual> residuals;  // N, the w_k added at step k
  double cost = 0.0;
};

/// Simulates the residual-augmented nominal model over the horizon and sums the
/// stage costs for k = 0..N-1. No terminal cost.
RolloutResult rollout(const MpcConfig& config, const Plant& plant, const KoopmanModel& model,
                      const ObservableSet& obs, const State& x0, const Residual& w_init,
                      const std::vector<ControlInput>& inputs);

struct TrajectorySolution {
  std::vector<ControlInput> inputs;           // N
  std::vector<State> states;                  // N + 1
  std::vector<Residual> predicted_residuals;  // N
  double cost = 0.0;
  double initial_cost = 0.0;  // rollout cost of the (clamped) warm start
  int iterations = 0;
  bool converged = false;
};

/// Box-constrained iLQR on the augmented state (x_k, w_{k-1}).
///
/// Jacobians come from central finite differences of the full augmented map.
/// The backward pass clamps the feedforward against the box and drops feedback
/// on clamped channels; the forward pass clamps every input explicitly and
/// backtracks on the step scale until the cost decreases. Iteration stops when
/// the accepted decrease falls below `convergence_tol`.
TrajectorySolution solve(const MpcConfig& config, const Plant& plant, const KoopmanModel& model,
                         const ObservableSet& obs, const State& x0, const Residual& w_init,
                         const std::optional<std::vector<ControlInput>>& warm_start = std::nullopt);

/// The residual-free problem: zero model, zero residual, hold_constant mode.
TrajectorySolution solve_nominal(
    const MpcConfig& config, const Plant& plant, const State& x0,
    const std::optional<std::vector<ControlInput>>& warm_start = std::nullopt);

/// Drops the first input and repeats the last one.
std::vector<ControlInput> shift_warm_start(const std::vector<ControlInput>& inputs);

}  // namespace kmpc
