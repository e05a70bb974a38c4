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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kmpc/dynamics.hpp"
#include "kmpc/koopman.hpp"
#include "kmpc/mpc.hpp"

namespace kmpc {

/// What a controller knows about its most recent step, for logging.
struct StepInfo {
  Residual observed_residual;   // w_t, after the magnitude cap
  Residual predicted_residual;  // w_hat_t = h(w_{t-1}, z_t) with the pre-update model
  Vector lifted_error;          // phi(w_t) - lifted prediction; empty when not applicable
  double loss = 0.0;            // l_t(alpha_t)
  int iterations = 0;
  bool converged = true;
  double plan_cost = 0.0;
};

/// Causal closed-loop policy: `step` picks u_t from x_t, `observe` receives
/// the applied input and x_{t+1}.
class Controller {
 public:
  virtual ~Controller() = default;

  virtual std::string_view name() const = 0;
  virtual ControlInput step(int t, const State& x) = 0;
  virtual void observe(const ControlInput& u, const State& x_next) = 0;

  const StepInfo& info() const { return info_; }

 protected:
  StepInfo info_;
};

/// MPC on the nominal plant with a residual model learned online by projected
/// OGD. The Koopman and random-Fourier-feature variants differ only in their
/// observable set.
class LearningMpc : public Controller {
 public:
  LearningMpc(std::string name, Plant nominal, MpcConfig config, OgdLearner learner,
              double residual_cap);

  std::string_view name() const override { return name_; }
  ControlInput step(int t, const State& x) override;
  void observe(const ControlInput& u, const State& x_next) override;

  const OgdLearner& learner() const { return learner_; }
  OgdLearner& learner() { return learner_; }
  const std::optional<TrajectorySolution>& last_solution() const { return last_; }

 private:
  std::string name_;
  Plant nominal_;
  MpcConfig config_;
  OgdLearner learner_;
  double residual_cap_;
  std::optional<TrajectorySolution> last_;
  State x_t_;
};

/// MPC on the nominal plant that ignores the residual entirely.
class NominalMpc : public Controller {
 public:
  NominalMpc(Plant nominal, MpcConfig config, double residual_cap);

  std::string_view name() const override { return "nominal"; }
  ControlInput step(int t, const State& x) override;
  void observe(const ControlInput& u, const State& x_next) override;

 private:
  Plant nominal_;
  MpcConfig config_;
  double residual_cap_;
  std::optional<TrajectorySolution> last_;
  State x_t_;
};

/// Clairvoyant comparator: receding-horizon MPC on the true plant. This is a
/// computable surrogate for the optimal non-causal policy; its trajectory
/// experiences its own residual realization.
class OracleMpc : public Controller {
 public:
  OracleMpc(Plant truth, Plant nominal, MpcConfig config, double residual_cap);

  std::string_view name() const override { return "oracle"; }
  ControlInput step(int t, const State& x) override;
  void observe(const ControlInput& u, const State& x_next) override;

 private:
  Plant truth_;
  Plant nominal_;
  MpcConfig config_;
  double residual_cap_;
  std::optional<TrajectorySolution> last_;
  State x_t_;
};

struct RffOptions {
  int features = 200;
  double sigma = 1.0;  // frequency standard deviation
};

/// Random Fourier features sqrt(2/D) cos(omega_j . v + b_j) of v = [w_prev; z],
/// with omega_j ~ N(0, sigma^2 I) and b_j ~ U[0, 2 pi), drawn once from `seed`.
class RffModel {
 public:
  RffModel(int input_dim, RffOptions options, std::uint64_t seed);

  int feature_count() const { return static_cast<int>(phases_.size()); }
  const Matrix& frequencies() const { return frequencies_; }  // features x input_dim
  const Vector& phases() const { return phases_; }

  Vector features(const Vector& v) const;

  /// phi(w) = w, C = I, psi(w_prev, z) = features([w_prev; z]).
  ObservableSet observables(int residual_dim, int feature_dim) const;

 private:
  Matrix frequencies_;
  Vector phases_;
  double scale_;
};

/// Everything needed to build any named controller for one run.
struct ControllerContext {
  Plant nominal_plant;
  Plant true_plant;
  MpcConfig mpc;
  double eta = 0.01;
  StepSchedule schedule = StepSchedule::constant;
  double projection_radius = 10.0;
  double residual_cap = 10.0;
  RffOptions rff;
  std::uint64_t seed = 0;
};

/// Names understood by make_controller.
const std::vector<std::string>& controller_names();

/// Builds `koopman`, `nominal`, `rff` or `oracle`. `gp` is reserved and throws.
std::unique_ptr<Controller> make_controller(std::string_view name, const ControllerContext& ctx);

}  // namespace kmpc
