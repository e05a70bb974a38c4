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
#include <iosfwd>

#include "kmpc/types.hpp"

namespace kmpc {

/// Observable maps for the lifted residual model
///
///   phi(w_t) = A phi(w_{t-1}) + B psi(w_{t-1}, z_t),    w_t = C phi(w_t).
///
/// `phi` lifts a residual, `psi` builds the exogenous observables from the
/// previous residual and the current features, and `recovery` (C) maps the
/// lifted vector back to residual space.
struct ObservableSet {
  using Lift = std::function<Vector(const Vector& w)>;
  using Exogenous = std::function<Vector(const Vector& w_prev, const Vector& z)>;

  int residual_dim = 0;
  int feature_dim = 0;
  int lifted_dim = 0;
  int exogenous_dim = 0;
  Lift phi;
  Exogenous psi;
  Matrix recovery;

  /// phi(w) with length checks.
  Vector lift(const Vector& w) const;
  /// psi(w_prev, z) with length checks.
  Vector exogenous(const Vector& w_prev, const Vector& z) const;
};

/// z_t = [x_t; u_t].
Features make_features(const State& x, const ControlInput& u);

/// phi(w) = w, C = I_4 and the nine bounded cart-pole observables
///   [tanh x, tanh xd, tanh th, tanh thd, u, tanh th tanh thd, tanh^2 thd, u tanh th, u tanh thd]
/// built from z = [x, xd, th, thd, u]. psi ignores w_prev.
ObservableSet cartpole_observables();

/// phi(w) = w with no exogenous observables; the trivial model predicts zero.
ObservableSet identity_observables(int residual_dim, int feature_dim);

/// Parameter alpha = [A B] of the lifted residual model.
struct KoopmanModel {
  Matrix a;  // lifted_dim x lifted_dim
  Matrix b;  // lifted_dim x exogenous_dim

  static KoopmanModel zeros(const ObservableSet& obs);

  /// Frobenius norm of the stacked [A B].
  double norm() const;
  bool is_zero() const;
};

Vector predict_lifted(const KoopmanModel& model, const ObservableSet& obs, const Residual& w_prev,
                      const Features& z);

/// C (A phi(w_prev) + B psi(w_prev, z)).
Residual predict_residual(const KoopmanModel& model, const ObservableSet& obs,
                          const Residual& w_prev, const Features& z);

/// || phi(w_curr) - A phi(w_prev) - B psi(w_prev, z) ||^2
double loss(const KoopmanModel& model, const ObservableSet& obs, const Residual& w_prev,
            const Features& z, const Residual& w_curr);

struct ModelGradient {
  Matrix da;
  Matrix db;
};

/// Gradient of `loss` with respect to A and B.
ModelGradient gradient(const KoopmanModel& model, const ObservableSet& obs, const Residual& w_prev,
                       const Features& z, const Residual& w_curr);

/// Euclidean projection of [A B] onto the Frobenius ball of `radius`.
KoopmanModel project_to_ball(KoopmanModel model, double radius);

enum class StepSchedule { constant, inverse_sqrt };

/// Projected online gradient descent on the per-sample least-squares loss.
///
/// The learner owns alpha_t and the previous residual w_{t-1}. It starts at
/// alpha_1 = 0 and w_0 = 0. With StepSchedule::inverse_sqrt the rate at update
/// t is eta / sqrt(t).
class OgdLearner {
 public:
  OgdLearner(ObservableSet obs, double eta, double radius,
             StepSchedule schedule = StepSchedule::constant);

  struct Update {
    double loss = 0.0;   // l_t(alpha_t), evaluated before the step
    Vector lifted_prediction;
    Residual predicted_residual;
  };

  /// Consumes the sample (w_{t-1}, z_t, w_t): gradient step, projection, and
  /// w_t becomes the stored previous residual.
  Update update(const Features& z, const Residual& w_curr);

  const KoopmanModel& model() const { return model_; }
  const ObservableSet& observables() const { return obs_; }
  const Residual& prev_residual() const { return prev_residual_; }
  double eta() const { return eta_; }
  double radius() const { return radius_; }
  long updates() const { return updates_; }

  /// Overwrites the parameter (projected onto the ball).
  void set_model(KoopmanModel model);
  void set_prev_residual(const Residual& w);

 private:
  ObservableSet obs_;
  KoopmanModel model_;
  double eta_;
  double radius_;
  StepSchedule schedule_;
  Residual prev_residual_;
  long updates_ = 0;
};

/// Model snapshot format: a "d_phi,d_psi" header line, the two sizes, then one
/// line each for A and B holding the row-major entries.
void write_model_csv(std::ostream& out, const KoopmanModel& model);
KoopmanModel read_model_csv(std::istream& in);

}  // namespace kmpc
