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

#include "kmpc/mpc.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace kmpc {

std::string_view to_string(ResidualMode mode) {
  return mode == ResidualMode::propagate ? "propagate" : "hold_constant";
}

ResidualMode residual_mode_from_string(std::string_view name) {
  if (name == "propagate") return ResidualMode::propagate;
  if (name == "hold_constant") return ResidualMode::hold_constant;
  throw ContractError("unknown residual mode '" + std::string(name) +
                      "' (expected propagate or hold_constant)");
}

void MpcConfig::validate(int state_dim, int input_dim) const {
  if (horizon < 1) throw ContractError("MPC horizon must be >= 1");
  if (q.rows() != state_dim || q.cols() != state_dim) throw ContractError("Q has wrong shape");
  if (r.rows() != input_dim || r.cols() != input_dim) throw ContractError("R has wrong shape");
  require_size(input_low.size(), input_dim, "input_low");
  require_size(input_high.size(), input_dim, "input_high");
  if (!(input_low.array() < input_high.array()).all()) {
    throw ContractError("input_low must be strictly below input_high");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> q_eig(0.5 * (q + q.transpose()));
  if (q_eig.eigenvalues().minCoeff() < -1e-12) throw ContractError("Q must be PSD");
  const Eigen::SelfAdjointEigenSolver<Matrix> r_eig(0.5 * (r + r.transpose()));
  if (r_eig.eigenvalues().minCoeff() <= 0.0) throw ContractError("R must be positive definite");
  if (max_iterations < 1) throw ContractError("max_iterations must be >= 1");
  if (!(fd_step > 0.0)) throw ContractError("fd_step must be positive");
}

double stage_cost(const MpcConfig& config, const State& x, const ControlInput& u) {
  return x.dot(config.q * x) + u.dot(config.r * u);
}

namespace {

// Residual-augmented discrete map on s = [x; w_prev].
class AugmentedDynamics {
 public:
  AugmentedDynamics(const MpcConfig& config, const Plant& plant, const KoopmanModel& model,
                    const ObservableSet& obs)
      : config_(config), plant_(plant), model_(model), obs_(obs), nx_(plant.state_dim()) {}

  int dim() const { return 2 * nx_; }

  // Returns the next augmented state; `w_used` receives the residual added at this step.
  Vector step(const Vector& s, const ControlInput& u, Residual* w_used = nullptr) const {
    const auto x = s.head(nx_);
    const auto w_prev = s.tail(nx_);
    Residual w_hat;
    if (config_.residual_mode == ResidualMode::propagate) {
      w_hat = predict_residual(model_, obs_, w_prev, make_features(x, u));
    } else {
      w_hat = w_prev;
    }
    Vector next(2 * nx_);
    next.head(nx_) = plant_.step(x, u, w_hat);
    next.tail(nx_) = w_hat;
    if (w_used != nullptr) *w_used = w_hat;
    return next;
  }

  void jacobians(const Vector& s, const ControlInput& u, Matrix& fx, Matrix& fu) const {
    const double h = config_.fd_step;
    const int n = dim();
    const auto m = u.size();
    fx.resize(n, n);
    fu.resize(n, m);
    Vector sp = s;
    for (int j = 0; j < n; ++j) {
      sp[j] = s[j] + h;
      const Vector plus = step(sp, u);
      sp[j] = s[j] - h;
      const Vector minus = step(sp, u);
      sp[j] = s[j];
      fx.col(j) = (plus - minus) / (2.0 * h);
    }
    ControlInput up = u;
    for (Eigen::Index j = 0; j < m; ++j) {
      up[j] = u[j] + h;
      const Vector plus = step(s, up);
      up[j] = u[j] - h;
      const Vector minus = step(s, up);
      up[j] = u[j];
      fu.col(j) = (plus - minus) / (2.0 * h);
    }
  }

 private:
  const MpcConfig& config_;
  const Plant& plant_;
  const KoopmanModel& model_;
  const ObservableSet& obs_;
  int nx_;
};

struct Trajectory {
  std::vector<Vector> states;  // augmented, N + 1
  std::vector<ControlInput> inputs;
  std::vector<Residual> residuals;
  double cost = 0.0;
};

Trajectory simulate(const MpcConfig& config, const AugmentedDynamics& dyn, const Vector& s0,
                    const std::vector<ControlInput>& inputs, int nx) {
  Trajectory traj;
  traj.inputs = inputs;
  traj.states.reserve(inputs.size() + 1);
  traj.residuals.reserve(inputs.size());
  traj.states.push_back(s0);
  for (const ControlInput& u : inputs) {
    const Vector& s = traj.states.back();
    traj.cost += stage_cost(config, s.head(nx), u);
    Residual w;
    traj.states.push_back(dyn.step(s, u, &w));
    traj.residuals.push_back(std::move(w));
  }
  if (!std::isfinite(traj.cost)) throw NumericDomainError("rollout cost is not finite");
  return traj;
}

Vector augmented_initial(const State& x0, const Residual& w_init) {
  Vector s0(x0.size() + w_init.size());
  s0 << x0, w_init;
  return s0;
}

void check_problem(const MpcConfig& config, const Plant& plant, const KoopmanModel& model,
                   const ObservableSet& obs, const State& x0, const Residual& w_init) {
  config.validate(plant.state_dim(), plant.input_dim());
  require_size(x0.size(), plant.state_dim(), "x0");
  require_size(w_init.size(), plant.state_dim(), "w_init");
  require_finite(x0, "x0");
  require_finite(w_init, "w_init");
  require_size(obs.residual_dim, plant.state_dim(), "observable residual dimension");
  require_size(obs.feature_dim, plant.state_dim() + plant.input_dim(),
               "observable feature dimension");
  if (model.a.rows() != obs.lifted_dim || model.b.cols() != obs.exogenous_dim) {
    throw ContractError("Koopman model dimensions do not match the observable set");
  }
}

struct Gains {
  std::vector<Vector> feedforward;
  std::vector<Matrix> feedback;
};

// Riccati-like sweep for the Gauss-Newton quadratization. Returns false when
// regularization exceeds its cap.
bool backward_pass(const MpcConfig& config, const Trajectory& traj, const std::vector<Matrix>& fxs,
                   const std::vector<Matrix>& fus, double& mu, Gains& gains) {
  const int n = static_cast<int>(traj.states.front().size());
  const int nx = n / 2;
  const auto m = traj.inputs.front().size();
  const auto horizon = traj.inputs.size();
  gains.feedforward.assign(horizon, Vector::Zero(m));
  gains.feedback.assign(horizon, Matrix::Zero(m, n));

  while (true) {
    Vector vx = Vector::Zero(n);
    Matrix vxx = Matrix::Zero(n, n);
    bool failed = false;
    for (std::size_t i = horizon; i-- > 0;) {
      const Vector& s = traj.states[i];
      const ControlInput& u = traj.inputs[i];
      const Matrix& fx = fxs[i];
      const Matrix& fu = fus[i];

      Vector lx = Vector::Zero(n);
      lx.head(nx) = 2.0 * config.q * s.head(nx);
      Matrix lxx = Matrix::Zero(n, n);
      lxx.topLeftCorner(nx, nx) = 2.0 * config.q;

      const Vector qx = lx + fx.transpose() * vx;
      const Vector qu = 2.0 * config.r * u + fu.transpose() * vx;
      const Matrix qxx = lxx + fx.transpose() * vxx * fx;
      const Matrix quu = 2.0 * config.r + fu.transpose() * vxx * fu;
      const Matrix qux = fu.transpose() * vxx * fx;

      const Matrix quu_reg = quu + mu * Matrix::Identity(m, m);
      Eigen::LLT<Matrix> llt(quu_reg);
      if (llt.info() != Eigen::Success) {
        failed = true;
        break;
      }
      Vector k = -llt.solve(qu);
      Matrix kmat = -llt.solve(qux);

      // Clamp the feedforward against the box and re-solve the free channels.
      std::vector<bool> clamped(m, false);
      bool any_clamped = false;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (u[j] + k[j] > config.input_high[j]) {
          k[j] = config.input_high[j] - u[j];
          clamped[j] = any_clamped = true;
        } else if (u[j] + k[j] < config.input_low[j]) {
          k[j] = config.input_low[j] - u[j];
          clamped[j] = any_clamped = true;
        }
      }
      if (any_clamped) {
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (!clamped[j]) free_idx.push_back(j);
        }
        for (Eigen::Index j = 0; j < m; ++j) {
          if (clamped[j]) kmat.row(j).setZero();
        }
        if (!free_idx.empty()) {
          const auto nf = static_cast<Eigen::Index>(free_idx.size());
          Matrix hff(nf, nf);
          Vector rhs(nf);
          Matrix rhs_k(nf, n);
          for (Eigen::Index a = 0; a < nf; ++a) {
            const Eigen::Index ja = free_idx[a];
            rhs[a] = qu[ja];
            rhs_k.row(a) = qux.row(ja);
            for (Eigen::Index c = 0; c < m; ++c) {
              if (clamped[c]) rhs[a] += quu_reg(ja, c) * k[c];
            }
            for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = quu_reg(ja, free_idx[b]);
          }
          Eigen::LLT<Matrix> llt_free(hff);
          const Vector kf = -llt_free.solve(rhs);
          const Matrix kmf = -llt_free.solve(rhs_k);
          for (Eigen::Index a = 0; a < nf; ++a) {
            k[free_idx[a]] = kf[a];
            kmat.row(free_idx[a]) = kmf.row(a);
          }
        }
      }

      gains.feedforward[i] = k;
      gains.feedback[i] = kmat;
      vx = qx + kmat.transpose() * quu * k + kmat.transpose() * qu + qux.transpose() * k;
      vxx = qxx + kmat.transpose() * quu * kmat + kmat.transpose() * qux + qux.transpose() * kmat;
      vxx = 0.5 * (vxx + vxx.transpose());
    }
    if (!failed) return true;
    mu = mu <= 0.0 ? 1e-6 : mu * 10.0;
    if (mu > 1e6) return false;
  }
}

}  // namespace

RolloutResult rollout(const MpcConfig& config, const Plant& plant, const KoopmanModel& model,
                      const ObservableSet& obs, const State& x0, const Residual& w_init,
                      const std::vector<ControlInput>& inputs) {
  check_problem(config, plant, model, obs, x0, w_init);
  require_size(static_cast<Eigen::Index>(inputs.size()), config.horizon, "input sequence");
  for (const auto& u : inputs) {
    require_size(u.size(), plant.input_dim(), "input");
    require_finite(u, "input");
  }
  const AugmentedDynamics dyn(config, plant, model, obs);
  Trajectory traj = simulate(config, dyn, augmented_initial(x0, w_init), inputs, plant.state_dim());
  RolloutResult out;
  out.cost = traj.cost;
  out.residuals = std::move(traj.residuals);
  out.states.reserve(traj.states.size());
  for (const Vector& s : traj.states) out.states.push_back(s.head(plant.state_dim()));
  return out;
}

TrajectorySolution solve(const MpcConfig& config, const Plant& plant, const KoopmanModel& model,
                         const ObservableSet& obs, const State& x0, const Residual& w_init,
                         const std::optional<std::vector<ControlInput>>& warm_start) {
  check_problem(config, plant, model, obs, x0, w_init);
  const int nx = plant.state_dim();
  const int nu = plant.input_dim();
  const auto horizon = static_cast<std::size_t>(config.horizon);
  const AugmentedDynamics dyn(config, plant, model, obs);
  const Vector s0 = augmented_initial(x0, w_init);

  const std::vector<ControlInput> zeros(
      horizon, clamp_input(ControlInput::Zero(nu), config.input_low, config.input_high));
  std::vector<ControlInput> initial = zeros;
  if (warm_start) {
    require_size(static_cast<Eigen::Index>(warm_start->size()), config.horizon, "warm start");
    for (std::size_t i = 0; i < horizon; ++i) {
      require_size((*warm_start)[i].size(), nu, "warm start input");
      initial[i] = (*warm_start)[i].allFinite()
                       ? clamp_input((*warm_start)[i], config.input_low, config.input_high)
                       : zeros[i];
    }
  }

  Trajectory traj;
  try {
    traj = simulate(config, dyn, s0, initial, nx);
  } catch (const NumericDomainError&) {
    if (!warm_start) throw;
    traj = simulate(config, dyn, s0, zeros, nx);
  }

  TrajectorySolution sol;
  sol.initial_cost = traj.cost;
  double mu = 0.0;
  std::vector<Matrix> fxs(horizon);
  std::vector<Matrix> fus(horizon);
  Gains gains;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    sol.iterations = iter + 1;
    try {
      for (std::size_t i = 0; i < horizon; ++i) {
        dyn.jacobians(traj.states[i], traj.inputs[i], fxs[i], fus[i]);
      }
    } catch (const NumericDomainError&) {
      break;
    }
    if (!backward_pass(config, traj, fxs, fus, mu, gains)) break;

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < config.max_line_search; ++ls, alpha *= 0.5) {
      Trajectory cand;
      cand.states.reserve(horizon + 1);
      cand.inputs.reserve(horizon);
      cand.residuals.reserve(horizon);
      cand.states.push_back(s0);
      try {
        for (std::size_t i = 0; i < horizon; ++i) {
          const Vector& s = cand.states.back();
          ControlInput u = traj.inputs[i] + alpha * gains.feedforward[i] +
                           gains.feedback[i] * (s - traj.states[i]);
          u = clamp_input(u, config.input_low, config.input_high);
          cand.cost += stage_cost(config, s.head(nx), u);
          Residual w;
          cand.states.push_back(dyn.step(s, u, &w));
          cand.inputs.push_back(std::move(u));
          cand.residuals.push_back(std::move(w));
        }
      } catch (const NumericDomainError&) {
        continue;
      }
      if (std::isfinite(cand.cost) && cand.cost < traj.cost) {
        const double decrease = traj.cost - cand.cost;
        traj = std::move(cand);
        accepted = true;
        if (decrease < config.convergence_tol) sol.converged = true;
        break;
      }
    }
    if (!accepted) {
      // No descent along the search direction: stationary up to the line search resolution.
      sol.converged = true;
      break;
    }
    if (sol.converged) break;
    mu = mu > 1e-6 ? mu / 10.0 : 0.0;
  }

  sol.cost = traj.cost;
  sol.inputs = std::move(traj.inputs);
  sol.predicted_residuals = std::move(traj.residuals);
  sol.states.reserve(traj.states.size());
  for (const Vector& s : traj.states) sol.states.push_back(s.head(nx));
  return sol;
}

TrajectorySolution solve_nominal(const MpcConfig& config, const Plant& plant, const State& x0,
                                 const std::optional<std::vector<ControlInput>>& warm_start) {
  MpcConfig nominal = config;
  nominal.residual_mode = ResidualMode::hold_constant;
  const ObservableSet obs = identity_observables(plant.state_dim(),
                                                 plant.state_dim() + plant.input_dim());
  return solve(nominal, plant, KoopmanModel::zeros(obs), obs, x0,
               Residual::Zero(plant.state_dim()), warm_start);
}

std::vector<ControlInput> shift_warm_start(const std::vector<ControlInput>& inputs) {
  if (inputs.empty()) return {};
  std::vector<ControlInput> shifted(inputs.begin() + 1, inputs.end());
  shifted.push_back(inputs.back());
  return shifted;
}

}  // namespace kmpc
