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

#include "kmpc/controllers.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "kmpc/rng.hpp"

namespace kmpc {

namespace {

std::optional<std::vector<ControlInput>> warm_start_from(
    const std::optional<TrajectorySolution>& last) {
  if (!last) return std::nullopt;
  return shift_warm_start(last->inputs);
}

// Stream ids for CounterRng; the harness owns stream 0.
constexpr std::uint64_t kRffStream = 1;

}  // namespace

LearningMpc::LearningMpc(std::string name, Plant nominal, MpcConfig config, OgdLearner learner,
                         double residual_cap)
    : name_(std::move(name)),
      nominal_(std::move(nominal)),
      config_(std::move(config)),
      learner_(std::move(learner)),
      residual_cap_(residual_cap) {
  config_.validate(nominal_.state_dim(), nominal_.input_dim());
}

ControlInput LearningMpc::step(int /*t*/, const State& x) {
  const auto warm = warm_start_from(last_);
  const KoopmanModel& model = learner_.model();
  const ObservableSet& obs = learner_.observables();
  const Residual& w_prev = learner_.prev_residual();

  Residual w_init = w_prev;
  if (config_.residual_mode == ResidualMode::hold_constant) {
    // Constant-residual reading: one prediction at the planned first input.
    const ControlInput u_guess =
        warm ? warm->front() : ControlInput::Zero(nominal_.input_dim());
    w_init = predict_residual(model, obs, w_prev, make_features(x, u_guess));
  }
  last_ = solve(config_, nominal_, model, obs, x, w_init, warm);

  const ControlInput u = clamp_input(last_->inputs.front(), config_.input_low, config_.input_high);
  const Features z = make_features(x, u);
  const Vector lifted = predict_lifted(model, obs, w_prev, z);
  info_ = StepInfo{};
  info_.predicted_residual = obs.recovery * lifted;
  info_.iterations = last_->iterations;
  info_.converged = last_->converged;
  info_.plan_cost = last_->cost;
  x_t_ = x;
  return u;
}

void LearningMpc::observe(const ControlInput& u, const State& x_next) {
  const Residual w =
      clamp_residual(extract_residual(nominal_, x_t_, u, x_next), residual_cap_);
  const OgdLearner::Update upd = learner_.update(make_features(x_t_, u), w);
  info_.observed_residual = w;
  info_.predicted_residual = upd.predicted_residual;
  info_.lifted_error = learner_.observables().lift(w) - upd.lifted_prediction;
  info_.loss = upd.loss;
}

NominalMpc::NominalMpc(Plant nominal, MpcConfig config, double residual_cap)
    : nominal_(std::move(nominal)), config_(std::move(config)), residual_cap_(residual_cap) {
  config_.validate(nominal_.state_dim(), nominal_.input_dim());
}

ControlInput NominalMpc::step(int /*t*/, const State& x) {
  last_ = solve_nominal(config_, nominal_, x, warm_start_from(last_));
  info_ = StepInfo{};
  info_.predicted_residual = Residual::Zero(nominal_.state_dim());
  info_.iterations = last_->iterations;
  info_.converged = last_->converged;
  info_.plan_cost = last_->cost;
  x_t_ = x;
  return clamp_input(last_->inputs.front(), config_.input_low, config_.input_high);
}

void NominalMpc::observe(const ControlInput& u, const State& x_next) {
  // Nothing is learned; the residual is recorded for the run log only.
  const Residual w =
      clamp_residual(extract_residual(nominal_, x_t_, u, x_next), residual_cap_);
  info_.observed_residual = w;
  info_.lifted_error = w;
  info_.loss = w.squaredNorm();
}

OracleMpc::OracleMpc(Plant truth, Plant nominal, MpcConfig config, double residual_cap)
    : truth_(std::move(truth)),
      nominal_(std::move(nominal)),
      config_(std::move(config)),
      residual_cap_(residual_cap) {
  config_.validate(truth_.state_dim(), truth_.input_dim());
}

ControlInput OracleMpc::step(int /*t*/, const State& x) {
  last_ = solve_nominal(config_, truth_, x, warm_start_from(last_));
  const ControlInput u =
      clamp_input(last_->inputs.front(), config_.input_low, config_.input_high);
  info_ = StepInfo{};
  // The oracle knows h exactly: its prediction is the true one-step defect.
  info_.predicted_residual = truth_.step(x, u) - nominal_.step(x, u);
  info_.iterations = last_->iterations;
  info_.converged = last_->converged;
  info_.plan_cost = last_->cost;
  x_t_ = x;
  return u;
}

void OracleMpc::observe(const ControlInput& u, const State& x_next) {
  const Residual w =
      clamp_residual(extract_residual(nominal_, x_t_, u, x_next), residual_cap_);
  info_.observed_residual = w;
  info_.lifted_error = w - info_.predicted_residual;
  info_.loss = info_.lifted_error.squaredNorm();
}

RffModel::RffModel(int input_dim, RffOptions options, std::uint64_t seed) {
  if (input_dim < 1 || options.features < 1) throw ContractError("RFF dimensions must be >= 1");
  if (!(options.sigma > 0.0)) throw ContractError("RFF sigma must be positive");
  CounterRng rng(seed, kRffStream);
  frequencies_.resize(options.features, input_dim);
  phases_.resize(options.features);
  for (int j = 0; j < options.features; ++j) {
    for (int i = 0; i < input_dim; ++i) frequencies_(j, i) = options.sigma * rng.normal();
    phases_[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  scale_ = std::sqrt(2.0 / options.features);
}

Vector RffModel::features(const Vector& v) const {
  require_size(v.size(), frequencies_.cols(), "RFF input");
  return scale_ * (frequencies_ * v + phases_).array().cos().matrix();
}

ObservableSet RffModel::observables(int residual_dim, int feature_dim) const {
  require_size(residual_dim + feature_dim, frequencies_.cols(), "RFF input dimension");
  ObservableSet obs;
  obs.residual_dim = residual_dim;
  obs.feature_dim = feature_dim;
  obs.lifted_dim = residual_dim;
  obs.exogenous_dim = feature_count();
  obs.phi = [](const Vector& w) { return w; };
  obs.psi = [model = *this](const Vector& w_prev, const Vector& z) {
    Vector v(w_prev.size() + z.size());
    v << w_prev, z;
    return model.features(v);
  };
  obs.recovery = Matrix::Identity(residual_dim, residual_dim);
  return obs;
}

const std::vector<std::string>& controller_names() {
  static const std::vector<std::string> names{"koopman", "nominal", "rff", "oracle"};
  return names;
}

std::unique_ptr<Controller> make_controller(std::string_view name, const ControllerContext& ctx) {
  const int nx = ctx.nominal_plant.state_dim();
  const int nz = nx + ctx.nominal_plant.input_dim();
  if (name == "koopman") {
    OgdLearner learner(cartpole_observables(), ctx.eta, ctx.projection_radius, ctx.schedule);
    return std::make_unique<LearningMpc>("koopman", ctx.nominal_plant, ctx.mpc, std::move(learner),
                                         ctx.residual_cap);
  }
  if (name == "rff") {
    const RffModel rff(nx + nz, ctx.rff, ctx.seed);
    OgdLearner learner(rff.observables(nx, nz), ctx.eta, ctx.projection_radius, ctx.schedule);
    return std::make_unique<LearningMpc>("rff", ctx.nominal_plant, ctx.mpc, std::move(learner),
                                         ctx.residual_cap);
  }
  if (name == "nominal") {
    return std::make_unique<NominalMpc>(ctx.nominal_plant, ctx.mpc, ctx.residual_cap);
  }
  if (name == "oracle") {
    return std::make_unique<OracleMpc>(ctx.true_plant, ctx.nominal_plant, ctx.mpc,
                                       ctx.residual_cap);
  }
  if (name == "gp") {
    throw ContractError("controller 'gp' is reserved and not implemented");
  }
  throw ContractError("unknown controller '" + std::string(name) + "'");
}

}  // namespace kmpc
