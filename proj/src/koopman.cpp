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

#include "kmpc/koopman.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace kmpc {

Vector ObservableSet::lift(const Vector& w) const {
  require_size(w.size(), residual_dim, "residual");
  Vector out = phi(w);
  require_size(out.size(), lifted_dim, "phi output");
  return out;
}

Vector ObservableSet::exogenous(const Vector& w_prev, const Vector& z) const {
  require_size(w_prev.size(), residual_dim, "previous residual");
  require_size(z.size(), feature_dim, "features");
  Vector out = psi(w_prev, z);
  require_size(out.size(), exogenous_dim, "psi output");
  return out;
}

Features make_features(const State& x, const ControlInput& u) {
  Features z(x.size() + u.size());
  z << x, u;
  return z;
}

ObservableSet cartpole_observables() {
  ObservableSet obs;
  obs.residual_dim = 4;
  obs.feature_dim = 5;
  obs.lifted_dim = 4;
  obs.exogenous_dim = 9;
  obs.phi = [](const Vector& w) { return w; };
  obs.psi = [](const Vector&, const Vector& z) {
    const double tx = std::tanh(z[0]);
    const double txd = std::tanh(z[1]);
    const double tth = std::tanh(z[2]);
    const double tthd = std::tanh(z[3]);
    const double u = z[4];
    Vector out(9);
    out << tx, txd, tth, tthd, u, tth * tthd, tthd * tthd, u * tth, u * tthd;
    return out;
  };
  obs.recovery = Matrix::Identity(4, 4);
  return obs;
}

ObservableSet identity_observables(int residual_dim, int feature_dim) {
  ObservableSet obs;
  obs.residual_dim = residual_dim;
  obs.feature_dim = feature_dim;
  obs.lifted_dim = residual_dim;
  obs.exogenous_dim = 0;
  obs.phi = [](const Vector& w) { return w; };
  obs.psi = [](const Vector&, const Vector&) { return Vector(0); };
  obs.recovery = Matrix::Identity(residual_dim, residual_dim);
  return obs;
}

KoopmanModel KoopmanModel::zeros(const ObservableSet& obs) {
  return {Matrix::Zero(obs.lifted_dim, obs.lifted_dim),
          Matrix::Zero(obs.lifted_dim, obs.exogenous_dim)};
}

double KoopmanModel::norm() const {
  return std::sqrt(a.squaredNorm() + b.squaredNorm());
}

bool KoopmanModel::is_zero() const {
  return (a.size() == 0 || a.isZero(0.0)) && (b.size() == 0 || b.isZero(0.0));
}

namespace {

void check_model(const KoopmanModel& model, const ObservableSet& obs) {
  if (model.a.rows() != obs.lifted_dim || model.a.cols() != obs.lifted_dim ||
      model.b.rows() != obs.lifted_dim || model.b.cols() != obs.exogenous_dim) {
    throw ContractError("Koopman model dimensions do not match the observable set");
  }
}

}  // namespace

Vector predict_lifted(const KoopmanModel& model, const ObservableSet& obs, const Residual& w_prev,
                      const Features& z) {
  check_model(model, obs);
  return model.a * obs.lift(w_prev) + model.b * obs.exogenous(w_prev, z);
}

Residual predict_residual(const KoopmanModel& model, const ObservableSet& obs,
                          const Residual& w_prev, const Features& z) {
  return obs.recovery * predict_lifted(model, obs, w_prev, z);
}

double loss(const KoopmanModel& model, const ObservableSet& obs, const Residual& w_prev,
            const Features& z, const Residual& w_curr) {
  return (obs.lift(w_curr) - predict_lifted(model, obs, w_prev, z)).squaredNorm();
}

ModelGradient gradient(const KoopmanModel& model, const ObservableSet& obs, const Residual& w_prev,
                       const Features& z, const Residual& w_curr) {
  const Vector phi_prev = obs.lift(w_prev);
  const Vector psi = obs.exogenous(w_prev, z);
  check_model(model, obs);
  const Vector err = obs.lift(w_curr) - model.a * phi_prev - model.b * psi;
  return {-2.0 * err * phi_prev.transpose(), -2.0 * err * psi.transpose()};
}

KoopmanModel project_to_ball(KoopmanModel model, double radius) {
  // Points within rounding of the sphere count as inside, so projecting twice
  // changes nothing.
  const double n = model.norm();
  if (n > radius * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())) {
    const double scale = radius / n;
    model.a *= scale;
    model.b *= scale;
  }
  return model;
}

OgdLearner::OgdLearner(ObservableSet obs, double eta, double radius, StepSchedule schedule)
    : obs_(std::move(obs)),
      model_(KoopmanModel::zeros(obs_)),
      eta_(eta),
      radius_(radius),
      schedule_(schedule),
      prev_residual_(Residual::Zero(obs_.residual_dim)) {
  if (!(eta_ > 0.0)) throw ContractError("learning rate must be positive");
  if (!(radius_ > 0.0)) throw ContractError("projection radius must be positive");
}

OgdLearner::Update OgdLearner::update(const Features& z, const Residual& w_curr) {
  Update result;
  result.lifted_prediction = predict_lifted(model_, obs_, prev_residual_, z);
  result.predicted_residual = obs_.recovery * result.lifted_prediction;
  result.loss = (obs_.lift(w_curr) - result.lifted_prediction).squaredNorm();

  const ModelGradient grad = gradient(model_, obs_, prev_residual_, z, w_curr);
  if (!grad.da.allFinite() || !grad.db.allFinite()) {
    throw NumericDomainError("OGD gradient is not finite at update " +
                             std::to_string(updates_ + 1));
  }
  ++updates_;
  const double rate =
      schedule_ == StepSchedule::constant ? eta_ : eta_ / std::sqrt(static_cast<double>(updates_));
  model_.a -= rate * grad.da;
  model_.b -= rate * grad.db;
  model_ = project_to_ball(std::move(model_), radius_);
  prev_residual_ = w_curr;
  return result;
}

void OgdLearner::set_model(KoopmanModel model) {
  check_model(model, obs_);
  model_ = project_to_ball(std::move(model), radius_);
}

void OgdLearner::set_prev_residual(const Residual& w) {
  require_size(w.size(), obs_.residual_dim, "previous residual");
  prev_residual_ = w;
}

namespace {

void write_row(std::ostream& out, const char* tag, const Matrix& m) {
  out << tag;
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", m(r, c));
      out << buf;
    }
  }
  out << '\n';
}

std::vector<std::string> split_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw ContractError(std::string("model snapshot: missing ") + what);
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) fields.push_back(cell);
  return fields;
}

Matrix read_row(std::istream& in, const char* tag, int rows, int cols) {
  const auto fields = split_line(in, tag);
  if (fields.empty() || fields[0] != tag ||
      fields.size() != static_cast<std::size_t>(rows) * cols + 1) {
    throw ContractError(std::string("model snapshot: malformed ") + tag + " row");
  }
  Matrix m(rows, cols);
  std::size_t k = 1;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = std::stod(fields[k++]);
  }
  return m;
}

}  // namespace

void write_model_csv(std::ostream& out, const KoopmanModel& model) {
  out << "d_phi,d_psi\n" << model.a.rows() << ',' << model.b.cols() << '\n';
  write_row(out, "A", model.a);
  write_row(out, "B", model.b);
}

KoopmanModel read_model_csv(std::istream& in) {
  const auto header = split_line(in, "header");
  if (header.size() != 2 || header[0] != "d_phi" || header[1] != "d_psi") {
    throw ContractError("model snapshot: expected header d_phi,d_psi");
  }
  const auto dims = split_line(in, "dimensions");
  if (dims.size() != 2) throw ContractError("model snapshot: malformed dimensions");
  const int d_phi = std::stoi(dims[0]);
  const int d_psi = std::stoi(dims[1]);
  KoopmanModel model;
  model.a = read_row(in, "A", d_phi, d_phi);
  model.b = read_row(in, "B", d_phi, d_psi);
  return model;
}

}  // namespace kmpc
