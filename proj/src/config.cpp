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

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kmpc/harness.hpp"
#include "kmpc/rng.hpp"

namespace kmpc {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& prefix,
                    const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(prefix + it.key(), "unknown key");
  }
}

const json& section(const json& root, const std::string& key) {
  static const json empty = json::object();
  if (!root.contains(key)) return empty;
  const json& s = root.at(key);
  if (!s.is_object()) throw ConfigError(key, "expected an object");
  return s;
}

template <typename T>
void read(const json& obj, const std::string& prefix, const std::string& key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(prefix + key, std::string("wrong type (") + e.what() + ")");
  }
}

void read_number(const json& obj, const std::string& prefix, const std::string& key,
                 double& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number()) throw ConfigError(prefix + key, "expected a number");
  out = obj.at(key).get<double>();
}

void read_int(const json& obj, const std::string& prefix, const std::string& key, int& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number_integer()) throw ConfigError(prefix + key, "expected an integer");
  out = obj.at(key).get<int>();
}

void check_vector(const std::vector<double>& v, std::size_t len, const std::string& field) {
  if (v.size() != len) {
    throw ConfigError(field, "expected " + std::to_string(len) + " entries");
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError(field, "entries must be finite");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (rng != CounterRng::kName) {
    throw ConfigError("rng", std::string("unsupported generator (expected ") + CounterRng::kName +
                                 ")");
  }
  if (run_count < 1) throw ConfigError("run_count", "must be >= 1");
  if (!(duration > 0.0)) throw ConfigError("duration", "must be positive");
  if (!(control_rate > 0.0)) throw ConfigError("control_rate", "must be positive");
  const double n = duration * control_rate;
  if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n)) {
    throw ConfigError("duration", "duration * control_rate must be an integer");
  }
  if (substeps < 1) throw ConfigError("substeps", "must be >= 1");
  if (controllers.empty()) throw ConfigError("controllers", "must list at least one controller");
  for (const auto& c : controllers) {
    bool known = false;
    for (const auto& k : controller_names()) known = known || c == k;
    if (!known) throw ConfigError("controllers", "unknown controller '" + c + "'");
  }
  try {
    true_params.validate();
  } catch (const ContractError& e) {
    throw ConfigError("plant", e.what());
  }
  if (!(nominal_scale > 0.0)) throw ConfigError("plant.nominal_scale", "must be positive");
  if (horizon < 1) throw ConfigError("mpc.horizon", "must be >= 1");
  check_vector(q_diag, 4, "mpc.q_diag");
  for (double q : q_diag) {
    if (q < 0.0) throw ConfigError("mpc.q_diag", "entries must be non-negative");
  }
  if (!(r > 0.0)) throw ConfigError("mpc.r", "must be positive");
  if (!(input_bound > 0.0)) throw ConfigError("mpc.input_bound", "must be positive");
  if (max_iterations < 1) throw ConfigError("mpc.max_iterations", "must be >= 1");
  if (!(convergence_tol >= 0.0)) throw ConfigError("mpc.convergence_tol", "must be >= 0");
  if (!(eta > 0.0)) throw ConfigError("learning.eta", "must be positive");
  if (!(projection_radius > 0.0)) {
    throw ConfigError("learning.projection_radius", "must be positive");
  }
  if (!(residual_cap > 0.0)) throw ConfigError("learning.residual_cap", "must be positive");
  if (rff.features < 1) throw ConfigError("rff.features", "must be >= 1");
  if (!(rff.sigma > 0.0)) throw ConfigError("rff.sigma", "must be positive");
  check_vector(init_low, 4, "init.low");
  check_vector(init_high, 4, "init.high");
  for (std::size_t i = 0; i < 4; ++i) {
    if (init_low[i] > init_high[i]) throw ConfigError("init", "low must not exceed high");
  }
}

int ExperimentConfig::steps() const {
  return static_cast<int>(std::lround(duration * control_rate));
}

MpcConfig ExperimentConfig::mpc_config() const {
  MpcConfig mpc;
  mpc.horizon = horizon;
  mpc.q = Eigen::Map<const Vector>(q_diag.data(), static_cast<Eigen::Index>(q_diag.size()))
              .asDiagonal();
  mpc.r = Matrix::Constant(1, 1, r);
  mpc.input_low = Vector::Constant(1, -input_bound);
  mpc.input_high = Vector::Constant(1, input_bound);
  mpc.max_iterations = max_iterations;
  mpc.convergence_tol = convergence_tol;
  mpc.residual_mode = residual_mode;
  return mpc;
}

ControllerContext ExperimentConfig::controller_context(std::uint64_t seed) const {
  // Controllers plan with one RK4 step per control period; the physics may substep.
  return ControllerContext{
      make_cartpole_plant(true_params.scaled(nominal_scale), dt(), 1),
      make_cartpole_plant(true_params, dt(), substeps),
      mpc_config(),
      eta,
      schedule,
      projection_radius,
      residual_cap,
      rff,
      seed,
  };
}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("<document>", "top level must be an object");
  reject_unknown(root, "",
                 {"rng", "base_seed", "run_count", "duration", "control_rate", "substeps",
                  "controllers", "plant", "mpc", "learning", "rff", "init"});

  ExperimentConfig c;
  read(root, "", "rng", c.rng);
  if (root.contains("base_seed")) {
    if (!root.at("base_seed").is_number_unsigned()) {
      throw ConfigError("base_seed", "expected a non-negative integer");
    }
    c.base_seed = root.at("base_seed").get<std::uint64_t>();
  }
  read_int(root, "", "run_count", c.run_count);
  read_number(root, "", "duration", c.duration);
  read_number(root, "", "control_rate", c.control_rate);
  read_int(root, "", "substeps", c.substeps);
  read(root, "", "controllers", c.controllers);

  const json& plant = section(root, "plant");
  reject_unknown(plant, "plant.",
                 {"cart_mass", "pole_mass", "half_length", "gravity", "nominal_scale"});
  read_number(plant, "plant.", "cart_mass", c.true_params.cart_mass);
  read_number(plant, "plant.", "pole_mass", c.true_params.pole_mass);
  read_number(plant, "plant.", "half_length", c.true_params.half_length);
  read_number(plant, "plant.", "gravity", c.true_params.gravity);
  read_number(plant, "plant.", "nominal_scale", c.nominal_scale);

  const json& mpc = section(root, "mpc");
  reject_unknown(mpc, "mpc.",
                 {"horizon", "q_diag", "r", "input_bound", "max_iterations", "convergence_tol",
                  "residual_mode"});
  read_int(mpc, "mpc.", "horizon", c.horizon);
  read(mpc, "mpc.", "q_diag", c.q_diag);
  read_number(mpc, "mpc.", "r", c.r);
  read_number(mpc, "mpc.", "input_bound", c.input_bound);
  read_int(mpc, "mpc.", "max_iterations", c.max_iterations);
  read_number(mpc, "mpc.", "convergence_tol", c.convergence_tol);
  if (mpc.contains("residual_mode")) {
    std::string mode;
    read(mpc, "mpc.", "residual_mode", mode);
    try {
      c.residual_mode = residual_mode_from_string(mode);
    } catch (const ContractError& e) {
      throw ConfigError("mpc.residual_mode", e.what());
    }
  }

  const json& learning = section(root, "learning");
  reject_unknown(learning, "learning.",
                 {"eta", "schedule", "projection_radius", "residual_cap"});
  read_number(learning, "learning.", "eta", c.eta);
  read_number(learning, "learning.", "projection_radius", c.projection_radius);
  read_number(learning, "learning.", "residual_cap", c.residual_cap);
  if (learning.contains("schedule")) {
    std::string schedule;
    read(learning, "learning.", "schedule", schedule);
    if (schedule == "constant") {
      c.schedule = StepSchedule::constant;
    } else if (schedule == "inverse_sqrt") {
      c.schedule = StepSchedule::inverse_sqrt;
    } else {
      throw ConfigError("learning.schedule", "expected constant or inverse_sqrt");
    }
  }

  const json& rff = section(root, "rff");
  reject_unknown(rff, "rff.", {"features", "sigma"});
  read_int(rff, "rff.", "features", c.rff.features);
  read_number(rff, "rff.", "sigma", c.rff.sigma);

  const json& init = section(root, "init");
  reject_unknown(init, "init.", {"low", "high"});
  read(init, "init.", "low", c.init_low);
  read(init, "init.", "high", c.init_high);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
  json root;
  root["rng"] = c.rng;
  root["base_seed"] = c.base_seed;
  root["run_count"] = c.run_count;
  root["duration"] = c.duration;
  root["control_rate"] = c.control_rate;
  root["substeps"] = c.substeps;
  root["controllers"] = c.controllers;
  root["plant"] = {{"cart_mass", c.true_params.cart_mass},
                   {"pole_mass", c.true_params.pole_mass},
                   {"half_length", c.true_params.half_length},
                   {"gravity", c.true_params.gravity},
                   {"nominal_scale", c.nominal_scale}};
  root["mpc"] = {{"horizon", c.horizon},
                 {"q_diag", c.q_diag},
                 {"r", c.r},
                 {"input_bound", c.input_bound},
                 {"max_iterations", c.max_iterations},
                 {"convergence_tol", c.convergence_tol},
                 {"residual_mode", std::string(to_string(c.residual_mode))}};
  root["learning"] = {
      {"eta", c.eta},
      {"schedule", c.schedule == StepSchedule::constant ? "constant" : "inverse_sqrt"},
      {"projection_radius", c.projection_radius},
      {"residual_cap", c.residual_cap}};
  root["rff"] = {{"features", c.rff.features}, {"sigma", c.rff.sigma}};
  root["init"] = {{"low", c.init_low}, {"high", c.init_high}};
  return root.dump(2) + "\n";
}

}  // namespace kmpc
