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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "checks.hpp"
#include "kmpc/harness.hpp"

namespace py = pybind11;
using namespace kmpc;

namespace {

py::dict log_to_dict(const RunLog& log) {
  const auto n = static_cast<Eigen::Index>(log.steps.size());
  Matrix x(n, 4), w(n, 4), w_hat(n, 4);
  Vector u(n), cost(n), loss(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const StepRecord& s = log.steps[static_cast<std::size_t>(i)];
    x.row(i) = s.x.transpose();
    w.row(i) = s.w.transpose();
    w_hat.row(i) = s.w_hat.transpose();
    u[i] = s.u[0];
    cost[i] = s.stage_cost;
    loss[i] = s.loss;
  }
  py::dict d;
  d["run"] = log.run;
  d["seed"] = log.seed;
  d["controller"] = log.controller;
  d["failed"] = log.failed;
  d["failure"] = log.failure;
  d["x"] = x;
  d["u"] = u;
  d["w"] = w;
  d["w_hat"] = w_hat;
  d["stage_cost"] = cost;
  d["loss"] = loss;
  d["final_state"] = log.final_state;
  d["final_sq_error"] = final_stabilization_error(log);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online Koopman residual learning with MPC";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<NumericDomainError>(m, "NumericDomainError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<CartPoleParams>(m, "CartPoleParams")
      .def(py::init<>())
      .def(py::init([](double mc, double mp, double l, double g) {
             return CartPoleParams{mc, mp, l, g};
           }),
           py::arg("cart_mass"), py::arg("pole_mass"), py::arg("half_length"),
           py::arg("gravity") = 9.8)
      .def_readwrite("cart_mass", &CartPoleParams::cart_mass)
      .def_readwrite("pole_mass", &CartPoleParams::pole_mass)
      .def_readwrite("half_length", &CartPoleParams::half_length)
      .def_readwrite("gravity", &CartPoleParams::gravity)
      .def("scaled", &CartPoleParams::scaled);

  m.def(
      "cartpole_accelerations",
      [](const CartPoleParams& p, const State& x, double force) {
        const auto a = cartpole_accelerations(p, x, force);
        return py::make_tuple(a.cart, a.pole);
      },
      py::arg("params"), py::arg("state"), py::arg("force"));

  py::class_<Plant>(m, "Plant")
      .def_property_readonly("dt", &Plant::dt)
      .def_property_readonly("state_dim", &Plant::state_dim)
      .def("step", py::overload_cast<const State&, const ControlInput&>(&Plant::step, py::const_))
      .def("step", py::overload_cast<const State&, const ControlInput&, const Residual&>(
                       &Plant::step, py::const_));
  m.def("make_cartpole_plant", &make_cartpole_plant, py::arg("params"), py::arg("dt"),
        py::arg("substeps") = 1);
  m.def("make_linear_plant", &make_linear_plant, py::arg("a"), py::arg("b"), py::arg("dt"),
        py::arg("substeps") = 1);
  m.def("extract_residual", &extract_residual);

  py::class_<ObservableSet>(m, "ObservableSet")
      .def_readonly("lifted_dim", &ObservableSet::lifted_dim)
      .def_readonly("exogenous_dim", &ObservableSet::exogenous_dim)
      .def("lift", &ObservableSet::lift)
      .def("exogenous", &ObservableSet::exogenous);
  m.def("cartpole_observables", &cartpole_observables);

  py::class_<KoopmanModel>(m, "KoopmanModel")
      .def(py::init([](const Matrix& a, const Matrix& b) { return KoopmanModel{a, b}; }))
      .def_static("zeros", &KoopmanModel::zeros)
      .def_readwrite("a", &KoopmanModel::a)
      .def_readwrite("b", &KoopmanModel::b)
      .def("norm", &KoopmanModel::norm);
  m.def("predict_residual", &predict_residual);
  m.def("loss", &kmpc::loss);
  m.def("gradient", [](const KoopmanModel& model, const ObservableSet& obs, const Residual& w_prev,
                       const Features& z, const Residual& w_curr) {
    const ModelGradient g = gradient(model, obs, w_prev, z, w_curr);
    return py::make_tuple(g.da, g.db);
  });
  m.def("project_to_ball", &project_to_ball);

  py::enum_<StepSchedule>(m, "StepSchedule")
      .value("constant", StepSchedule::constant)
      .value("inverse_sqrt", StepSchedule::inverse_sqrt);

  py::class_<OgdLearner>(m, "OgdLearner")
      .def(py::init<ObservableSet, double, double, StepSchedule>(), py::arg("observables"),
           py::arg("eta"), py::arg("radius"), py::arg("schedule") = StepSchedule::constant)
      .def("update",
           [](OgdLearner& l, const Features& z, const Residual& w) { return l.update(z, w).loss; })
      .def_property("model", &OgdLearner::model, &OgdLearner::set_model)
      .def_property("prev_residual", &OgdLearner::prev_residual, &OgdLearner::set_prev_residual);

  py::enum_<ResidualMode>(m, "ResidualMode")
      .value("propagate", ResidualMode::propagate)
      .value("hold_constant", ResidualMode::hold_constant);

  py::class_<MpcConfig>(m, "MpcConfig")
      .def(py::init<>())
      .def_readwrite("horizon", &MpcConfig::horizon)
      .def_readwrite("q", &MpcConfig::q)
      .def_readwrite("r", &MpcConfig::r)
      .def_readwrite("input_low", &MpcConfig::input_low)
      .def_readwrite("input_high", &MpcConfig::input_high)
      .def_readwrite("max_iterations", &MpcConfig::max_iterations)
      .def_readwrite("convergence_tol", &MpcConfig::convergence_tol)
      .def_readwrite("residual_mode", &MpcConfig::residual_mode);

  py::class_<TrajectorySolution>(m, "TrajectorySolution")
      .def_readonly("inputs", &TrajectorySolution::inputs)
      .def_readonly("states", &TrajectorySolution::states)
      .def_readonly("cost", &TrajectorySolution::cost)
      .def_readonly("iterations", &TrajectorySolution::iterations)
      .def_readonly("converged", &TrajectorySolution::converged);
  m.def(
      "solve",
      [](const MpcConfig& c, const Plant& p, const KoopmanModel& model, const ObservableSet& obs,
         const State& x0, const Residual& w_init) { return solve(c, p, model, obs, x0, w_init); },
      py::arg("config"), py::arg("plant"), py::arg("model"), py::arg("observables"),
      py::arg("x0"), py::arg("w_init"));
  m.def(
      "solve_nominal",
      [](const MpcConfig& c, const Plant& p, const State& x0) { return solve_nominal(c, p, x0); },
      py::arg("config"), py::arg("plant"), py::arg("x0"));

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("base_seed", &ExperimentConfig::base_seed)
      .def_readwrite("run_count", &ExperimentConfig::run_count)
      .def_readwrite("duration", &ExperimentConfig::duration)
      .def_readwrite("controllers", &ExperimentConfig::controllers)
      .def_readwrite("nominal_scale", &ExperimentConfig::nominal_scale)
      .def_readwrite("residual_mode", &ExperimentConfig::residual_mode)
      .def("steps", &ExperimentConfig::steps)
      .def("validate", &ExperimentConfig::validate)
      .def("to_json", [](const ExperimentConfig& c) { return dump_config(c); });
  m.def("parse_config", [](const std::string& text) { return parse_config(text); });
  m.def("load_config", &load_config);
  m.def("sample_initial_state", &sample_initial_state);

  m.def(
      "simulate",
      [](const ExperimentConfig& config) {
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = simulate(config);
        }
        py::list logs;
        for (const RunLog& log : result.logs) logs.append(log_to_dict(log));
        return logs;
      },
      py::arg("config"));
  m.def(
      "run_experiment",
      [](const ExperimentConfig& config, const std::filesystem::path& out) {
        py::gil_scoped_release release;
        const RunArtifact art = run_experiment(config, out);
        return art.runs_csv.parent_path();
      },
      py::arg("config"), py::arg("out_dir"));

  m.def("sublinearity_exponent",
        [](const std::vector<double>& v) { return sublinearity_exponent(v); });

  m.def("check_names", [] {
    std::vector<std::string> names;
    for (const auto& c : acceptance::all_checks()) names.push_back(c.name);
    return names;
  });
  m.def(
      "run_checks",
      [](const std::vector<std::string>& only) {
        std::ostringstream out;
        std::vector<acceptance::CheckResult> results;
        {
          py::gil_scoped_release release;
          acceptance::run_checks(only, out, &results);
        }
        py::list rows;
        for (const auto& r : results) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["informational"] = r.informational;
          d["measured"] = r.measured;
          d["line"] = acceptance::format_result(r);
          rows.append(d);
        }
        return rows;
      },
      py::arg("only"));
}
