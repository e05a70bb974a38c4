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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kmpc/koopman.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

struct StepRecord {
  int t = 0;  // 1-based
  State x;
  ControlInput u;
  Residual w;      // observed residual w_t
  Residual w_hat;  // one-step prediction made before observing w_t
  Vector lifted_error;
  double stage_cost = 0.0;
  double loss = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct RunLog {
  int run = 0;
  std::uint64_t seed = 0;
  std::string controller;
  double scale = 1.0;
  double dt = 0.0;
  std::vector<StepRecord> steps;  // t = 1..T
  State final_state;              // x_{T+1}
  bool failed = false;
  std::string failure;
};

/// ||x_t||^2 for t = 1..T.
std::vector<double> stabilization_error(const RunLog& log);
/// ||x_{T+1}||^2.
double final_stabilization_error(const RunLog& log);
/// ||w_t - w_hat_t||_2 per step.
std::vector<double> prediction_error(const RunLog& log);
/// ||phi(w_t) - lifted prediction||_2 per step.
std::vector<double> lifted_prediction_error(const RunLog& log);
/// ||w_t||_2 per step, the error of always predicting zero.
std::vector<double> residual_norm(const RunLog& log);
/// Running sum of stage costs.
std::vector<double> cumulative_cost(const RunLog& log);

struct RegretReport {
  double cumulative_cost = 0.0;
  double oracle_cost = 0.0;
  double dynamic_regret = 0.0;
  double estimation_regret = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> cumulative_gap;  // per step, alg minus oracle
  double dynamic_exponent = std::numeric_limits<double>::quiet_NaN();
  double estimation_exponent = std::numeric_limits<double>::quiet_NaN();
};

/// Sum of the algorithm's stage costs minus the oracle's. Each log carries its
/// own residual realization. Growth exponent is filled when defined.
RegretReport dynamic_regret(const RunLog& alg, const RunLog& oracle);

/// One online least-squares sample (w_{t-1}, z_t, w_t) and the loss the online
/// learner paid on it.
struct EstimationSample {
  Residual w_prev;
  Features z;
  Residual w_curr;
  double online_loss = 0.0;
};

/// Rebuilds the samples from a learner's log: w_0 = 0, z_t = [x_t; u_t].
std::vector<EstimationSample> estimation_samples(const RunLog& log);

/// Best fixed parameter in hindsight by batch linear least squares, radially
/// projected onto the Frobenius ball when it falls outside.
KoopmanModel batch_least_squares(std::span<const EstimationSample> samples,
                                 const ObservableSet& obs, double radius);

struct EstimationRegret {
  double regret = 0.0;
  std::vector<double> cumulative;  // partial sums against the final comparator
  KoopmanModel comparator;
};

EstimationRegret estimation_regret(std::span<const EstimationSample> samples,
                                   const ObservableSet& obs, double radius);
EstimationRegret estimation_regret(const RunLog& log, const ObservableSet& obs, double radius);

/// Least-squares slope of log(cumulative[t-1]) against log(t) over the second
/// half of the sequence. Requires at least 8 entries, all positive in that half.
double sublinearity_exponent(std::span<const double> cumulative);

/// Per-index mean / min / max over equally long series.
struct Band {
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
};

Band aggregate(const std::vector<std::vector<double>>& series);

/// Mean of values[begin, end).
double window_mean(std::span<const double> values, std::size_t begin, std::size_t end);

}  // namespace kmpc
