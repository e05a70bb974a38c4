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

#include "kmpc/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace kmpc {

std::vector<double> stabilization_error(const RunLog& log) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  for (const StepRecord& s : log.steps) out.push_back(s.x.squaredNorm());
  return out;
}

double final_stabilization_error(const RunLog& log) {
  if (log.final_state.size() == 0) return std::numeric_limits<double>::infinity();
  return log.final_state.squaredNorm();
}

std::vector<double> prediction_error(const RunLog& log) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  for (const StepRecord& s : log.steps) out.push_back((s.w - s.w_hat).norm());
  return out;
}

std::vector<double> lifted_prediction_error(const RunLog& log) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  for (const StepRecord& s : log.steps) out.push_back(s.lifted_error.norm());
  return out;
}

std::vector<double> residual_norm(const RunLog& log) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  for (const StepRecord& s : log.steps) out.push_back(s.w.norm());
  return out;
}

std::vector<double> cumulative_cost(const RunLog& log) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  double sum = 0.0;
  for (const StepRecord& s : log.steps) {
    sum += s.stage_cost;
    out.push_back(sum);
  }
  return out;
}

RegretReport dynamic_regret(const RunLog& alg, const RunLog& oracle) {
  if (alg.steps.size() != oracle.steps.size()) {
    throw ContractError("dynamic regret: logs have different lengths");
  }
  RegretReport report;
  report.cumulative_gap.reserve(alg.steps.size());
  double gap = 0.0;
  for (std::size_t i = 0; i < alg.steps.size(); ++i) {
    report.cumulative_cost += alg.steps[i].stage_cost;
    report.oracle_cost += oracle.steps[i].stage_cost;
    gap += alg.steps[i].stage_cost - oracle.steps[i].stage_cost;
    report.cumulative_gap.push_back(gap);
  }
  report.dynamic_regret = report.cumulative_cost - report.oracle_cost;
  try {
    report.dynamic_exponent = sublinearity_exponent(report.cumulative_gap);
  } catch (const ContractError&) {
    // Undefined for short or non-positive gaps; left as NaN.
  }
  return report;
}

std::vector<EstimationSample> estimation_samples(const RunLog& log) {
  std::vector<EstimationSample> out;
  out.reserve(log.steps.size());
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const StepRecord& s = log.steps[i];
    EstimationSample sample;
    sample.w_prev = i == 0 ? Residual::Zero(s.w.size()) : log.steps[i - 1].w;
    sample.z = make_features(s.x, s.u);
    sample.w_curr = s.w;
    sample.online_loss = s.loss;
    out.push_back(std::move(sample));
  }
  return out;
}

KoopmanModel batch_least_squares(std::span<const EstimationSample> samples,
                                 const ObservableSet& obs, double radius) {
  const int dp = obs.lifted_dim;
  const int dq = obs.exogenous_dim;
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n == 0) return KoopmanModel::zeros(obs);
  Matrix regressors(n, dp + dq);
  Matrix targets(n, dp);
  for (Eigen::Index i = 0; i < n; ++i) {
    const EstimationSample& s = samples[static_cast<std::size_t>(i)];
    regressors.row(i).head(dp) = obs.lift(s.w_prev).transpose();
    regressors.row(i).tail(dq) = obs.exogenous(s.w_prev, s.z).transpose();
    targets.row(i) = obs.lift(s.w_curr).transpose();
  }
  const Matrix alpha_t = regressors.completeOrthogonalDecomposition().solve(targets);
  KoopmanModel model;
  model.a = alpha_t.topRows(dp).transpose();
  model.b = alpha_t.bottomRows(dq).transpose();
  return project_to_ball(std::move(model), radius);
}

EstimationRegret estimation_regret(std::span<const EstimationSample> samples,
                                   const ObservableSet& obs, double radius) {
  EstimationRegret out;
  out.comparator = batch_least_squares(samples, obs, radius);
  out.cumulative.reserve(samples.size());
  double sum = 0.0;
  for (const EstimationSample& s : samples) {
    sum += s.online_loss - loss(out.comparator, obs, s.w_prev, s.z, s.w_curr);
    out.cumulative.push_back(sum);
  }
  out.regret = sum;
  return out;
}

EstimationRegret estimation_regret(const RunLog& log, const ObservableSet& obs, double radius) {
  const auto samples = estimation_samples(log);
  return estimation_regret(samples, obs, radius);
}

double sublinearity_exponent(std::span<const double> cumulative) {
  const std::size_t n = cumulative.size();
  if (n < 8) throw ContractError("sublinearity exponent needs at least 8 samples");
  const std::size_t begin = n / 2;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto m = static_cast<double>(n - begin);
  for (std::size_t i = begin; i < n; ++i) {
    if (!(cumulative[i] > 0.0)) {
      throw ContractError("sublinearity exponent needs positive values in the second half");
    }
    const double lx = std::log(static_cast<double>(i + 1));
    const double ly = std::log(cumulative[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

Band aggregate(const std::vector<std::vector<double>>& series) {
  Band band;
  if (series.empty()) return band;
  const std::size_t len = series.front().size();
  for (const auto& s : series) {
    if (s.size() != len) throw ContractError("aggregate: series have different lengths");
  }
  band.mean.assign(len, 0.0);
  band.min.assign(len, std::numeric_limits<double>::infinity());
  band.max.assign(len, -std::numeric_limits<double>::infinity());
  for (const auto& s : series) {
    for (std::size_t i = 0; i < len; ++i) {
      band.mean[i] += s[i];
      band.min[i] = std::min(band.min[i], s[i]);
      band.max[i] = std::max(band.max[i], s[i]);
    }
  }
  for (double& v : band.mean) v /= static_cast<double>(series.size());
  return band;
}

double window_mean(std::span<const double> values, std::size_t begin, std::size_t end) {
  end = std::min(end, values.size());
  if (begin >= end) throw ContractError("window_mean: empty window");
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += values[i];
  return sum / static_cast<double>(end - begin);
}

}  // namespace kmpc
