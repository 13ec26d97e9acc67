//
// Copyright 2026 The dpeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpeval/dp_mech.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dpeval {
namespace {

void check_dimension(const Eigen::MatrixXd& phi, const PrivacyBudget& budget) {
  if (phi.cols() != budget.d) {
    throw std::invalid_argument("privacy budget dimension " +
                                std::to_string(budget.d) +
                                " does not match feature dimension " +
                                std::to_string(phi.cols()));
  }
}

void perturb(PrivateEstimate& estimate, Rng& rng) {
  estimate.theta_hat =
      estimate.theta + rng.normal_vector(estimate.theta.size(), estimate.sigma);
}

std::string real(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", x);
  return buffer;
}

std::string vector_text(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += real(v[i]);
  }
  return out + "]";
}

}  // namespace

const char* mechanism_name(Mechanism mechanism) {
  return mechanism == Mechanism::kLsw ? "dp-lsw" : "dp-lsl";
}

PrivateEstimate dp_lsw(const DatasetSummary& summary,
                       const Eigen::MatrixXd& phi, const EvalWeights& w,
                       const ReturnBound& bound, const PrivacyBudget& budget,
                       Rng& rng) {
  check_dimension(phi, budget);
  const LswSolver<double> solver(phi, w);
  PrivateEstimate estimate;
  estimate.mechanism = Mechanism::kLsw;
  estimate.budget = budget;
  estimate.theta = solver(summary.f_x);
  const SmoothBound smooth = smooth_bound_w(summary.signature, w, budget);
  SensitivityReport& report = estimate.report;
  report.psi = smooth.psi;
  report.argmax_k = smooth.argmax_k;
  report.k_range = smooth.k_range;
  report.f_max = bound.value();
  report.constant_prefactor = lsw_prefactor(budget, bound, solver.pinv_norm());
  report.sigma = report.constant_prefactor * std::sqrt(report.psi);
  estimate.sigma = report.sigma;
  perturb(estimate, rng);
  return estimate;
}

PrivateEstimate dp_lsw(const TrajectoryDataset& dataset,
                       const Eigen::MatrixXd& phi, const EvalWeights& w,
                       double gamma, double r_max, std::optional<double> f_max,
                       double epsilon, double delta, Rng& rng,
                       CalibrationConstants constants) {
  const ReturnBound bound(r_max, gamma, f_max);
  const PrivacyBudget budget = privacy_constants(
      epsilon, delta, static_cast<int>(phi.cols()), constants);
  return dp_lsw(aggregate(dataset, gamma, phi.rows()), phi, w, bound, budget,
                rng);
}

PrivateEstimate dp_lsl(const DatasetSummary& summary,
                       const Eigen::MatrixXd& phi, const EvalWeights& rho,
                       double lambda, const ReturnBound& bound,
                       const PrivacyBudget& budget, Rng& rng) {
  check_dimension(phi, budget);
  if (rho.kind != WeightKind::kRegression) {
    throw std::invalid_argument("dp_lsl needs regression weights");
  }
  const double norm = op_norm(phi);
  // Validates lambda before any work on the data.
  const double prefactor =
      lsl_prefactor(budget, bound, norm, rho.max_norm(), lambda);
  PrivateEstimate estimate;
  estimate.mechanism = Mechanism::kLsl;
  estimate.budget = budget;
  estimate.lambda = lambda;
  estimate.theta = solve_lsl(summary, phi, rho, lambda);
  const SmoothBound smooth =
      smooth_bound_lambda(summary.signature, rho, lambda, norm, budget);
  SensitivityReport& report = estimate.report;
  report.psi = smooth.psi;
  report.argmax_k = smooth.argmax_k;
  report.k_range = smooth.k_range;
  report.f_max = bound.value();
  report.constant_prefactor = prefactor;
  report.sigma = prefactor * std::sqrt(report.psi);
  estimate.sigma = report.sigma;
  perturb(estimate, rng);
  return estimate;
}

PrivateEstimate dp_lsl(const TrajectoryDataset& dataset,
                       const Eigen::MatrixXd& phi, const EvalWeights& rho,
                       double lambda, double gamma, double r_max,
                       std::optional<double> f_max, double epsilon,
                       double delta, Rng& rng,
                       CalibrationConstants constants) {
  const ReturnBound bound(r_max, gamma, f_max);
  const PrivacyBudget budget = privacy_constants(
      epsilon, delta, static_cast<int>(phi.cols()), constants);
  return dp_lsl(aggregate(dataset, gamma, phi.rows()), phi, rho, lambda,
                bound, budget, rng);
}

void write_estimate(std::ostream& out, const PrivateEstimate& estimate,
                    bool include_private) {
  const PrivacyBudget& budget = estimate.budget;
  out << "[public]\n";
  out << "mechanism = " << mechanism_name(estimate.mechanism) << '\n';
  out << "constants = "
      << (budget.constants == CalibrationConstants::kMainText ? "main"
                                                              : "conservative")
      << '\n';
  out << "rng = " << kRngAlgorithm << '\n';
  out << "epsilon = " << real(budget.epsilon) << '\n';
  out << "delta = " << real(budget.delta) << '\n';
  out << "d = " << budget.d << '\n';
  out << "alpha = " << real(budget.alpha) << '\n';
  out << "beta = " << real(budget.beta) << '\n';
  out << "f_max = " << real(estimate.report.f_max) << '\n';
  if (estimate.mechanism == Mechanism::kLsl) {
    out << "lambda = " << real(estimate.lambda) << '\n';
  }
  out << "constant_prefactor = " << real(estimate.report.constant_prefactor)
      << '\n';
  out << "theta_hat = " << vector_text(estimate.theta_hat) << '\n';
  if (!include_private) return;
  out << "[private]\n";
  out << "theta = " << vector_text(estimate.theta) << '\n';
  out << "sigma = " << real(estimate.sigma) << '\n';
  out << "psi = " << real(estimate.report.psi) << '\n';
  out << "argmax_k = " << estimate.report.argmax_k << '\n';
  out << "k_range = " << estimate.report.k_range << '\n';
}

std::string format_estimate(const PrivateEstimate& estimate,
                            bool include_private) {
  std::ostringstream out;
  write_estimate(out, estimate, include_private);
  return out.str();
}

}  // namespace dpeval
