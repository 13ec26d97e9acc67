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

#ifndef DPEVAL_DP_MECH_HPP_
#define DPEVAL_DP_MECH_HPP_

#include <optional>
#include <ostream>
#include <string>

#include <Eigen/Core>

#include "dpeval/estimators.hpp"
#include "dpeval/returns.hpp"
#include "dpeval/rng.hpp"
#include "dpeval/sensitivity.hpp"

namespace dpeval {

enum class Mechanism { kLsw, kLsl };

// "dp-lsw" / "dp-lsl".
const char* mechanism_name(Mechanism mechanism);

// Output of one private release. Only theta_hat and the public parameters
// may leave the trusted boundary; theta and the report are derived from the
// data and are tagged private when serialised.
struct PrivateEstimate {
  Mechanism mechanism = Mechanism::kLsw;
  Eigen::VectorXd theta;
  Eigen::VectorXd theta_hat;
  double sigma = 0.0;
  double lambda = 0.0;  // unused by the weighted mechanism
  SensitivityReport report;
  PrivacyBudget budget;
};

// Weighted least squares with output perturbation. The budget's d must equal
// phi.cols(). Throws RankDeficientError when sqrt(w) phi is rank deficient.
PrivateEstimate dp_lsw(const DatasetSummary& summary,
                       const Eigen::MatrixXd& phi, const EvalWeights& w,
                       const ReturnBound& bound, const PrivacyBudget& budget,
                       Rng& rng);

PrivateEstimate dp_lsw(const TrajectoryDataset& dataset,
                       const Eigen::MatrixXd& phi, const EvalWeights& w,
                       double gamma, double r_max, std::optional<double> f_max,
                       double epsilon, double delta, Rng& rng,
                       CalibrationConstants constants =
                           CalibrationConstants::kMainText);

// Ridge least squares with output perturbation. Throws
// InvalidRegularizationError unless lambda > |phi|^2 |rho|_inf; nothing is
// sampled in that case.
PrivateEstimate dp_lsl(const DatasetSummary& summary,
                       const Eigen::MatrixXd& phi, const EvalWeights& rho,
                       double lambda, const ReturnBound& bound,
                       const PrivacyBudget& budget, Rng& rng);

PrivateEstimate dp_lsl(const TrajectoryDataset& dataset,
                       const Eigen::MatrixXd& phi, const EvalWeights& rho,
                       double lambda, double gamma, double r_max,
                       std::optional<double> f_max, double epsilon,
                       double delta, Rng& rng,
                       CalibrationConstants constants =
                           CalibrationConstants::kMainText);

// Key-value text form:
//   [public]   mechanism, constants, epsilon, delta, d, alpha, beta, f_max,
//              lambda (ridge only), constant_prefactor, theta_hat
//   [private]  theta, sigma, psi, argmax_k, k_range
// The private section is written only when include_private is set. Reals
// use %.17g so values round-trip exactly.
void write_estimate(std::ostream& out, const PrivateEstimate& estimate,
                    bool include_private);
std::string format_estimate(const PrivateEstimate& estimate,
                            bool include_private);

}  // namespace dpeval

#endif  // DPEVAL_DP_MECH_HPP_
