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

#ifndef DPEVAL_ORACLE_HPP_
#define DPEVAL_ORACLE_HPP_

// Brute-force checks of the privacy and utility analysis: enumerated
// neighbour pools, smoothness of the noise bounds, exact noise expectations,
// closed-form utility bounds and the technical lemmas they rest on. These are
// deliberately simple and slow; they exist to catch mistakes in the fast
// paths.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dpeval/dp_mech.hpp"
#include "dpeval/mdp.hpp"
#include "dpeval/returns.hpp"
#include "dpeval/rng.hpp"
#include "dpeval/sensitivity.hpp"

namespace dpeval {

// Allowance, in nats, when comparing log-ratios of computed noise bounds
// against beta. In the saturated regime the ratio sits exactly at e^beta and
// the two rounded logs can overshoot by a few ulps (about 1e-15).
inline constexpr double kLogRatioSlack = 1e-12;

// Which solver, with its weights and (for the ridge solver) lambda.
struct SolverSpec {
  Mechanism mechanism = Mechanism::kLsw;
  EvalWeights weights;
  double lambda = 0.0;
};

struct NeighborPool {
  TrajectoryDataset base;
  std::vector<Trajectory> alternatives;
};

inline constexpr std::size_t kMaxPoolAlternatives = 10'000;

// Every state sequence over 0 .. n_states-1 of length 1 .. max_length, with
// each step's reward drawn from `rewards`. No transition structure is
// imposed: privacy must hold for arbitrary data.
std::vector<Trajectory> enumerate_trajectories(int n_states, int max_length,
                                               std::span<const double> rewards);

// Drops trajectories whose first-visit map duplicates an earlier one. All
// estimators see trajectories only through that map.
std::vector<FirstVisitReturns> distinct_first_visit_maps(
    const std::vector<Trajectory>& trajectories, double gamma);

struct LocalSensitivity {
  double observed_max = 0.0;
  double bound = 0.0;
  bool holds = true;  // observed_max <= bound (1 + 1e-9)
};

// Right-hand side of the neighbour bound for a dataset with this summary:
//   weighted: f_max |(sqrt(w) phi)^+| sqrt(sum_s w_s / max(|X_s|, 1)^2)
//   ridge:    2 f_max |phi| / (lambda - |phi|^2 |rho|_inf) sqrt(phi_lambda(0))
double local_sensitivity_bound(const DatasetSummary& summary,
                               const Eigen::MatrixXd& phi,
                               const SolverSpec& solver,
                               const ReturnBound& bound);

// max over alternatives x' of |theta_X - theta_X'|, X' = X with its last
// trajectory replaced by x'. Throws std::invalid_argument for pools above
// kMaxPoolAlternatives.
LocalSensitivity local_sensitivity_oracle(const NeighborPool& pool,
                                          const SolverSpec& solver,
                                          const Eigen::MatrixXd& phi,
                                          double gamma,
                                          const ReturnBound& bound);

// Exhaustive sweep over every dataset of size m drawn (with repetition)
// from `maps` and every neighbour of it. Checks, for each ordered pair:
//   (a) sigma_X >= alpha |theta_X - theta_X'|
//   (b) |ln sigma_X^2 - ln sigma_X'^2| <= beta
//   (c) |theta_X - theta_X'| <= local_sensitivity_bound(X) (1 + 1e-9)
struct PoolSweepReport {
  std::int64_t datasets = 0;
  std::int64_t pairs = 0;
  std::int64_t condition_a_failures = 0;
  std::int64_t condition_b_failures = 0;
  std::int64_t bound_failures = 0;
  double max_alpha_ratio = 0.0;    // max alpha |dtheta| / sigma_X
  double max_log_ratio = 0.0;      // max |ln sigma^2 - ln sigma'^2|
  double max_bound_ratio = 0.0;    // max |dtheta| / bound
  double beta = 0.0;
};

PoolSweepReport sweep_neighbor_pool(const std::vector<FirstVisitReturns>& maps,
                                    int m, const Eigen::MatrixXd& phi,
                                    const SolverSpec& solver,
                                    const ReturnBound& bound,
                                    const PrivacyBudget& budget);

// psi for the chosen family.
double smooth_bound(const SolverSpec& family, const Signature& signature,
                    double op_norm, const PrivacyBudget& budget);

struct SmoothnessReport {
  std::int64_t pairs = 0;
  std::int64_t violations = 0;       // |ln psi - ln psi'| > beta + slack
  std::int64_t upper_failures = 0;   // psi < phi(k = 0)
  double max_log_ratio = 0.0;
  double beta = 0.0;
};

// Checks every pair in `signatures` at infinity-distance at most one, plus
// psi >= phi(0) for each signature.
SmoothnessReport check_smoothness(const SolverSpec& family,
                                  const std::vector<Signature>& signatures,
                                  double op_norm, const PrivacyBudget& budget);

// Same checks on explicit (v, v') pairs; pairs further apart than one are
// rejected with std::invalid_argument.
SmoothnessReport check_smoothness_pairs(
    const SolverSpec& family,
    const std::vector<std::pair<Signature, Signature>>& pairs,
    double op_norm, const PrivacyBudget& budget);

struct NoiseExpectation {
  double empirical_mean = 0.0;
  double standard_error = 0.0;
  double analytic = 0.0;
  double sigma = 0.0;
  std::int64_t draws = 0;
};

// Closed-form E_eta[J(theta + eta) - J(theta)] for eta ~ N(0, sigma^2 I):
//   weighted: sigma^2 |sqrt(w) phi|_F^2
//   ridge:    sigma^2 (lambda d / 2m + (1/m) sum_s rho_s |phi_s|^2 |X_s|)
double noise_expectation_analytic(const SolverSpec& solver,
                                  const DatasetSummary& summary,
                                  const Eigen::MatrixXd& phi, double sigma);

// Draws n_draws noise vectors at the mechanism's own sigma (or at
// sigma_override, the zero-noise hook) and averages the excess risk.
NoiseExpectation noise_expectation_identity(
    const SolverSpec& solver, const DatasetSummary& summary,
    const Eigen::MatrixXd& phi, const ReturnBound& bound,
    const PrivacyBudget& budget, std::int64_t n_draws, Rng& rng,
    std::optional<double> sigma_override = std::nullopt);

// kStandard: C^2 (sum_{S0} w + 6 sum_{S+} w (1/(p m)^2 + beta^2 (1 - beta p/2)^m)),
//        requires beta <= 1/2.
// kExtended: C^2 (sum_{S0} w + sum_{S+} w (6/(p^2 (m+1)(m+2))
//        + e^2 beta^2/4 (1 - (1 - e^-beta) p)^m)), requires beta <= 2.
enum class UtilityForm { kStandard, kExtended };

// C = alpha f_max |(sqrt(w) phi)^+| |sqrt(w) phi|_F.
double utility_constant_lsw(const PrivacyBudget& budget,
                            const ReturnBound& bound, double pinv_norm,
                            double frob_norm);

double utility_bound_lsw(const Eigen::VectorXd& p, const EvalWeights& w,
                         std::int64_t m, double beta, double scale,
                         UtilityForm form = UtilityForm::kStandard);

double utility_bound_lsw(const VisitStats& visit, const EvalWeights& w,
                         std::int64_t m, const PrivacyBudget& budget,
                         const ReturnBound& bound, double pinv_norm,
                         double frob_norm,
                         UtilityForm form = UtilityForm::kStandard);

// C_lambda = 2 alpha f_max |phi| / (lambda - |phi|^2 |rho|_inf).
double utility_constant_lsl(const PrivacyBudget& budget,
                            const ReturnBound& bound, double op_norm,
                            double rho_inf, double lambda);

// Bound on the expected excess ridge risk, in its five grouped terms.
// Requires beta < 1/2 and lambda > |phi|^2 |rho|_inf.
double utility_bound_lsl(const VisitStats& visit, const EvalWeights& rho,
                         const Eigen::MatrixXd& phi, std::int64_t m,
                         double lambda, const PrivacyBudget& budget,
                         const ReturnBound& bound);

// The same bound assembled from the ungrouped expectation terms, before
// collecting powers of lambda and m. Kept as an independent transcription.
double utility_bound_lsl_ungrouped(const VisitStats& visit,
                                   const EvalWeights& rho,
                                   const Eigen::MatrixXd& phi, std::int64_t m,
                                   double lambda, const PrivacyBudget& budget,
                                   const ReturnBound& bound);

struct BinomialCheck {
  double inverse_enumerated = 0.0;  // E[1/(B+1)]
  double inverse_closed = 0.0;
  double inverse_residual = 0.0;    // |enumerated - closed|
  double square_enumerated = 0.0;   // E[B^-2 1{B >= 1}]
  double square_bound = 0.0;
  bool square_holds = true;
};

// Exact enumeration over the Binomial(m, p) pmf. Requires 1 <= m <= 30 and
// 0 < p <= 1.
BinomialCheck binomial_lemma_check(int m, double p);

// max over x in [0, a-1] of exp(-b x) / (a - x)^2, a >= 1, b > 0.
// The printed case split (b < 2/a, b > 2, otherwise) treats the stationary
// point as a maximum; it is a minimum, so the printed value is not the max
// in general. Both are provided.
double reciprocal_max_printed(double a, double b);
double reciprocal_max_exact(double a, double b);

// max over x in [0, m-a] of exp(-2 b x) (a + x), 0 <= a <= m, b > 0.
// The printed split (b < a/2, b > m/2) uses the wrong thresholds; the
// correct ones are b >= 1/(2a) and b <= 1/(2m).
double linear_max_printed(double a, double b, double m);
double linear_max_exact(double a, double b, double m);

// Dense grid plus golden-section refinement of the best cell.
double grid_maximum(const std::function<double(double)>& f, double lo,
                    double hi, int points = 20001);

struct MaxLemmaCase {
  double a = 0.0;
  double b = 0.0;
  double m = 0.0;  // zero for the reciprocal lemma
  double grid = 0.0;
  double printed = 0.0;
  double exact = 0.0;
  double printed_error = 0.0;  // relative to grid
  double exact_error = 0.0;
};

struct MaxLemmaReport {
  std::vector<MaxLemmaCase> cases;
  std::int64_t printed_mismatches = 0;  // printed_error > tolerance
  std::int64_t exact_mismatches = 0;
  double max_printed_error = 0.0;
  double max_exact_error = 0.0;
};

MaxLemmaReport reciprocal_max_check(std::span<const double> a_values,
                                    std::span<const double> b_values,
                                    double tolerance = 1e-6);
MaxLemmaReport linear_max_check(std::span<const double> a_values,
                                std::span<const double> b_values, double m,
                                double tolerance = 1e-6);

// Monte Carlo visit statistics for MDPs without a closed form.
VisitStats estimate_visit_stats(const Mdp& mdp, std::int64_t samples,
                                Rng& rng);

}  // namespace dpeval

#endif  // DPEVAL_ORACLE_HPP_
