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

#include "dpeval/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dpeval/estimators.hpp"

namespace dpeval {
namespace {

constexpr double kBoundSlack = 1e-9;

// Data-independent pieces of the mechanism, computed once per sweep.
struct SolverConstants {
  double pinv_norm = 0.0;  // weighted solver
  double op_norm = 0.0;
  double prefactor = 0.0;  // sigma = prefactor * sqrt(psi)
  double sensitivity_scale = 0.0;  // local bound = scale * sqrt(...)
};

SolverConstants solver_constants(const Eigen::MatrixXd& phi,
                                 const SolverSpec& solver,
                                 const ReturnBound& bound,
                                 const PrivacyBudget* budget) {
  SolverConstants out;
  out.op_norm = op_norm(phi);
  if (solver.mechanism == Mechanism::kLsw) {
    out.pinv_norm = LswSolver<double>(phi, solver.weights).pinv_norm();
    out.sensitivity_scale = bound.value() * out.pinv_norm;
    if (budget) out.prefactor = lsw_prefactor(*budget, bound, out.pinv_norm);
  } else {
    const double threshold =
        out.op_norm * out.op_norm * solver.weights.max_norm();
    if (!(solver.lambda > threshold)) {
      throw InvalidRegularizationError("lambda must exceed |phi|^2 |rho|_inf");
    }
    out.sensitivity_scale =
        2.0 * bound.value() * out.op_norm / (solver.lambda - threshold);
    if (budget) {
      out.prefactor = lsl_prefactor(*budget, bound, out.op_norm,
                                    solver.weights.max_norm(), solver.lambda);
    }
  }
  return out;
}

double bound_from_signature(const Signature& signature,
                            const SolverSpec& solver,
                            const SolverConstants& constants) {
  if (solver.mechanism == Mechanism::kLsw) {
    double total = 0.0;
    const EvalWeights& w = solver.weights;
    for (Eigen::Index s = 0; s < w.size(); ++s) {
      const double c = static_cast<double>(
          std::max<std::int64_t>(signature.counts[s], 1));
      total += w.values[s] / (c * c);
    }
    return constants.sensitivity_scale * std::sqrt(total);
  }
  return constants.sensitivity_scale *
         std::sqrt(phi_lambda(signature, solver.weights, 0, solver.lambda,
                              constants.op_norm));
}

Eigen::VectorXd solve(const DatasetSummary& summary, const Eigen::MatrixXd& phi,
                      const SolverSpec& solver,
                      const LswSolver<double>* lsw) {
  if (solver.mechanism == Mechanism::kLsw) {
    return lsw ? (*lsw)(summary.f_x) : solve_lsw(summary, phi, solver.weights);
  }
  return solve_lsl(summary, phi, solver.weights, solver.lambda);
}

bool log_ratio_ok(double gap, double beta) {
  return gap <= beta + kLogRatioSlack;
}

// Calls visit(indices) for every nondecreasing index tuple of length `size`
// over 0 .. n-1, i.e. every multiset.
template <typename Visit>
void for_each_multiset(std::size_t n, int size, Visit&& visit) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(size), 0);
  if (size == 0) {
    visit(idx);
    return;
  }
  if (n == 0) return;
  while (true) {
    visit(idx);
    int pos = size - 1;
    while (pos >= 0 && idx[pos] == n - 1) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (int j = pos + 1; j < size; ++j) idx[j] = idx[pos];
  }
}

}  // namespace

std::vector<Trajectory> enumerate_trajectories(int n_states, int max_length,
                                               std::span<const double> rewards) {
  if (n_states < 1 || max_length < 1 || rewards.empty()) {
    throw std::invalid_argument("enumerate_trajectories: empty alphabet");
  }
  std::vector<Trajectory> out;
  const std::size_t symbols =
      static_cast<std::size_t>(n_states) * rewards.size();
  for (int length = 1; length <= max_length; ++length) {
    std::vector<std::size_t> digits(static_cast<std::size_t>(length), 0);
    while (true) {
      Trajectory t;
      for (std::size_t digit : digits) {
        t.steps.push_back({static_cast<StateIndex>(digit / rewards.size()),
                           rewards[digit % rewards.size()]});
      }
      out.push_back(std::move(t));
      int pos = length - 1;
      while (pos >= 0 && digits[pos] == symbols - 1) digits[pos--] = 0;
      if (pos < 0) break;
      ++digits[pos];
    }
  }
  return out;
}

std::vector<FirstVisitReturns> distinct_first_visit_maps(
    const std::vector<Trajectory>& trajectories, double gamma) {
  std::vector<FirstVisitReturns> maps;
  for (const Trajectory& t : trajectories) {
    FirstVisitReturns map = first_visit_returns(t, gamma);
    if (std::find(maps.begin(), maps.end(), map) == maps.end()) {
      maps.push_back(std::move(map));
    }
  }
  return maps;
}

double local_sensitivity_bound(const DatasetSummary& summary,
                               const Eigen::MatrixXd& phi,
                               const SolverSpec& solver,
                               const ReturnBound& bound) {
  const SolverConstants constants =
      solver_constants(phi, solver, bound, nullptr);
  return bound_from_signature(summary.signature, solver, constants);
}

LocalSensitivity local_sensitivity_oracle(const NeighborPool& pool,
                                          const SolverSpec& solver,
                                          const Eigen::MatrixXd& phi,
                                          double gamma,
                                          const ReturnBound& bound) {
  if (pool.alternatives.size() > kMaxPoolAlternatives) {
    throw std::invalid_argument("neighbour pool too large to enumerate");
  }
  const DatasetSummary base = aggregate(pool.base, gamma, phi.rows());
  const Eigen::VectorXd theta = solve(base, phi, solver, nullptr);
  LocalSensitivity out;
  out.bound = local_sensitivity_bound(base, phi, solver, bound);
  for (const Trajectory& alternative : pool.alternatives) {
    const DatasetSummary neighbor =
        aggregate(neighbor_replace_last(pool.base, alternative), gamma,
                  phi.rows());
    out.observed_max = std::max(
        out.observed_max, (theta - solve(neighbor, phi, solver, nullptr)).norm());
  }
  out.holds = out.observed_max <= out.bound * (1.0 + kBoundSlack);
  return out;
}

PoolSweepReport sweep_neighbor_pool(const std::vector<FirstVisitReturns>& maps,
                                    int m, const Eigen::MatrixXd& phi,
                                    const SolverSpec& solver,
                                    const ReturnBound& bound,
                                    const PrivacyBudget& budget) {
  if (m < 1) throw std::invalid_argument("sweep: m must be positive");
  if (maps.size() > kMaxPoolAlternatives) {
    throw std::invalid_argument("neighbour pool too large to enumerate");
  }
  const Eigen::Index n = phi.rows();
  const SolverConstants constants =
      solver_constants(phi, solver, bound, &budget);
  std::optional<LswSolver<double>> lsw;
  if (solver.mechanism == Mechanism::kLsw) lsw.emplace(phi, solver.weights);

  PoolSweepReport report;
  report.beta = budget.beta;
  const std::size_t u = maps.size();
  std::vector<Eigen::VectorXd> thetas(u);
  std::vector<double> sigmas(u), log_var(u), bounds(u);

  DatasetSummary summary;
  summary.signature.m = m;
  for_each_multiset(u, m - 1, [&](const std::vector<std::size_t>& prefix) {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(n);
    CountVector counts = CountVector::Zero(n);
    auto add = [&](const FirstVisitReturns& map) {
      for (const StateReturn& visit : map) {
        sums[visit.state] += visit.value;
        ++counts[visit.state];
      }
    };
    for (std::size_t i : prefix) add(maps[i]);
    for (std::size_t last = 0; last < u; ++last) {
      summary.signature.counts = counts;
      Eigen::VectorXd total = sums;
      for (const StateReturn& visit : maps[last]) {
        total[visit.state] += visit.value;
        ++summary.signature.counts[visit.state];
      }
      summary.f_x = Eigen::VectorXd::Zero(n);
      for (Eigen::Index s = 0; s < n; ++s) {
        const auto c = summary.signature.counts[s];
        if (c > 0) summary.f_x[s] = total[s] / static_cast<double>(c);
      }
      thetas[last] = solve(summary, phi, solver, lsw ? &*lsw : nullptr);
      const double psi =
          smooth_bound(solver, summary.signature, constants.op_norm, budget);
      sigmas[last] = constants.prefactor * std::sqrt(psi);
      log_var[last] = 2.0 * std::log(sigmas[last]);
      bounds[last] = bound_from_signature(summary.signature, solver, constants);
    }
    ++report.datasets;
    for (std::size_t i = 0; i < u; ++i) {
      for (std::size_t j = 0; j < u; ++j) {
        if (i == j) continue;
        ++report.pairs;
        const double gap = (thetas[i] - thetas[j]).norm();
        const double alpha_ratio = budget.alpha * gap / sigmas[i];
        report.max_alpha_ratio = std::max(report.max_alpha_ratio, alpha_ratio);
        if (!(sigmas[i] >= budget.alpha * gap)) ++report.condition_a_failures;
        const double log_gap = std::abs(log_var[i] - log_var[j]);
        report.max_log_ratio = std::max(report.max_log_ratio, log_gap);
        if (!log_ratio_ok(log_gap, budget.beta)) ++report.condition_b_failures;
        const double bound_ratio = gap / bounds[i];
        report.max_bound_ratio = std::max(report.max_bound_ratio, bound_ratio);
        if (!(gap <= bounds[i] * (1.0 + kBoundSlack))) ++report.bound_failures;
      }
    }
  });
  return report;
}

double smooth_bound(const SolverSpec& family, const Signature& signature,
                    double op_norm, const PrivacyBudget& budget) {
  if (family.mechanism == Mechanism::kLsw) {
    return smooth_bound_w(signature, family.weights, budget).psi;
  }
  return smooth_bound_lambda(signature, family.weights, family.lambda, op_norm,
                             budget)
      .psi;
}

namespace {

double phi_at_zero(const SolverSpec& family, const Signature& signature,
                   double op_norm) {
  return family.mechanism == Mechanism::kLsw
             ? phi_w(signature, family.weights, 0)
             : phi_lambda(signature, family.weights, 0, family.lambda,
                          op_norm);
}

bool adjacent(const Signature& a, const Signature& b) {
  return a.counts.size() == b.counts.size() && a.m == b.m &&
         (a.counts - b.counts).cwiseAbs().maxCoeff() <= 1;
}

}  // namespace

SmoothnessReport check_smoothness(const SolverSpec& family,
                                  const std::vector<Signature>& signatures,
                                  double op_norm, const PrivacyBudget& budget) {
  SmoothnessReport report;
  report.beta = budget.beta;
  std::vector<double> log_psi(signatures.size());
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    const double psi = smooth_bound(family, signatures[i], op_norm, budget);
    if (psi < phi_at_zero(family, signatures[i], op_norm)) {
      ++report.upper_failures;
    }
    log_psi[i] = std::log(psi);
  }
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    for (std::size_t j = i + 1; j < signatures.size(); ++j) {
      if (!adjacent(signatures[i], signatures[j])) continue;
      ++report.pairs;
      const double gap = std::abs(log_psi[i] - log_psi[j]);
      report.max_log_ratio = std::max(report.max_log_ratio, gap);
      if (!log_ratio_ok(gap, budget.beta)) ++report.violations;
    }
  }
  return report;
}

SmoothnessReport check_smoothness_pairs(
    const SolverSpec& family,
    const std::vector<std::pair<Signature, Signature>>& pairs, double op_norm,
    const PrivacyBudget& budget) {
  SmoothnessReport report;
  report.beta = budget.beta;
  for (const auto& [v, w] : pairs) {
    if (!adjacent(v, w)) {
      throw std::invalid_argument("check_smoothness_pairs: pair not adjacent");
    }
    const double psi_v = smooth_bound(family, v, op_norm, budget);
    const double psi_w = smooth_bound(family, w, op_norm, budget);
    if (psi_v < phi_at_zero(family, v, op_norm)) ++report.upper_failures;
    if (psi_w < phi_at_zero(family, w, op_norm)) ++report.upper_failures;
    ++report.pairs;
    const double gap = std::abs(std::log(psi_v) - std::log(psi_w));
    report.max_log_ratio = std::max(report.max_log_ratio, gap);
    if (!log_ratio_ok(gap, budget.beta)) ++report.violations;
  }
  return report;
}

double noise_expectation_analytic(const SolverSpec& solver,
                                  const DatasetSummary& summary,
                                  const Eigen::MatrixXd& phi, double sigma) {
  const double var = sigma * sigma;
  if (solver.mechanism == Mechanism::kLsw) {
    return var * (solver.weights.values.asDiagonal() *
                  phi.rowwise().squaredNorm())
                     .sum();
  }
  const double m = static_cast<double>(summary.m());
  const double data =
      (solver.weights.values.array() * phi.rowwise().squaredNorm().array() *
       summary.signature.counts.cast<double>().array())
          .sum();
  return var * (solver.lambda * static_cast<double>(phi.cols()) / (2.0 * m) +
                data / m);
}

NoiseExpectation noise_expectation_identity(
    const SolverSpec& solver, const DatasetSummary& summary,
    const Eigen::MatrixXd& phi, const ReturnBound& bound,
    const PrivacyBudget& budget, std::int64_t n_draws, Rng& rng,
    std::optional<double> sigma_override) {
  if (n_draws < 2) throw std::invalid_argument("need at least two draws");
  const SolverConstants constants =
      solver_constants(phi, solver, bound, &budget);
  const Eigen::VectorXd theta = solve(summary, phi, solver, nullptr);
  NoiseExpectation out;
  out.sigma = sigma_override
                  ? *sigma_override
                  : constants.prefactor *
                        std::sqrt(smooth_bound(solver, summary.signature,
                                               constants.op_norm, budget));
  out.draws = n_draws;
  out.analytic = noise_expectation_analytic(solver, summary, phi, out.sigma);
  // Welford running mean / variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 1; i <= n_draws; ++i) {
    const Eigen::VectorXd noisy =
        theta + rng.normal_vector(theta.size(), out.sigma);
    const double excess =
        solver.mechanism == Mechanism::kLsw
            ? excess_risk_w(noisy, theta, summary, phi, solver.weights)
            : excess_risk_lambda(noisy, theta, summary, phi, solver.weights,
                                 solver.lambda);
    const double delta = excess - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (excess - mean);
  }
  out.empirical_mean = mean;
  out.standard_error =
      std::sqrt(m2 / static_cast<double>(n_draws - 1) /
                static_cast<double>(n_draws));
  return out;
}

double utility_constant_lsw(const PrivacyBudget& budget,
                            const ReturnBound& bound, double pinv_norm,
                            double frob_norm) {
  return budget.alpha * bound.value() * pinv_norm * frob_norm;
}

double utility_bound_lsw(const Eigen::VectorXd& p, const EvalWeights& w,
                         std::int64_t m, double beta, double scale,
                         UtilityForm form) {
  if (p.size() != w.size()) {
    throw std::invalid_argument("utility_bound_lsw: length mismatch");
  }
  if (m < 1) throw std::invalid_argument("utility_bound_lsw: m must be >= 1");
  if (form == UtilityForm::kStandard && !(beta > 0.0 && beta <= 0.5)) {
    throw std::invalid_argument("utility_bound_lsw needs 0 < beta <= 1/2");
  }
  if (form == UtilityForm::kExtended && !(beta > 0.0 && beta <= 2.0)) {
    throw std::invalid_argument("utility_bound_lsw needs 0 < beta <= 2");
  }
  const double md = static_cast<double>(m);
  const double e = std::numbers::e;
  double unvisited = 0.0;
  double visited = 0.0;
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    const double ps = p[s];
    if (ps == 0.0) {
      unvisited += w.values[s];
      continue;
    }
    if (form == UtilityForm::kStandard) {
      visited += 6.0 * w.values[s] *
                 (1.0 / (ps * ps * md * md) +
                  beta * beta * std::pow(1.0 - beta * ps / 2.0, md));
    } else {
      visited += w.values[s] *
                 (6.0 / (ps * ps * (md + 1.0) * (md + 2.0)) +
                  e * e * beta * beta / 4.0 *
                      std::pow(1.0 - (1.0 - std::exp(-beta)) * ps, md));
    }
  }
  return scale * scale * (unvisited + visited);
}

double utility_bound_lsw(const VisitStats& visit, const EvalWeights& w,
                         std::int64_t m, const PrivacyBudget& budget,
                         const ReturnBound& bound, double pinv_norm,
                         double frob_norm, UtilityForm form) {
  return utility_bound_lsw(
      visit.p, w, m, budget.beta,
      utility_constant_lsw(budget, bound, pinv_norm, frob_norm), form);
}

double utility_constant_lsl(const PrivacyBudget& budget,
                            const ReturnBound& bound, double op_norm,
                            double rho_inf, double lambda) {
  return lsl_prefactor(budget, bound, op_norm, rho_inf, lambda);
}

namespace {

struct LslTerms {
  double scale = 0.0;  // C_lambda
  double spread = 0.0;  // |phi|^2 |rho|_inf^2
  double rho_sq = 0.0;  // |rho|_2^2
  Eigen::VectorXd row_sq;  // |phi_s|^2
  double d = 0.0;
  double m = 0.0;
};

LslTerms lsl_terms(const VisitStats& visit, const EvalWeights& rho,
                   const Eigen::MatrixXd& phi, std::int64_t m, double lambda,
                   const PrivacyBudget& budget, const ReturnBound& bound) {
  if (visit.size() != rho.size() || phi.rows() != rho.size()) {
    throw std::invalid_argument("utility_bound_lsl: length mismatch");
  }
  if (!(budget.beta > 0.0 && budget.beta < 0.5)) {
    throw std::invalid_argument("utility_bound_lsl needs beta < 1/2");
  }
  if (m < 1) throw std::invalid_argument("utility_bound_lsl: m must be >= 1");
  LslTerms t;
  const double norm = op_norm(phi);
  t.scale = utility_constant_lsl(budget, bound, norm, rho.max_norm(), lambda);
  t.spread = norm * norm * rho.max_norm() * rho.max_norm();
  t.rho_sq = rho.values.squaredNorm();
  t.row_sq = phi.rowwise().squaredNorm();
  t.d = static_cast<double>(phi.cols());
  t.m = static_cast<double>(m);
  return t;
}

}  // namespace

double utility_bound_lsl(const VisitStats& visit, const EvalWeights& rho,
                         const Eigen::MatrixXd& phi, std::int64_t m,
                         double lambda, const PrivacyBudget& budget,
                         const ReturnBound& bound) {
  const LslTerms t = lsl_terms(visit, rho, phi, m, lambda, budget, bound);
  const double e = std::numbers::e;
  const double beta = budget.beta;
  const Eigen::VectorXd& p = visit.p;
  const Eigen::VectorXd& r = rho.values;
  const Eigen::Index n = p.size();

  double visited = 0.0;
  double unvisited = 0.0;
  double single = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    visited += r[s] * p[s] * (t.d * t.spread / 2.0 + 2.0 * t.rho_sq * t.row_sq[s]);
    unvisited += r[s] * std::pow(1.0 - p[s], t.m);
    single += r[s] * r[s] * t.row_sq[s] * (p[s] - p[s] * p[s]);
  }
  double product = 0.0;
  double cross = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index u = 0; u < n; ++u) {
      product += r[s] * r[u] * p[s] * p[u] * t.row_sq[s];
      if (s == u) continue;
      cross += r[s] * r[u] * t.row_sq[s] *
               (visit.p_pair(s, u) - p[s] * p[u] +
                visit.p_excl(s, u) * std::pow(1.0 - p[u], t.m - 1.0) /
                    (2.0 * e * beta));
    }
  }
  const double groups = visited + lambda / t.m * t.d * t.rho_sq +
                        t.d * t.spread / (4.0 * e * beta) * unvisited / t.m +
                        t.m / lambda * t.spread * product +
                        t.spread / lambda * (single + cross);
  return t.scale * t.scale * groups;
}

double utility_bound_lsl_ungrouped(const VisitStats& visit,
                                   const EvalWeights& rho,
                                   const Eigen::MatrixXd& phi, std::int64_t m,
                                   double lambda, const PrivacyBudget& budget,
                                   const ReturnBound& bound) {
  const LslTerms t = lsl_terms(visit, rho, phi, m, lambda, budget, bound);
  const double e = std::numbers::e;
  const double beta = budget.beta;
  const double md = t.m;
  // E over X of (lambda d/2m + (1/m) sum rho |phi|^2 |X_s|) times
  // (2 |rho|^2 + spread/lambda sum rho (|X_s| + 1{|X_s| = 0}/(2 e beta))),
  // expanded with the binomial moments term by term.
  double total = lambda * t.d * t.rho_sq / md;
  double inner = 0.0;
  for (Eigen::Index s = 0; s < visit.size(); ++s) {
    const double ps = visit.p[s];
    inner += rho.values[s] *
             (md * ps + std::pow(1.0 - ps, md) / (2.0 * e * beta));
  }
  total += t.d * t.spread / (2.0 * md) * inner;
  double linear = 0.0;
  for (Eigen::Index s = 0; s < visit.size(); ++s) {
    linear += rho.values[s] * visit.p[s] * t.row_sq[s] * md;
  }
  total += 2.0 * t.rho_sq / md * linear;
  double diagonal = 0.0;
  double off = 0.0;
  for (Eigen::Index s = 0; s < visit.size(); ++s) {
    const double ps = visit.p[s];
    const double rs = rho.values[s];
    // E|X_s|^2; the indicator term vanishes since |X_s| 1{|X_s| = 0} = 0.
    diagonal += rs * rs * t.row_sq[s] * (md * md * ps * ps + md * (ps - ps * ps));
    for (Eigen::Index u = 0; u < visit.size(); ++u) {
      if (u == s) continue;
      const double pu = visit.p[u];
      const double both = md * (md - 1.0) * ps * pu + md * visit.p_pair(s, u);
      const double alone = md * visit.p_excl(s, u) * std::pow(1.0 - pu, md - 1.0);
      off += rs * rho.values[u] * t.row_sq[s] * (both + alone / (2.0 * e * beta));
    }
  }
  total += t.spread / (lambda * md) * (diagonal + off);
  return t.scale * t.scale * total;
}

BinomialCheck binomial_lemma_check(int m, double p) {
  if (m < 1 || m > 30) {
    throw std::invalid_argument("binomial_lemma_check: 1 <= m <= 30");
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binomial_lemma_check: 0 < p <= 1");
  }
  BinomialCheck out;
  double choose = 1.0;  // C(m, k)
  for (int k = 0; k <= m; ++k) {
    if (k > 0) choose = choose * (m - k + 1) / k;
    const double pmf = choose * std::pow(p, k) * std::pow(1.0 - p, m - k);
    out.inverse_enumerated += pmf / (k + 1.0);
    if (k >= 1) out.square_enumerated += pmf / (static_cast<double>(k) * k);
  }
  const double md = m;
  const double q = 1.0 - p;
  out.inverse_closed = (1.0 - std::pow(q, md + 1.0)) / (p * (md + 1.0));
  out.inverse_residual = std::abs(out.inverse_enumerated - out.inverse_closed);
  out.square_bound =
      6.0 / (p * (md + 1.0)) *
      ((1.0 - std::pow(q, md + 2.0)) / (p * (md + 2.0)) - std::pow(q, md + 1.0) -
       p * (md + 1.0) / 2.0 * std::pow(q, md));
  // At m = 1 the bound is attained exactly, so allow for rounding.
  out.square_holds =
      out.square_enumerated <= out.square_bound * (1.0 + 1e-12);
  return out;
}

double reciprocal_max_printed(double a, double b) {
  if (b < 2.0 / a) return 1.0 / (a * a);
  if (b > 2.0) return std::exp(1.0 - a * b);
  const double e = std::numbers::e;
  return e * e / 4.0 * b * b * std::exp(-a * b);
}

double reciprocal_max_exact(double a, double b) {
  // The log of the objective is convex in x, so the max sits at an endpoint.
  return std::max(1.0 / (a * a), std::exp(-b * (a - 1.0)));
}

double linear_max_printed(double a, double b, double m) {
  if (b < a / 2.0) return a;
  if (b > m / 2.0) return m * std::exp(-2.0 * b * (m - a));
  return std::exp(2.0 * a * b) / (2.0 * std::numbers::e * b);
}

double linear_max_exact(double a, double b, double m) {
  // Log-concave; the stationary point x = 1/(2b) - a is the max when it lies
  // inside [0, m - a].
  if (2.0 * a * b >= 1.0) return a;
  if (2.0 * m * b <= 1.0) return m * std::exp(-2.0 * b * (m - a));
  return std::exp(2.0 * a * b - 1.0) / (2.0 * b);
}

double grid_maximum(const std::function<double(double)>& f, double lo,
                    double hi, int points) {
  if (!(hi > lo)) return f(lo);
  points = std::max(points, 3);
  const double step = (hi - lo) / (points - 1);
  int best = 0;
  double best_value = f(lo);
  for (int i = 1; i < points; ++i) {
    const double value = f(i == points - 1 ? hi : lo + i * step);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  // Golden-section search on the two cells around the best grid point.
  double left = lo + std::max(best - 1, 0) * step;
  double right = std::min(hi, lo + (best + 1) * step);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = right - ratio * (right - left);
  double x2 = left + ratio * (right - left);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int iter = 0; iter < 200 && right - left > 1e-15 * (1.0 + hi - lo);
       ++iter) {
    if (f1 < f2) {
      left = x1;
      x1 = x2;
      f1 = f2;
      x2 = left + ratio * (right - left);
      f2 = f(x2);
    } else {
      right = x2;
      x2 = x1;
      f2 = f1;
      x1 = right - ratio * (right - left);
      f1 = f(x1);
    }
  }
  return std::max({best_value, f1, f2});
}

namespace {

double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

void tally(MaxLemmaReport& report, MaxLemmaCase c, double tolerance) {
  c.printed_error = relative_error(c.printed, c.grid);
  c.exact_error = relative_error(c.exact, c.grid);
  report.max_printed_error = std::max(report.max_printed_error, c.printed_error);
  report.max_exact_error = std::max(report.max_exact_error, c.exact_error);
  if (!(c.printed_error <= tolerance)) ++report.printed_mismatches;
  if (!(c.exact_error <= tolerance)) ++report.exact_mismatches;
  report.cases.push_back(c);
}

}  // namespace

MaxLemmaReport reciprocal_max_check(std::span<const double> a_values,
                                    std::span<const double> b_values,
                                    double tolerance) {
  MaxLemmaReport report;
  for (double a : a_values) {
    if (!(a >= 1.0)) throw std::invalid_argument("reciprocal lemma: a >= 1");
    for (double b : b_values) {
      if (!(b > 0.0)) throw std::invalid_argument("reciprocal lemma: b > 0");
      MaxLemmaCase c;
      c.a = a;
      c.b = b;
      c.grid = grid_maximum(
          [a, b](double x) { return std::exp(-b * x) / ((a - x) * (a - x)); },
          0.0, a - 1.0);
      c.printed = reciprocal_max_printed(a, b);
      c.exact = reciprocal_max_exact(a, b);
      tally(report, c, tolerance);
    }
  }
  return report;
}

MaxLemmaReport linear_max_check(std::span<const double> a_values,
                                std::span<const double> b_values, double m,
                                double tolerance) {
  MaxLemmaReport report;
  for (double a : a_values) {
    if (!(a >= 0.0 && a <= m)) {
      throw std::invalid_argument("linear lemma: 0 <= a <= m");
    }
    for (double b : b_values) {
      if (!(b > 0.0)) throw std::invalid_argument("linear lemma: b > 0");
      MaxLemmaCase c;
      c.a = a;
      c.b = b;
      c.m = m;
      c.grid = grid_maximum(
          [a, b](double x) { return std::exp(-2.0 * b * x) * (a + x); }, 0.0,
          m - a);
      c.printed = linear_max_printed(a, b, m);
      c.exact = linear_max_exact(a, b, m);
      tally(report, c, tolerance);
    }
  }
  return report;
}

VisitStats estimate_visit_stats(const Mdp& mdp, std::int64_t samples,
                                Rng& rng) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  const Eigen::Index n = mdp.n_states();
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
  Eigen::Index kept = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (!mdp.is_absorbing(static_cast<StateIndex>(s))) slot[s] = kept++;
  }
  const TrajectorySampler sampler(mdp);
  Eigen::MatrixXd both = Eigen::MatrixXd::Zero(kept, kept);
  std::vector<char> seen(static_cast<std::size_t>(kept));
  std::vector<Eigen::Index> visited;
  for (std::int64_t i = 0; i < samples; ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    visited.clear();
    for (const Step& step : sampler(rng).steps) {
      const Eigen::Index k = slot[step.state];
      if (k >= 0 && !seen[k]) {
        seen[k] = 1;
        visited.push_back(k);
      }
    }
    for (Eigen::Index a : visited) {
      for (Eigen::Index b : visited) both(a, b) += 1.0;
    }
  }
  VisitStats stats;
  stats.p_pair = both / static_cast<double>(samples);
  stats.p = stats.p_pair.diagonal();
  stats.p_excl = stats.p.replicate(1, kept) - stats.p_pair;
  return stats;
}

}  // namespace dpeval
