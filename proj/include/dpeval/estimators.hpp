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

#ifndef DPEVAL_ESTIMATORS_HPP_
#define DPEVAL_ESTIMATORS_HPP_

// Least-squares value-function solvers and their objectives. Everything is a
// template over Eigen expressions so callers can pass blocks, maps or
// products without materialising copies. Diagonal weightings are applied
// row-wise; no N x N matrix is ever formed.

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "dpeval/returns.hpp"

namespace dpeval {

inline constexpr double kRankTolerance = 1e-10;

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WeightKind { kFixed, kRegression };

// Per-state weights. kFixed are the data-independent w used by the weighted
// objective; kRegression are the rho in [0, 1] that enter the data-dependent
// weighting rho_s |X_s| / m.
struct EvalWeights {
  WeightKind kind = WeightKind::kFixed;
  Eigen::VectorXd values;

  static EvalWeights fixed(Eigen::VectorXd w) {
    EvalWeights out{WeightKind::kFixed, std::move(w)};
    out.validate();
    return out;
  }
  static EvalWeights regression(Eigen::VectorXd rho) {
    EvalWeights out{WeightKind::kRegression, std::move(rho)};
    out.validate();
    return out;
  }
  static EvalWeights ones(WeightKind kind, Eigen::Index n) {
    return kind == WeightKind::kFixed
               ? fixed(Eigen::VectorXd::Ones(n))
               : regression(Eigen::VectorXd::Ones(n));
  }

  Eigen::Index size() const { return values.size(); }
  double sum() const { return values.sum(); }
  double max_norm() const {
    return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff();
  }
  double l2_norm() const { return values.norm(); }

  // Throws std::invalid_argument on negative or non-finite entries, on an
  // all-zero fixed weighting, or on regression weights above one.
  void validate() const {
    if (!values.allFinite()) {
      throw std::invalid_argument("weights must be finite");
    }
    if (values.size() > 0 && values.minCoeff() < 0.0) {
      throw std::invalid_argument("weights must be nonnegative");
    }
    if (kind == WeightKind::kFixed && !(values.sum() > 0.0)) {
      throw std::invalid_argument("fixed weights must have a positive sum");
    }
    if (kind == WeightKind::kRegression && values.size() > 0 &&
        values.maxCoeff() > 1.0) {
      throw std::invalid_argument("regression weights must lie in [0, 1]");
    }
  }
};

template <typename Scalar>
struct FeatureNorms {
  Scalar op_norm = 0;    // largest singular value of phi
  Scalar pinv_norm = 0;  // norm of the pseudo-inverse of sqrt(w) phi
  Scalar frob_norm = 0;  // Frobenius norm of sqrt(w) phi
};

namespace internal {

template <typename Derived>
void check_rows(const Eigen::MatrixBase<Derived>& phi, Eigen::Index n,
                const char* what) {
  if (phi.rows() != n) {
    throw std::invalid_argument(std::string(what) + ": feature matrix has " +
                                std::to_string(phi.rows()) + " rows, expected " +
                                std::to_string(n));
  }
}

template <typename Derived>
using PlainMatrix =
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Derived>
using PlainVector = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;

// Gamma_X diagonal: rho_s |X_s| / m.
inline Eigen::VectorXd visit_weighting(const Signature& signature,
                                       const EvalWeights& rho) {
  return rho.values.cwiseProduct(signature.counts.cast<double>()) /
         static_cast<double>(signature.m);
}

}  // namespace internal

// Spectral norm of phi.
template <typename Derived>
typename Derived::Scalar op_norm(const Eigen::MatrixBase<Derived>& phi) {
  if (phi.size() == 0) return 0;
  Eigen::JacobiSVD<internal::PlainMatrix<Derived>> svd(phi);
  return svd.singularValues()(0);
}

template <typename Derived>
FeatureNorms<typename Derived::Scalar> feature_norms(
    const Eigen::MatrixBase<Derived>& phi, const EvalWeights& w) {
  using Scalar = typename Derived::Scalar;
  internal::check_rows(phi, w.size(), "feature_norms");
  FeatureNorms<Scalar> norms;
  if (phi.size() == 0) return norms;
  const internal::PlainMatrix<Derived> scaled =
      w.values.cwiseSqrt().cast<Scalar>().asDiagonal() * phi;
  norms.frob_norm = scaled.norm();
  Eigen::JacobiSVD<internal::PlainMatrix<Derived>> plain(phi);
  norms.op_norm = plain.singularValues()(0);
  Eigen::JacobiSVD<internal::PlainMatrix<Derived>> svd(scaled);
  const auto& sv = svd.singularValues();
  const Scalar cutoff = Scalar(kRankTolerance) * sv(0);
  Scalar smallest = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) smallest = sv(i);
  }
  norms.pinv_norm = smallest > 0 ? Scalar(1) / smallest : Scalar(0);
  return norms;
}

// Linear map F_X -> theta for the fixed-weight problem,
//   theta = (sqrt(w) phi)^+ sqrt(w) F_X,
// precomputed once so many right-hand sides share one SVD.
template <typename Scalar>
class LswSolver {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  template <typename Derived>
  LswSolver(const Eigen::MatrixBase<Derived>& phi, const EvalWeights& w) {
    internal::check_rows(phi, w.size(), "solve_lsw");
    if (w.kind != WeightKind::kFixed) {
      throw std::invalid_argument("solve_lsw needs fixed weights");
    }
    const Vector root_w = w.values.cwiseSqrt().cast<Scalar>();
    const Matrix scaled = root_w.asDiagonal() * phi;
    Eigen::JacobiSVD<Matrix> svd(scaled,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    if (sv.size() < phi.cols() || sv.size() == 0 ||
        !(sv(sv.size() - 1) >= Scalar(kRankTolerance) * sv(0)) ||
        sv(0) == Scalar(0)) {
      throw RankDeficientError(
          "weighted feature matrix is rank deficient; the weighted normal "
          "equations have no unique solution");
    }
    pinv_norm_ = Scalar(1) / sv(sv.size() - 1);
    map_ = svd.matrixV() * sv.cwiseInverse().asDiagonal() *
           svd.matrixU().transpose() * root_w.asDiagonal();
  }

  template <typename Derived>
  Vector operator()(const Eigen::MatrixBase<Derived>& f_x) const {
    return map_ * f_x;
  }

  const Matrix& map() const { return map_; }
  Scalar pinv_norm() const { return pinv_norm_; }

 private:
  Matrix map_;
  Scalar pinv_norm_ = 0;
};

// Minimiser of sum_s w_s (F_X,s - phi_s^T theta)^2. Throws
// RankDeficientError if sqrt(w) phi lacks full column rank.
template <typename Derived>
internal::PlainVector<Derived> solve_lsw(const DatasetSummary& summary,
                                         const Eigen::MatrixBase<Derived>& phi,
                                         const EvalWeights& w) {
  using Scalar = typename Derived::Scalar;
  LswSolver<Scalar> solver(phi, w);
  return solver(summary.f_x.cast<Scalar>());
}

// Minimiser of the ridge objective J_X(theta) + lambda/(2m) |theta|^2, via
// the SVD of Gamma_X^{1/2} phi.
template <typename Derived>
internal::PlainVector<Derived> solve_lsl(const DatasetSummary& summary,
                                         const Eigen::MatrixBase<Derived>& phi,
                                         const EvalWeights& rho,
                                         double lambda) {
  using Scalar = typename Derived::Scalar;
  using Matrix = internal::PlainMatrix<Derived>;
  using Vector = internal::PlainVector<Derived>;
  internal::check_rows(phi, summary.n_states(), "solve_lsl");
  if (rho.size() != summary.n_states()) {
    throw std::invalid_argument("solve_lsl: weight length mismatch");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("solve_lsl: lambda must be positive");
  }
  const Vector root_g =
      internal::visit_weighting(summary.signature, rho).cwiseSqrt().cast<Scalar>();
  const Matrix scaled = root_g.asDiagonal() * phi;
  Eigen::JacobiSVD<Matrix> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const Scalar shift = Scalar(lambda / (2.0 * static_cast<double>(summary.m())));
  const Vector filter =
      sv.array() / (sv.array().square() + shift);
  const Vector rhs = root_g.cwiseProduct(summary.f_x.cast<Scalar>());
  return svd.matrixV() *
         filter.cwiseProduct(svd.matrixU().transpose() * rhs);
}

// J^w_X(theta) = sum_s w_s (F_X,s - phi_s^T theta)^2.
template <typename Derived, typename ThetaDerived>
typename Derived::Scalar empirical_risk_w(
    const Eigen::MatrixBase<ThetaDerived>& theta, const DatasetSummary& summary,
    const Eigen::MatrixBase<Derived>& phi, const EvalWeights& w) {
  using Scalar = typename Derived::Scalar;
  const internal::PlainVector<Derived> residual =
      summary.f_x.cast<Scalar>() - phi * theta;
  return (w.values.cast<Scalar>().array() * residual.array().square()).sum();
}

// J^lambda_X(theta) = (1/m) sum_i sum_{s in x_i} rho_s (F_{x_i,s} -
// phi_s^T theta)^2 + lambda/(2m) |theta|^2, summed over individual
// trajectories. Throws std::invalid_argument if the summary was built
// without per-trajectory returns.
template <typename Derived, typename ThetaDerived>
typename Derived::Scalar empirical_risk_lambda(
    const Eigen::MatrixBase<ThetaDerived>& theta, const DatasetSummary& summary,
    const Eigen::MatrixBase<Derived>& phi, const EvalWeights& rho,
    double lambda) {
  using Scalar = typename Derived::Scalar;
  if (summary.per_trajectory.size() != static_cast<std::size_t>(summary.m())) {
    throw std::invalid_argument(
        "empirical_risk_lambda: per-trajectory returns missing");
  }
  const internal::PlainVector<Derived> fitted = phi * theta;
  Scalar total = 0;
  for (const FirstVisitReturns& visits : summary.per_trajectory) {
    for (const StateReturn& visit : visits) {
      const Scalar r = Scalar(visit.value) - fitted(visit.state);
      total += Scalar(rho.values(visit.state)) * r * r;
    }
  }
  const Scalar m = Scalar(summary.m());
  return total / m + Scalar(lambda) / (Scalar(2) * m) * theta.squaredNorm();
}

template <typename Derived, typename ThetaDerived>
internal::PlainVector<Derived> gradient_w(
    const Eigen::MatrixBase<ThetaDerived>& theta, const DatasetSummary& summary,
    const Eigen::MatrixBase<Derived>& phi, const EvalWeights& w) {
  using Scalar = typename Derived::Scalar;
  const internal::PlainVector<Derived> residual =
      phi * theta - summary.f_x.cast<Scalar>();
  return Scalar(2) * phi.transpose() *
         w.values.cast<Scalar>().cwiseProduct(residual);
}

template <typename Derived, typename ThetaDerived>
internal::PlainVector<Derived> gradient_lambda(
    const Eigen::MatrixBase<ThetaDerived>& theta, const DatasetSummary& summary,
    const Eigen::MatrixBase<Derived>& phi, const EvalWeights& rho,
    double lambda) {
  using Scalar = typename Derived::Scalar;
  const internal::PlainVector<Derived> residual =
      phi * theta - summary.f_x.cast<Scalar>();
  const internal::PlainVector<Derived> g =
      internal::visit_weighting(summary.signature, rho).cast<Scalar>();
  return Scalar(2) * phi.transpose() * g.cwiseProduct(residual) +
         Scalar(lambda / static_cast<double>(summary.m())) * theta;
}

// J^w_X(theta_hat) - J^w_X(theta) written as a product of differences so the
// small excess is not lost to cancellation between two large risks.
template <typename Derived, typename A, typename B>
typename Derived::Scalar excess_risk_w(const Eigen::MatrixBase<A>& theta_hat,
                                       const Eigen::MatrixBase<B>& theta,
                                       const DatasetSummary& summary,
                                       const Eigen::MatrixBase<Derived>& phi,
                                       const EvalWeights& w) {
  using Scalar = typename Derived::Scalar;
  const internal::PlainVector<Derived> fit_hat = phi * theta_hat;
  const internal::PlainVector<Derived> fit = phi * theta;
  const auto f = summary.f_x.cast<Scalar>().array();
  return (w.values.cast<Scalar>().array() * (fit.array() - fit_hat.array()) *
          (Scalar(2) * f - fit.array() - fit_hat.array()))
      .sum();
}

// Same for the ridge objective. The per-trajectory sum is linear in the
// returns, so it collapses onto |X_s| F_X,s without touching trajectories.
template <typename Derived, typename A, typename B>
typename Derived::Scalar excess_risk_lambda(
    const Eigen::MatrixBase<A>& theta_hat, const Eigen::MatrixBase<B>& theta,
    const DatasetSummary& summary, const Eigen::MatrixBase<Derived>& phi,
    const EvalWeights& rho, double lambda) {
  using Scalar = typename Derived::Scalar;
  const internal::PlainVector<Derived> fit_hat = phi * theta_hat;
  const internal::PlainVector<Derived> fit = phi * theta;
  const internal::PlainVector<Derived> g =
      internal::visit_weighting(summary.signature, rho).cast<Scalar>();
  const auto f = summary.f_x.cast<Scalar>().array();
  const Scalar data = (g.array() * (fit.array() - fit_hat.array()) *
                       (Scalar(2) * f - fit.array() - fit_hat.array()))
                          .sum();
  const Scalar ridge = Scalar(lambda / (2.0 * static_cast<double>(summary.m()))) *
                       ((theta_hat - theta).dot(theta_hat + theta));
  return data + ridge;
}

}  // namespace dpeval

#endif  // DPEVAL_ESTIMATORS_HPP_
