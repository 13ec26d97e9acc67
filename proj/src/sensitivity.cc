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

#include "dpeval/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dpeval {
namespace {

void require_same_size(const Signature& signature, const EvalWeights& w,
                       const char* what) {
  if (signature.counts.size() != w.size()) {
    throw std::invalid_argument(std::string(what) +
                                ": signature and weights differ in length");
  }
}

// Exhaustive scan; `phi(k)` is evaluated once per k.
template <typename Phi>
SmoothBound scan(std::int64_t k_range, double beta, Phi&& phi) {
  SmoothBound best;
  best.k_range = k_range;
  best.psi = phi(0);
  for (std::int64_t k = 1; k <= k_range; ++k) {
    const double decay = std::exp(-static_cast<double>(k) * beta);
    if (decay == 0.0) break;  // nothing later can beat a positive value
    const double candidate = decay * phi(k);
    if (candidate > best.psi) {
      best.psi = candidate;
      best.argmax_k = k;
    }
  }
  return best;
}

}  // namespace

PrivacyBudget privacy_constants(double epsilon, double delta, int d,
                                CalibrationConstants constants) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive and finite");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  PrivacyBudget budget{epsilon, delta, d, 0.0, 0.0, constants};
  if (constants == CalibrationConstants::kMainText) {
    const double log_term = std::log(2.0 / delta);
    budget.alpha = 5.0 * std::sqrt(2.0 * log_term) / epsilon;
    budget.beta = epsilon / (4.0 * (d + log_term));
  } else {
    if (epsilon > 5.0) {
      throw std::invalid_argument("conservative constants need epsilon <= 5");
    }
    const double tail = std::sqrt(2.0 * std::log(4.0 / delta));
    budget.alpha = 15.0 * tail / epsilon;
    const double spread = std::sqrt(static_cast<double>(d)) + tail;
    budget.beta = 2.0 * std::log(2.0) * epsilon / (5.0 * spread * spread);
    if (budget.beta > std::log(2.0)) {
      throw std::invalid_argument("conservative constants need beta <= ln 2");
    }
  }
  return budget;
}

ReturnBound::ReturnBound(double r_max, double gamma,
                         std::optional<double> f_max) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (!(r_max >= 0.0) || !std::isfinite(r_max)) {
    throw std::invalid_argument("r_max must be nonnegative");
  }
  ceiling_ = r_max / (1.0 - gamma);
  value_ = ceiling_;
  if (f_max) {
    if (!(*f_max >= 0.0)) {
      throw std::invalid_argument("f_max must be nonnegative");
    }
    if (*f_max > ceiling_) {
      throw std::invalid_argument(
          "f_max exceeds r_max / (1 - gamma); the privacy guarantee would "
          "not hold");
    }
    value_ = *f_max;
  }
}

double phi_w(const Signature& signature, const EvalWeights& w,
             std::int64_t k) {
  require_same_size(signature, w, "phi_w");
  if (k < 0) throw std::invalid_argument("phi_w: k must be nonnegative");
  double total = 0.0;
  for (Eigen::Index s = 0; s < w.size(); ++s) {
    const double denom =
        static_cast<double>(std::max<std::int64_t>(signature.counts[s] - k, 1));
    total += w.values[s] / (denom * denom);
  }
  return total;
}

SmoothBound smooth_bound_w(const Signature& signature, const EvalWeights& w,
                           const PrivacyBudget& budget) {
  require_same_size(signature, w, "smooth_bound_w");
  return scan(signature.max_count(), budget.beta,
              [&](std::int64_t k) { return phi_w(signature, w, k); });
}

double ridge_sensitivity_constant(const EvalWeights& rho, double lambda,
                                  double op_norm) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("lambda must be positive");
  }
  return op_norm * rho.max_norm() / std::sqrt(2.0 * lambda);
}

double phi_lambda(const Signature& signature, const EvalWeights& rho,
                  std::int64_t k, double lambda, double op_norm) {
  require_same_size(signature, rho, "phi_lambda");
  if (k < 0) throw std::invalid_argument("phi_lambda: k must be nonnegative");
  const double c = ridge_sensitivity_constant(rho, lambda, op_norm);
  double mass = 0.0;
  for (Eigen::Index s = 0; s < rho.size(); ++s) {
    mass += rho.values[s] *
            static_cast<double>(std::min(signature.counts[s] + k, signature.m));
  }
  const double root = c * std::sqrt(mass) + rho.l2_norm();
  return root * root;
}

SmoothBound smooth_bound_lambda(const Signature& signature,
                                const EvalWeights& rho, double lambda,
                                double op_norm, const PrivacyBudget& budget) {
  require_same_size(signature, rho, "smooth_bound_lambda");
  return scan(signature.m, budget.beta, [&](std::int64_t k) {
    return phi_lambda(signature, rho, k, lambda, op_norm);
  });
}

double lsw_prefactor(const PrivacyBudget& budget, const ReturnBound& bound,
                     double pinv_norm) {
  return budget.alpha * bound.value() * pinv_norm;
}

double sigma_lsw(double psi, const PrivacyBudget& budget,
                 const ReturnBound& bound, double pinv_norm) {
  if (!(psi >= 0.0)) throw std::invalid_argument("psi must be nonnegative");
  return lsw_prefactor(budget, bound, pinv_norm) * std::sqrt(psi);
}

double lsl_prefactor(const PrivacyBudget& budget, const ReturnBound& bound,
                     double op_norm, double rho_inf, double lambda) {
  const double threshold = op_norm * op_norm * rho_inf;
  if (!(lambda > threshold)) {
    throw InvalidRegularizationError(
        "lambda = " + std::to_string(lambda) +
        " must exceed |phi|^2 |rho|_inf = " + std::to_string(threshold));
  }
  return 2.0 * budget.alpha * bound.value() * op_norm / (lambda - threshold);
}

double sigma_lsl(double psi, const PrivacyBudget& budget,
                 const ReturnBound& bound, double op_norm, double rho_inf,
                 double lambda) {
  if (!(psi >= 0.0)) throw std::invalid_argument("psi must be nonnegative");
  return lsl_prefactor(budget, bound, op_norm, rho_inf, lambda) *
         std::sqrt(psi);
}

}  // namespace dpeval
