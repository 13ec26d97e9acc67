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

#ifndef DPEVAL_SENSITIVITY_HPP_
#define DPEVAL_SENSITIVITY_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "dpeval/estimators.hpp"
#include "dpeval/returns.hpp"

namespace dpeval {

class InvalidRegularizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Which (alpha, beta) pair calibrates the Gaussian noise.
//   kMainText:     alpha = 5 sqrt(2 ln(2/delta)) / eps,
//                  beta  = eps / (4 (d + ln(2/delta))).
//   kConservative: alpha = 15 sqrt(2 ln(4/delta)) / eps,
//                  beta  = 2 ln2 eps / (5 (sqrt(d) + sqrt(2 ln(4/delta)))^2),
//                  valid for eps <= 5 and beta <= ln 2.
enum class CalibrationConstants { kMainText, kConservative };

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  int d = 0;
  double alpha = 0.0;
  double beta = 0.0;
  CalibrationConstants constants = CalibrationConstants::kMainText;
};

// Throws std::invalid_argument outside eps > 0, 0 < delta < 1, d >= 1, or
// outside the validity range of the conservative set.
PrivacyBudget privacy_constants(
    double epsilon, double delta, int d,
    CalibrationConstants constants = CalibrationConstants::kMainText);

// Public upper bound on any first-visit return. Defaults to the ceiling
// r_max / (1 - gamma); a smaller publicly known cap may replace it. It must
// never be estimated from the private data.
class ReturnBound {
 public:
  ReturnBound(double r_max, double gamma,
              std::optional<double> f_max = std::nullopt);

  double value() const { return value_; }
  double ceiling() const { return ceiling_; }

 private:
  double value_ = 0.0;
  double ceiling_ = 0.0;
};

struct SmoothBound {
  double psi = 0.0;
  std::int64_t argmax_k = 0;
  std::int64_t k_range = 0;  // k searched over 0 .. k_range
};

struct SensitivityReport {
  double psi = 0.0;
  std::int64_t argmax_k = 0;
  std::int64_t k_range = 0;
  double constant_prefactor = 0.0;  // sigma = constant_prefactor * sqrt(psi)
  double sigma = 0.0;
  double f_max = 0.0;
};

// sum_s w_s / max(counts_s - k, 1)^2.
double phi_w(const Signature& signature, const EvalWeights& w,
             std::int64_t k);

// max over k in 0 .. K_X of exp(-k beta) phi_w(k); ties go to the smaller k.
SmoothBound smooth_bound_w(const Signature& signature, const EvalWeights& w,
                           const PrivacyBudget& budget);

// c = |phi| |rho|_inf / sqrt(2 lambda).
double ridge_sensitivity_constant(const EvalWeights& rho, double lambda,
                                  double op_norm);

// (c sqrt(sum_s rho_s min(counts_s + k, m)) + |rho|_2)^2.
double phi_lambda(const Signature& signature, const EvalWeights& rho,
                  std::int64_t k, double lambda, double op_norm);

// max over k in 0 .. m of exp(-k beta) phi_lambda(k).
SmoothBound smooth_bound_lambda(const Signature& signature,
                                const EvalWeights& rho, double lambda,
                                double op_norm, const PrivacyBudget& budget);

// alpha f_max |(sqrt(w) phi)^+|.
double lsw_prefactor(const PrivacyBudget& budget, const ReturnBound& bound,
                     double pinv_norm);
double sigma_lsw(double psi, const PrivacyBudget& budget,
                 const ReturnBound& bound, double pinv_norm);

// 2 alpha f_max |phi| / (lambda - |phi|^2 |rho|_inf). Throws
// InvalidRegularizationError unless lambda > |phi|^2 |rho|_inf.
double lsl_prefactor(const PrivacyBudget& budget, const ReturnBound& bound,
                     double op_norm, double rho_inf, double lambda);
double sigma_lsl(double psi, const PrivacyBudget& budget,
                 const ReturnBound& bound, double op_norm, double rho_inf,
                 double lambda);

}  // namespace dpeval

#endif  // DPEVAL_SENSITIVITY_HPP_
