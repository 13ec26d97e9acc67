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

#ifndef DPEVAL_EXPERIMENTS_HPP_
#define DPEVAL_EXPERIMENTS_HPP_

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpeval/mdp.hpp"
#include "dpeval/sensitivity.hpp"

namespace dpeval {

// Canonical order; output rows follow it.
enum class Algorithm { kLsw, kDpLsw, kLsl, kDpLsl };

inline constexpr Algorithm kAllAlgorithms[] = {
    Algorithm::kLsw, Algorithm::kDpLsw, Algorithm::kLsl, Algorithm::kDpLsl};

const char* algorithm_name(Algorithm algorithm);  // "lsw", "dp-lsw", ...
std::optional<Algorithm> parse_algorithm(const std::string& name);
bool is_private(Algorithm algorithm);

// Stream ids fed to derive_seed. Zero is the shared data stream: every
// algorithm sees the same trajectories for a given (m, run).
inline constexpr std::uint64_t kDataStream = 0;
std::uint64_t algorithm_stream(Algorithm algorithm);  // 1 .. 4

// child = f(f(f(f(master) ^ stream) ^ m) ^ run) with f = mix64. Changing one
// input never shifts the seeds of other (stream, m, run) cells.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t m, std::uint64_t run);

enum class LambdaRule { kConstant, kSqrt, kLinear };
enum class WeightRule { kOnes, kTrueVisit };

struct ExperimentConfig {
  int n_states = 40;
  double stay_prob = 0.5;
  double gamma = 0.99;
  double r_max = 1.0;
  // Public cap on returns. nullopt means r_max / (1 - gamma). The chain pays
  // a single unit reward, so 1 is a valid public cap.
  std::optional<double> f_max = 1.0;
  double epsilon = 0.1;
  double delta = 0.1;
  std::vector<Algorithm> algorithms = {std::begin(kAllAlgorithms),
                                       std::end(kAllAlgorithms)};
  std::vector<std::int64_t> m_values = {100, 1000, 10000, 100000};
  LambdaRule lambda_rule = LambdaRule::kSqrt;
  double lambda_c = 1.0;
  WeightRule w_rule = WeightRule::kOnes;
  std::string rho_rule = "ones";
  int aggregation = 1;
  int runs = 20;
  std::uint64_t master_seed = 1;
  std::string output_dir = ".";
  std::optional<StateIndex> start;  // nullopt: uniform over transient states
  bool record_timing = false;
  bool write_gnuplot = false;
  CalibrationConstants constants = CalibrationConstants::kMainText;

  double lambda_for(std::int64_t m) const;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// `key = value` lines, `#` comments, lists comma-separated. Keys mirror the
// field names above. Unknown keys and malformed values throw
// std::invalid_argument with the line number.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

// Indicator features: row s has a single one in column s / group. The last
// column covers a short group when group does not divide n_transient.
Eigen::MatrixXd aggregate_features(int n_transient, int group);

// sqrt(mean_s (phi_s^T theta - V(s))^2) over the rows of phi.
template <typename PhiDerived, typename ThetaDerived, typename ValueDerived>
double rmse(const Eigen::MatrixBase<ThetaDerived>& theta,
            const Eigen::MatrixBase<PhiDerived>& phi,
            const Eigen::MatrixBase<ValueDerived>& exact) {
  if (phi.rows() != exact.size() || phi.cols() != theta.size()) {
    throw std::invalid_argument("rmse: dimension mismatch");
  }
  return std::sqrt((phi * theta - exact).squaredNorm() /
                   static_cast<double>(exact.size()));
}

enum class RowKind { kRun, kMean, kStdError };

struct ResultRow {
  std::string algorithm;
  std::int64_t m = 0;
  std::optional<double> lambda;
  RowKind kind = RowKind::kRun;
  int run = 0;
  std::optional<std::uint64_t> seed;
  std::optional<double> rmse;
  std::optional<double> excess_risk;  // signed; single draws may be negative
  std::optional<double> sigma;
  double wall_ms = 0.0;
  std::string error;
};

inline constexpr const char* kCsvHeader =
    "algorithm,m,lambda,run,seed,rmse,excess_risk,sigma,wall_ms,error";

// Runs every (algorithm, m, run) cell, in parallel up to DPEVAL_THREADS
// workers, and returns per-run rows followed by mean and standard-error rows
// for each (algorithm, m). Cell failures are recorded in the error column.
// Output is independent of the thread count.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

// Worker count: DPEVAL_THREADS if set and positive, else the hardware
// concurrency.
int worker_count();

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
// Throws std::runtime_error with the path on I/O failure.
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_csv(std::istream& in);

// gnuplot script plotting mean RMSE against m for each algorithm.
void write_gnuplot_script(std::ostream& out, const std::string& csv_name,
                          const ExperimentConfig& config);

}  // namespace dpeval

#endif  // DPEVAL_EXPERIMENTS_HPP_
