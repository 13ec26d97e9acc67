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

// Acceptance checks. Prints one PASS/FAIL line per criterion, plus INFO lines
// with the measured quantities, and exits nonzero if any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "dpeval/dp_mech.hpp"
#include "dpeval/experiments.hpp"
#include "dpeval/mdp.hpp"
#include "dpeval/oracle.hpp"
#include "dpeval/returns.hpp"

namespace fs = std::filesystem;
using namespace dpeval;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...) {
  char buffer[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buffer, sizeof(buffer), fmt, args);
  va_end(args);
  return buffer;
}

void verdict(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << detail
            << std::endl;
  if (!ok) ++g_failures;
}

void info(int id, const std::string& detail) {
  std::cout << "INFO [" << id << "] " << detail << std::endl;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1 and 2: exhaustive neighbour pool on a 3-state chain.
void pool_criteria() {
  const auto start = Clock::now();
  const double gamma = 0.5;
  const double rewards[] = {0.0, 1.0};
  const auto maps = distinct_first_visit_maps(
      enumerate_trajectories(3, 3, rewards), gamma);
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(3, 3);
  const ReturnBound bound(1.0, gamma);
  const PrivacyBudget budget = privacy_constants(0.1, 0.1, 3);
  const SolverSpec specs[] = {
      {Mechanism::kLsw, EvalWeights::ones(WeightKind::kFixed, 3), 0.0},
      {Mechanism::kLsl, EvalWeights::ones(WeightKind::kRegression, 3), 2.0}};
  bool calibrated = true;
  bool bounded = true;
  std::string calib_detail;
  std::string bound_detail;
  for (const SolverSpec& spec : specs) {
    const PoolSweepReport r =
        sweep_neighbor_pool(maps, 3, phi, spec, bound, budget);
    calibrated = calibrated && r.condition_a_failures == 0 &&
                 r.condition_b_failures == 0 && r.pairs > 0;
    bounded = bounded && r.bound_failures == 0 && r.pairs > 0;
    calib_detail += format(
        " %s: %lld pairs, %lld/%lld failures, max alpha*gap/sigma %.4g, max "
        "log-variance gap %.6g vs beta %.6g;",
        mechanism_name(spec.mechanism), static_cast<long long>(r.pairs),
        static_cast<long long>(r.condition_a_failures),
        static_cast<long long>(r.condition_b_failures), r.max_alpha_ratio,
        r.max_log_ratio, r.beta);
    bound_detail += format(" %s: %lld failures, max gap/bound %.4g;",
                           mechanism_name(spec.mechanism),
                           static_cast<long long>(r.bound_failures),
                           r.max_bound_ratio);
  }
  const double elapsed = seconds_since(start);
  info(1, format("pool of %zu distinct first-visit maps, m = 3",
                 maps.size()));
  verdict(1, calibrated && elapsed < 60.0,
          "noise calibration over the enumerated pool (" +
              format("%.1f s;", elapsed) + calib_detail + ")");
  verdict(2, bounded,
          "neighbour sensitivity within its bound, relative slack 1e-9 (" +
              bound_detail + ")");
}

// 3: smoothness of the two noise bounds on random adjacent signatures.
void smoothness_criterion() {
  const int n = 40;
  std::mt19937_64 gen(2024);
  const PrivacyBudget budget = privacy_constants(0.1, 0.1, n);
  std::vector<std::pair<Signature, Signature>> pairs;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t m =
        std::uniform_int_distribution<std::int64_t>(1, 1000)(gen);
    Signature v{CountVector(n), m};
    for (int s = 0; s < n; ++s) {
      v.counts[s] = std::uniform_int_distribution<std::int64_t>(0, m)(gen);
    }
    Signature w = v;
    for (int s = 0; s < n; ++s) {
      const int step = std::uniform_int_distribution<int>(-1, 1)(gen);
      w.counts[s] = std::clamp<std::int64_t>(v.counts[s] + step, 0, m);
    }
    pairs.emplace_back(std::move(v), std::move(w));
  }
  const SolverSpec specs[] = {
      {Mechanism::kLsw, EvalWeights::ones(WeightKind::kFixed, n), 0.0},
      {Mechanism::kLsl, EvalWeights::ones(WeightKind::kRegression, n), 100.0}};
  bool ok = true;
  std::string detail;
  for (const SolverSpec& spec : specs) {
    const SmoothnessReport r = check_smoothness_pairs(spec, pairs, 1.0, budget);
    ok = ok && r.violations == 0 && r.upper_failures == 0;
    detail += format(" %s: %lld violations, %lld below local, max |log ratio| "
                     "%.17g vs beta %.17g;",
                     mechanism_name(spec.mechanism),
                     static_cast<long long>(r.violations),
                     static_cast<long long>(r.upper_failures), r.max_log_ratio,
                     r.beta);
  }
  verdict(3,
          ok, "smooth bounds on 1000 adjacent signature pairs, N = 40, "
              "rounding allowance 1e-12 nats (" + detail + ")");
}

// 4: closed-form expected excess risk under the mechanism's own noise.
void noise_criterion() {
  const Mdp chain = build_chain(40, 0.5, 0.99);
  Rng data_rng(7);
  TrajectoryDataset data;
  for (int i = 0; i < 1000; ++i) {
    data.trajectories.push_back(sample_trajectory(chain, data_rng));
  }
  const DatasetSummary summary = aggregate(data, chain.gamma, 39);
  const Eigen::MatrixXd phi = aggregate_features(39, 1);
  const ReturnBound bound(1.0, chain.gamma, 1.0);
  const PrivacyBudget budget = privacy_constants(0.1, 0.1, 39);
  const SolverSpec specs[] = {
      {Mechanism::kLsw, EvalWeights::ones(WeightKind::kFixed, 39), 0.0},
      {Mechanism::kLsl, EvalWeights::ones(WeightKind::kRegression, 39),
       std::sqrt(1000.0)}};
  bool ok = true;
  std::string detail;
  Rng rng(11);
  for (const SolverSpec& spec : specs) {
    const auto start = Clock::now();
    const NoiseExpectation e = noise_expectation_identity(
        spec, summary, phi, bound, budget, 100000, rng);
    const double elapsed = seconds_since(start);
    const double z = std::abs(e.empirical_mean - e.analytic) / e.standard_error;
    ok = ok && z <= 5.0 && elapsed < 30.0;
    detail += format(" %s: empirical %.6g analytic %.6g (%.2f SE, %.1f s);",
                     mechanism_name(spec.mechanism), e.empirical_mean,
                     e.analytic, z, elapsed);
  }
  verdict(4, ok, "noise expectation over 1e5 draws, chain(40), m = 1000 (" +
                     detail + ")");
}

double mean_of(const std::vector<ResultRow>& rows, const std::string& algorithm,
               std::int64_t m, bool excess) {
  for (const ResultRow& r : rows) {
    if (r.algorithm == algorithm && r.m == m && r.kind == RowKind::kMean) {
      const auto& value = excess ? r.excess_risk : r.rmse;
      return value ? *value : std::nan("");
    }
  }
  return std::nan("");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

struct Sweep {
  std::vector<ResultRow> rows;
  double seconds = 0;
};

Sweep sweep(int aggregation) {
  ExperimentConfig c;  // chain(40), gamma 0.99, f_max 1, eps = delta = 0.1
  c.m_values = {1000, 10000, 100000};
  c.lambda_rule = LambdaRule::kSqrt;
  c.lambda_c = 1.0;
  c.runs = 20;
  c.aggregation = aggregation;
  const auto start = Clock::now();
  Sweep s{run_experiment(c), 0};
  s.seconds = seconds_since(start);
  return s;
}

std::string excess_line(const Sweep& s, double* slope) {
  const std::vector<double> ms = {1e3, 1e4, 1e5};
  std::vector<double> ex;
  for (double m : ms) ex.push_back(mean_of(s.rows, "dp-lsw", m, true));
  *slope = loglog_slope(ms, ex);
  return format("mean excess %.4g / %.4g / %.4g, slope %.3f", ex[0], ex[1],
                ex[2], *slope);
}

double gap_ratio(const Sweep& s, const char* priv, const char* plain,
                 std::string* detail) {
  const double small = mean_of(s.rows, priv, 1000, false) -
                       mean_of(s.rows, plain, 1000, false);
  const double large = mean_of(s.rows, priv, 100000, false) -
                       mean_of(s.rows, plain, 100000, false);
  *detail += format(" %s gap %.4g -> %.4g, ratio %.3f;", priv, small, large,
                    small / large);
  return small / large;
}

// 5 and 6 share the experiment sweeps.
void experiment_criteria() {
  const Sweep plain = sweep(1);
  const Sweep grouped = sweep(2);
  info(5, format("sweeps took %.1f s and %.1f s", plain.seconds,
                 grouped.seconds));

  double slope = 0, grouped_slope = 0;
  const std::string line = excess_line(plain, &slope);
  info(5, "aggregation 2: " + excess_line(grouped, &grouped_slope));
  verdict(5, slope >= -2.4 && slope <= -1.6,
          "dp-lsw excess-risk slope in [-2.4, -1.6], chain(40), f_max = 1, "
          "20 runs: " + line);

  std::string ungrouped_detail;
  gap_ratio(plain, "dp-lsw", "lsw", &ungrouped_detail);
  gap_ratio(plain, "dp-lsl", "lsl", &ungrouped_detail);
  info(6, "aggregation 1:" + ungrouped_detail);
  std::string detail;
  const double w_ratio = gap_ratio(grouped, "dp-lsw", "lsw", &detail);
  const double l_ratio = gap_ratio(grouped, "dp-lsl", "lsl", &detail);
  verdict(6, w_ratio >= 10.0 && l_ratio >= 10.0,
          "private-minus-plain RMSE gap shrinks 10x from m = 1e3 to 1e5, "
          "aggregation 2, lambda = sqrt(m), 20 runs:" + detail);
}

// 7: binomial identities and the two maximisation lemmas.
void lemma_criterion() {
  double worst = 0.0;
  int square_failures = 0;
  for (int m = 1; m <= 30; ++m) {
    for (int k = 1; k <= 9; ++k) {
      const BinomialCheck b = binomial_lemma_check(m, 0.1 * k);
      worst = std::max(worst, b.inverse_residual);
      if (!b.square_holds) ++square_failures;
    }
  }
  const double as[] = {1, 2, 3, 5, 8, 13, 20, 30, 50, 100};
  const double bs[] = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1, 2.5, 5, 10};
  const double la[] = {0, 1, 2, 5, 10, 15, 20, 30, 40, 50};
  const MaxLemmaReport rec = reciprocal_max_check(as, bs, 1e-6);
  const MaxLemmaReport lin = linear_max_check(la, bs, 50.0, 1e-6);
  info(7, format("endpoint/stationary forms: %lld and %lld of 100 disagree, "
                 "max rel. error %.3g and %.3g",
                 static_cast<long long>(rec.exact_mismatches),
                 static_cast<long long>(lin.exact_mismatches),
                 rec.max_exact_error, lin.max_exact_error));
  const bool ok = worst <= 1e-12 && square_failures == 0 &&
                  rec.printed_mismatches == 0 && lin.printed_mismatches == 0;
  verdict(7, ok,
          format("binomial residual %.3g (tolerance 1e-12), %d bound "
                 "failures; closed-form max lemmas as stated: %lld and %lld "
                 "of 100 grid points off by more than 1e-6",
                 worst, square_failures,
                 static_cast<long long>(rec.printed_mismatches),
                 static_cast<long long>(lin.printed_mismatches)));
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// 8: the CLI writes identical bytes across executions and thread counts.
void determinism_criterion() {
  const fs::path root = fs::temp_directory_path() /
                        ("dpeval_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);
  struct Case {
    std::string name;
    std::string threads;
  };
  const Case cases[] = {{"first", ""}, {"second", ""}, {"t1", "1"}, {"t8", "8"}};
  std::vector<std::string> outputs;
  bool launched = true;
  for (const Case& c : cases) {
    const fs::path dir = root / c.name;
    const fs::path config = root / (c.name + ".cfg");
    {
      std::ofstream cfg(config);
      cfg << "m_values = 100, 1000, 10000\nruns = 4\naggregation = 2\n"
          << "output_dir = " << dir.string() << '\n';
    }
    std::string command;
    if (!c.threads.empty()) command = "DPEVAL_THREADS=" + c.threads + " ";
    command += std::string("\"") + DPEVAL_CLI_PATH + "\" run --config \"" +
               config.string() + "\" > /dev/null";
    if (std::system(command.c_str()) != 0) launched = false;
    outputs.push_back(slurp(dir / "results.csv"));
  }
  bool same = launched && !outputs[0].empty();
  for (const std::string& o : outputs) same = same && o == outputs[0];
  fs::remove_all(root);
  verdict(8, same,
          format("results.csv identical across 2 runs and DPEVAL_THREADS 1 vs "
                 "8 (%zu bytes)",
                 outputs[0].size()));
}

// 9: one full private release at N = 40, m = 1e4, sampling excluded.
void timing_criterion() {
  const Mdp chain = build_chain(40, 0.5, 0.99);
  Rng data_rng(3);
  TrajectoryDataset data;
  for (int i = 0; i < 10000; ++i) {
    data.trajectories.push_back(sample_trajectory(chain, data_rng));
  }
  const Eigen::MatrixXd phi = aggregate_features(39, 1);
  const auto w = EvalWeights::ones(WeightKind::kFixed, 39);
  Rng rng(5);
  const auto start = Clock::now();
  const PrivateEstimate e =
      dp_lsw(data, phi, w, chain.gamma, 1.0, 1.0, 0.1, 0.1, rng);
  const double elapsed = seconds_since(start);
  verdict(9, elapsed < 1.0 && e.theta_hat.allFinite(),
          format("dp-lsw from raw trajectories, N = 40, m = 1e4: %.3f s "
                 "(K_X = %lld)",
                 elapsed, static_cast<long long>(e.report.k_range)));
}

}  // namespace

int main() {
  pool_criteria();
  smoothness_criterion();
  noise_criterion();
  experiment_criteria();
  lemma_criterion();
  determinism_criterion();
  timing_criterion();
  std::cout << g_failures << " criterion/criteria failed" << std::endl;
  return g_failures == 0 ? 0 : 1;
}
