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

// dpeval: experiment runner, oracle suite and exact-value printer.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "dpeval/dp_mech.hpp"
#include "dpeval/experiments.hpp"
#include "dpeval/mdp.hpp"
#include "dpeval/oracle.hpp"
#include "dpeval/returns.hpp"

namespace fs = std::filesystem;
using namespace dpeval;

namespace {

struct RunOptions {
  std::string config_path;
  std::string replay_path;
  bool unsafe_diagnostics = false;
  bool conservative = false;
};

int replay(const ExperimentConfig& config, const RunOptions& options) {
  const TrajectoryDataset dataset = read_trajectories_file(options.replay_path);
  if (dataset.empty()) throw std::runtime_error("replay file has no trajectories");
  const int n_transient = config.n_states - 1;
  const Eigen::MatrixXd phi =
      aggregate_features(n_transient, config.aggregation);
  const DatasetSummary summary = aggregate(dataset, config.gamma, n_transient);
  const ReturnBound bound(config.r_max, config.gamma, config.f_max);
  const PrivacyBudget budget =
      privacy_constants(config.epsilon, config.delta,
                        static_cast<int>(phi.cols()), config.constants);
  const auto m = static_cast<std::uint64_t>(summary.m());
  int released = 0;
  for (Algorithm algorithm : config.algorithms) {
    if (!is_private(algorithm)) continue;
    Rng rng(derive_seed(config.master_seed, algorithm_stream(algorithm), m, 0));
    PrivateEstimate estimate;
    if (algorithm == Algorithm::kDpLsw) {
      Eigen::VectorXd w = Eigen::VectorXd::Ones(n_transient);
      if (config.w_rule == WeightRule::kTrueVisit) {
        w = visit_probabilities(
                build_chain(config.n_states, config.stay_prob, config.gamma))
                .p;
      }
      estimate = dp_lsw(summary, phi, EvalWeights::fixed(w), bound, budget, rng);
    } else {
      estimate = dp_lsl(summary, phi,
                        EvalWeights::ones(WeightKind::kRegression, n_transient),
                        config.lambda_for(summary.m()), bound, budget, rng);
    }
    const fs::path path = fs::path(config.output_dir) /
                          (std::string("estimate_") + algorithm_name(algorithm) +
                           ".txt");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_estimate(out, estimate, options.unsafe_diagnostics);
    std::cout << "wrote " << path.string() << '\n';
    ++released;
  }
  if (released == 0) {
    throw std::runtime_error("replay needs dp-lsw or dp-lsl in algorithms");
  }
  return 0;
}

int run(const RunOptions& options) {
  ExperimentConfig config = parse_config_file(options.config_path);
  if (options.conservative) {
    config.constants = CalibrationConstants::kConservative;
  }
  fs::create_directories(config.output_dir);
  if (!options.replay_path.empty()) return replay(config, options);
  if (options.unsafe_diagnostics) {
    std::cerr << "note: --unsafe-diagnostics only affects --replay output\n";
  }
  const std::vector<ResultRow> rows = run_experiment(config);
  const fs::path csv = fs::path(config.output_dir) / "results.csv";
  emit_csv(rows, csv.string());
  std::cout << "wrote " << csv.string() << " (" << rows.size() << " rows)\n";
  if (config.write_gnuplot) {
    const fs::path script = fs::path(config.output_dir) / "results.gp";
    std::ofstream out(script, std::ios::binary);
    write_gnuplot_script(out, "results.csv", config);
    std::cout << "wrote " << script.string() << '\n';
  }
  return 0;
}

int report(bool ok, const std::string& line) {
  std::cout << (ok ? "PASS " : "FAIL ") << line << '\n';
  return ok ? 0 : 1;
}

std::string fmt(const char* format, double a, double b = 0.0) {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), format, a, b);
  return buffer;
}

int verify(std::size_t pool_size, std::uint64_t seed) {
  int failures = 0;
  const double gamma = 0.5;
  const double rewards[] = {0.0, 1.0};
  std::vector<FirstVisitReturns> maps = distinct_first_visit_maps(
      enumerate_trajectories(3, 3, rewards), gamma);
  if (pool_size > 0 && pool_size < maps.size()) maps.resize(pool_size);
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(3, 3);
  const ReturnBound bound(1.0, gamma);
  const PrivacyBudget budget = privacy_constants(0.1, 0.1, 3);
  const SolverSpec lsw{Mechanism::kLsw, EvalWeights::ones(WeightKind::kFixed, 3)};
  const SolverSpec lsl{Mechanism::kLsl,
                       EvalWeights::ones(WeightKind::kRegression, 3), 2.0};
  for (const SolverSpec& spec : {lsw, lsl}) {
    const PoolSweepReport r =
        sweep_neighbor_pool(maps, 3, phi, spec, bound, budget);
    const std::string name = mechanism_name(spec.mechanism);
    failures += report(r.condition_a_failures == 0,
                       name + " noise covers sensitivity over " +
                           std::to_string(r.pairs) + " pairs" +
                           fmt(" (max alpha*gap/sigma %.4g)", r.max_alpha_ratio));
    failures += report(r.condition_b_failures == 0,
                       name + " noise log-variance stable" +
                           fmt(" (max %.4g vs beta %.4g)", r.max_log_ratio,
                               r.beta));
    failures += report(r.bound_failures == 0,
                       name + " local sensitivity bound" +
                           fmt(" (max ratio %.4g)", r.max_bound_ratio));
  }

  std::mt19937_64 gen(seed);
  const int n = 40;
  const PrivacyBudget wide = privacy_constants(0.1, 0.1, n);
  for (const SolverSpec& spec :
       {SolverSpec{Mechanism::kLsw, EvalWeights::ones(WeightKind::kFixed, n)},
        SolverSpec{Mechanism::kLsl,
                   EvalWeights::ones(WeightKind::kRegression, n), 100.0}}) {
    std::vector<std::pair<Signature, Signature>> pairs;
    for (int i = 0; i < 200; ++i) {
      const std::int64_t m =
          std::uniform_int_distribution<std::int64_t>(1, 1000)(gen);
      Signature v{CountVector(n), m};
      for (int s = 0; s < n; ++s) {
        v.counts[s] = std::uniform_int_distribution<std::int64_t>(0, m)(gen);
      }
      Signature w = v;
      for (int s = 0; s < n; ++s) {
        const auto step = std::uniform_int_distribution<int>(-1, 1)(gen);
        w.counts[s] = std::clamp<std::int64_t>(v.counts[s] + step, 0, m);
      }
      pairs.emplace_back(std::move(v), std::move(w));
    }
    const SmoothnessReport r = check_smoothness_pairs(spec, pairs, 1.0, wide);
    failures += report(r.violations == 0 && r.upper_failures == 0,
                       std::string(mechanism_name(spec.mechanism)) +
                           " smooth bound" +
                           fmt(" (max log ratio %.4g vs beta %.4g)",
                               r.max_log_ratio, r.beta));
  }

  Rng rng(seed);
  TrajectoryDataset data;
  const Mdp chain = build_chain(4, 0.5, 0.9);
  for (int i = 0; i < 20; ++i) data.trajectories.push_back(sample_trajectory(chain, rng));
  const DatasetSummary summary = aggregate(data, 0.9, 3);
  const Eigen::MatrixXd small = Eigen::MatrixXd::Identity(3, 3);
  for (const SolverSpec& spec :
       {SolverSpec{Mechanism::kLsw, EvalWeights::ones(WeightKind::kFixed, 3)},
        SolverSpec{Mechanism::kLsl,
                   EvalWeights::ones(WeightKind::kRegression, 3), 4.0}}) {
    const NoiseExpectation e = noise_expectation_identity(
        spec, summary, small, ReturnBound(1.0, 0.9, 1.0),
        privacy_constants(1.0, 0.1, 3), 20000, rng);
    failures += report(
        std::abs(e.empirical_mean - e.analytic) <= 5.0 * e.standard_error,
        std::string(mechanism_name(spec.mechanism)) + " noise expectation" +
            fmt(" (empirical %.6g, analytic %.6g)", e.empirical_mean,
                e.analytic));
  }

  double worst = 0.0;
  bool square_ok = true;
  for (int m = 1; m <= 30; ++m) {
    for (int k = 1; k <= 9; ++k) {
      const BinomialCheck b = binomial_lemma_check(m, 0.1 * k);
      worst = std::max(worst, b.inverse_residual);
      square_ok = square_ok && b.square_holds;
    }
  }
  failures += report(worst <= 1e-12 && square_ok,
                     fmt("binomial lemma (max residual %.3g)", worst));

  const double as[] = {1, 2, 3, 5, 8, 13, 20, 30, 50, 100};
  const double bs[] = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1, 2.5, 5, 10};
  const MaxLemmaReport rec = reciprocal_max_check(as, bs);
  failures += report(rec.printed_mismatches == 0,
                     "reciprocal max lemma, printed cases: " +
                         std::to_string(rec.printed_mismatches) +
                         " of 100 disagree with grid search");
  failures += report(rec.exact_mismatches == 0,
                     "reciprocal max lemma, endpoint form: " +
                         std::to_string(rec.exact_mismatches) + " of 100 disagree");
  const double la[] = {0, 1, 2, 5, 10, 15, 20, 30, 40, 50};
  const MaxLemmaReport lin = linear_max_check(la, bs, 50.0);
  failures += report(lin.printed_mismatches == 0,
                     "linear max lemma, printed cases: " +
                         std::to_string(lin.printed_mismatches) +
                         " of 100 disagree with grid search");
  failures += report(lin.exact_mismatches == 0,
                     "linear max lemma, corrected thresholds: " +
                         std::to_string(lin.exact_mismatches) + " of 100 disagree");
  std::cout << failures << " check(s) failed\n";
  return failures == 0 ? 0 : 1;
}

int exact(int n, double p, double gamma) {
  const Mdp mdp = build_chain(n, p, gamma);
  const ValueVector v = exact_values(mdp);
  for (Eigen::Index s = 0; s < v.size(); ++s) {
    std::printf("%lld %.17g\n", static_cast<long long>(s), v[s]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private first-visit Monte Carlo evaluation"};
  app.require_subcommand(1);

  RunOptions run_options;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment sweep");
  run_cmd->add_option("--config", run_options.config_path, "Config file")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--replay", run_options.replay_path,
                      "Release private estimates for a trajectory file")
      ->check(CLI::ExistingFile);
  run_cmd->add_flag("--unsafe-diagnostics", run_options.unsafe_diagnostics,
                    "Also write data-dependent diagnostics (not private)");
  run_cmd->add_flag("--conservative-constants", run_options.conservative,
                    "Use the larger alpha / smaller beta calibration");

  std::size_t pool_size = 0;
  std::uint64_t seed = 1;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Run the oracle checks");
  verify_cmd->add_option("--pool-size", pool_size,
                         "Cap on distinct replacement trajectories (0 = all)");
  verify_cmd->add_option("--seed", seed, "Seed for randomised checks");

  int n = 40;
  double p = 0.5;
  double gamma = 0.99;
  CLI::App* exact_cmd = app.add_subcommand("exact", "Print exact chain values");
  exact_cmd->add_option("--n", n, "Number of states")->check(CLI::Range(2, 1 << 20));
  exact_cmd->add_option("--p", p, "Stay probability");
  exact_cmd->add_option("--gamma", gamma, "Discount");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(run_options);
    if (*verify_cmd) return verify(pool_size, seed);
    if (*exact_cmd) return exact(n, p, gamma);
  } catch (const std::exception& e) {
    std::cerr << "dpeval: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
