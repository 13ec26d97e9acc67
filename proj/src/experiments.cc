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

#include "dpeval/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "dpeval/dp_mech.hpp"
#include "dpeval/estimators.hpp"
#include "dpeval/returns.hpp"
#include "dpeval/rng.hpp"

namespace dpeval {

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kLsw:
      return "lsw";
    case Algorithm::kDpLsw:
      return "dp-lsw";
    case Algorithm::kLsl:
      return "lsl";
    case Algorithm::kDpLsl:
      return "dp-lsl";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  for (Algorithm a : kAllAlgorithms) {
    if (name == algorithm_name(a)) return a;
  }
  return std::nullopt;
}

bool is_private(Algorithm algorithm) {
  return algorithm == Algorithm::kDpLsw || algorithm == Algorithm::kDpLsl;
}

std::uint64_t algorithm_stream(Algorithm algorithm) {
  return static_cast<std::uint64_t>(algorithm) + 1;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t m, std::uint64_t run) {
  return mix64(mix64(mix64(mix64(master) ^ stream) ^ m) ^ run);
}

Eigen::MatrixXd aggregate_features(int n_transient, int group) {
  if (n_transient < 1) {
    throw std::invalid_argument("aggregate_features: need at least one state");
  }
  if (group < 1) throw std::invalid_argument("aggregate_features: group >= 1");
  const int columns = (n_transient + group - 1) / group;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n_transient, columns);
  for (int s = 0; s < n_transient; ++s) phi(s, s / group) = 1.0;
  return phi;
}

int worker_count() {
  if (const char* env = std::getenv("DPEVAL_THREADS")) {
    int value = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc() && ptr == end && value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Clock = std::chrono::steady_clock;

// Everything that depends on the config but not on the data.
struct Setup {
  Mdp mdp;
  Eigen::VectorXd exact;  // transient states only
  Eigen::MatrixXd phi;
  EvalWeights w;
  EvalWeights rho;
  ReturnBound bound;
  PrivacyBudget budget;
  std::optional<LswSolver<double>> lsw;
  std::string lsw_error;
};

Setup make_setup(const ExperimentConfig& config) {
  Mdp mdp = build_chain(config.n_states, config.stay_prob, config.gamma);
  mdp.r_max = config.r_max;
  if (config.start) mdp = with_point_start(std::move(mdp), *config.start);
  mdp.validate();
  const int n_transient = config.n_states - 1;
  Eigen::MatrixXd phi = aggregate_features(n_transient, config.aggregation);
  Eigen::VectorXd w_values = Eigen::VectorXd::Ones(n_transient);
  if (config.w_rule == WeightRule::kTrueVisit) {
    w_values = visit_probabilities(mdp).p;  // rho is all ones
  }
  Setup setup{mdp,
              exact_values(mdp).head(n_transient),
              phi,
              EvalWeights::fixed(w_values),
              EvalWeights::ones(WeightKind::kRegression, n_transient),
              ReturnBound(config.r_max, config.gamma, config.f_max),
              privacy_constants(config.epsilon, config.delta,
                                static_cast<int>(phi.cols()), config.constants),
              std::nullopt,
              {}};
  try {
    setup.lsw.emplace(setup.phi, setup.w);
  } catch (const std::exception& e) {
    setup.lsw_error = e.what();
  }
  return setup;
}

// F_X and the signature, accumulated trajectory by trajectory so that large
// batches never hold all trajectories at once.
DatasetSummary sample_summary(const Setup& setup, const TrajectorySampler& sampler,
                              std::int64_t m, Rng& rng) {
  const Eigen::Index n = setup.phi.rows();
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(n);
  DatasetSummary summary;
  summary.signature.m = m;
  summary.signature.counts = CountVector::Zero(n);
  for (std::int64_t i = 0; i < m; ++i) {
    for (const StateReturn& visit :
         first_visit_returns(sampler(rng), setup.mdp.gamma)) {
      sums[visit.state] += visit.value;
      ++summary.signature.counts[visit.state];
    }
  }
  summary.f_x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto c = summary.signature.counts[s];
    if (c > 0) summary.f_x[s] = sums[s] / static_cast<double>(c);
  }
  return summary;
}

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

ResultRow run_cell(const ExperimentConfig& config, const Setup& setup,
                   const DatasetSummary& summary, Algorithm algorithm,
                   std::int64_t m, int run) {
  ResultRow row;
  row.algorithm = algorithm_name(algorithm);
  row.m = m;
  row.run = run;
  const std::uint64_t seed = derive_seed(
      config.master_seed, algorithm_stream(algorithm),
      static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(run));
  row.seed = seed;
  const bool ridge =
      algorithm == Algorithm::kLsl || algorithm == Algorithm::kDpLsl;
  const double lambda = config.lambda_for(m);
  if (ridge) row.lambda = lambda;
  const auto start = Clock::now();
  try {
    Rng rng(seed);
    Eigen::VectorXd released;
    switch (algorithm) {
      case Algorithm::kLsw:
        if (!setup.lsw) throw RankDeficientError(setup.lsw_error);
        released = (*setup.lsw)(summary.f_x);
        row.excess_risk = 0.0;
        break;
      case Algorithm::kLsl:
        released = solve_lsl(summary, setup.phi, setup.rho, lambda);
        row.excess_risk = 0.0;
        break;
      case Algorithm::kDpLsw: {
        const PrivateEstimate est =
            dp_lsw(summary, setup.phi, setup.w, setup.bound, setup.budget, rng);
        released = est.theta_hat;
        row.sigma = est.sigma;
        row.excess_risk = excess_risk_w(est.theta_hat, est.theta, summary,
                                        setup.phi, setup.w);
        break;
      }
      case Algorithm::kDpLsl: {
        const PrivateEstimate est = dp_lsl(summary, setup.phi, setup.rho,
                                           lambda, setup.bound, setup.budget,
                                           rng);
        released = est.theta_hat;
        row.sigma = est.sigma;
        row.excess_risk = excess_risk_lambda(est.theta_hat, est.theta, summary,
                                             setup.phi, setup.rho, lambda);
        break;
      }
    }
    row.rmse = rmse(released, setup.phi, setup.exact);
  } catch (const std::exception& e) {
    row.error = sanitize(e.what());
    row.excess_risk.reset();
    row.sigma.reset();
    row.rmse.reset();
  }
  if (config.record_timing) {
    row.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  }
  return row;
}

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

std::optional<double> stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::nullopt;
  const double mean = *mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

void append_summary(std::vector<ResultRow>& out, std::size_t first,
                    std::size_t last) {
  std::vector<double> rmse_v, excess_v, sigma_v, wall_v;
  for (std::size_t i = first; i < last; ++i) {
    const ResultRow& row = out[i];
    if (!row.error.empty()) continue;
    if (row.rmse) rmse_v.push_back(*row.rmse);
    if (row.excess_risk) excess_v.push_back(*row.excess_risk);
    if (row.sigma) sigma_v.push_back(*row.sigma);
    wall_v.push_back(row.wall_ms);
  }
  ResultRow mean;
  mean.algorithm = out[first].algorithm;
  mean.m = out[first].m;
  mean.lambda = out[first].lambda;
  ResultRow se = mean;
  mean.kind = RowKind::kMean;
  se.kind = RowKind::kStdError;
  mean.rmse = mean_of(rmse_v);
  se.rmse = stderr_of(rmse_v);
  mean.excess_risk = mean_of(excess_v);
  se.excess_risk = stderr_of(excess_v);
  mean.sigma = mean_of(sigma_v);
  se.sigma = stderr_of(sigma_v);
  mean.wall_ms = mean_of(wall_v).value_or(0.0);
  se.wall_ms = stderr_of(wall_v).value_or(0.0);
  const std::size_t failed = (last - first) - wall_v.size();
  if (failed > 0) {
    mean.error = std::to_string(failed) + " of " +
                 std::to_string(last - first) + " runs failed";
  }
  out.push_back(std::move(mean));
  out.push_back(std::move(se));
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Setup setup = make_setup(config);
  const TrajectorySampler sampler(setup.mdp);

  // One task per (m, run): the batch is sampled once and shared by every
  // algorithm, so differences between algorithms are not sampling noise.
  const std::size_t n_m = config.m_values.size();
  const std::size_t n_tasks = n_m * static_cast<std::size_t>(config.runs);
  const std::size_t n_alg = config.algorithms.size();
  std::vector<std::vector<ResultRow>> results(n_tasks);
  std::vector<std::string> failures(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const std::int64_t m = config.m_values[task / config.runs];
      const int run = static_cast<int>(task % config.runs);
      std::vector<ResultRow>& rows = results[task];
      try {
        Rng data_rng(derive_seed(config.master_seed, kDataStream,
                                 static_cast<std::uint64_t>(m),
                                 static_cast<std::uint64_t>(run)));
        const DatasetSummary summary = sample_summary(setup, sampler, m, data_rng);
        for (Algorithm algorithm : config.algorithms) {
          rows.push_back(run_cell(config, setup, summary, algorithm, m, run));
        }
      } catch (const std::exception& e) {
        failures[task] = sanitize(e.what());
      }
    }
  };
  const int threads = std::min<int>(worker_count(), static_cast<int>(n_tasks));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  // Sampling failures still produce one row per algorithm.
  for (std::size_t task = 0; task < n_tasks; ++task) {
    if (failures[task].empty()) continue;
    const std::int64_t m = config.m_values[task / config.runs];
    for (Algorithm algorithm : config.algorithms) {
      ResultRow row;
      row.algorithm = algorithm_name(algorithm);
      row.m = m;
      row.run = static_cast<int>(task % config.runs);
      row.error = failures[task];
      results[task].push_back(std::move(row));
    }
  }

  std::vector<ResultRow> out;
  out.reserve(n_alg * n_m * (config.runs + 2));
  std::vector<Algorithm> order;
  for (Algorithm a : kAllAlgorithms) {
    if (std::find(config.algorithms.begin(), config.algorithms.end(), a) !=
        config.algorithms.end()) {
      order.push_back(a);
    }
  }
  for (Algorithm algorithm : order) {
    const std::string name = algorithm_name(algorithm);
    for (std::size_t mi = 0; mi < n_m; ++mi) {
      const std::size_t first = out.size();
      for (int run = 0; run < config.runs; ++run) {
        for (ResultRow& row : results[mi * config.runs + run]) {
          if (row.algorithm == name) out.push_back(row);
        }
      }
      append_summary(out, first, out.size());
    }
  }
  return out;
}

namespace {

std::string real(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.12g", x);
  return buffer;
}

std::string optional_real(const std::optional<double>& x) {
  return x ? real(*x) : std::string();
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const ResultRow& row : rows) {
    out << row.algorithm << ',' << row.m << ',' << optional_real(row.lambda)
        << ',';
    switch (row.kind) {
      case RowKind::kRun:
        out << row.run;
        break;
      case RowKind::kMean:
        out << "mean";
        break;
      case RowKind::kStdError:
        out << "se";
        break;
    }
    out << ',' << (row.seed ? std::to_string(*row.seed) : std::string()) << ','
        << optional_real(row.rmse) << ',' << optional_real(row.excess_risk)
        << ',' << optional_real(row.sigma) << ',' << real(row.wall_ms) << ','
        << sanitize(row.error) << '\n';
  }
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(out, rows);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::runtime_error("csv line " + std::to_string(line) +
                             ": bad number '" + text + "'");
  }
  return value;
}

std::optional<double> parse_optional(const std::string& text,
                                     std::size_t line) {
  if (text.empty()) return std::nullopt;
  return parse_number<double>(text, line);
}

}  // namespace

std::vector<ResultRow> parse_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("csv: missing or unexpected header");
  }
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 10) {
      throw std::runtime_error("csv line " + std::to_string(number) +
                               ": expected 10 fields");
    }
    ResultRow row;
    row.algorithm = f[0];
    row.m = parse_number<std::int64_t>(f[1], number);
    row.lambda = parse_optional(f[2], number);
    if (f[3] == "mean") {
      row.kind = RowKind::kMean;
    } else if (f[3] == "se") {
      row.kind = RowKind::kStdError;
    } else {
      row.run = parse_number<int>(f[3], number);
    }
    if (!f[4].empty()) row.seed = parse_number<std::uint64_t>(f[4], number);
    row.rmse = parse_optional(f[5], number);
    row.excess_risk = parse_optional(f[6], number);
    row.sigma = parse_optional(f[7], number);
    row.wall_ms = parse_number<double>(f[8], number);
    row.error = f[9];
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_gnuplot_script(std::ostream& out, const std::string& csv_name,
                          const ExperimentConfig& config) {
  out << "# Mean RMSE against batch size, one curve per algorithm.\n"
      << "set datafile separator ','\n"
      << "set logscale xy\n"
      << "set xlabel 'm (trajectories)'\n"
      << "set ylabel 'RMSE'\n"
      << "set key outside\n"
      << "set terminal pngcairo size 900,600\n"
      << "set output 'rmse.png'\n"
      << "plot ";
  std::vector<Algorithm> order;
  for (Algorithm a : kAllAlgorithms) {
    if (std::find(config.algorithms.begin(), config.algorithms.end(), a) !=
        config.algorithms.end()) {
      order.push_back(a);
    }
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string name = algorithm_name(order[i]);
    if (i > 0) out << ", \\\n     ";
    out << "'" << csv_name << "' using (strcol(1) eq '" << name
        << "' && strcol(4) eq 'mean' ? $2 : 1/0):6 with linespoints title '"
        << name << "'";
  }
  out << '\n';
}

}  // namespace dpeval
