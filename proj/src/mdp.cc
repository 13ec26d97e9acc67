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

#include "dpeval/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

namespace dpeval {
namespace {

constexpr double kRowSumTolerance = 1e-12;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

// Transient state s of a forward-only chain reaches only s and s + 1.
bool is_forward_chain(const Mdp& mdp) {
  const Eigen::Index n = mdp.n_states();
  if (mdp.absorbing.size() != 1 || mdp.absorbing.front() != n - 1) {
    return false;
  }
  for (Eigen::Index s = 0; s + 1 < n; ++s) {
    for (Eigen::Index t = 0; t < n; ++t) {
      if (t != s && t != s + 1 && mdp.transitions(s, t) != 0.0) return false;
    }
    if (mdp.transitions(s, s + 1) <= 0.0) return false;
  }
  return true;
}

}  // namespace

bool Mdp::is_absorbing(StateIndex s) const {
  return std::find(absorbing.begin(), absorbing.end(), s) != absorbing.end();
}

void Mdp::validate() const {
  const Eigen::Index n = n_states();
  require(n >= 1, "mdp: no states");
  require(transitions.cols() == n, "mdp: transition matrix is not square");
  require(rewards.rows() == n && rewards.cols() == n,
          "mdp: reward matrix shape does not match transitions");
  require(gamma > 0.0 && gamma < 1.0, "mdp: gamma must lie in (0, 1)");
  require(r_max >= 0.0, "mdp: r_max must be nonnegative");
  require(start_dist.size() == n, "mdp: start distribution has wrong size");
  for (Eigen::Index s = 0; s < n; ++s) {
    require((transitions.row(s).array() >= 0.0).all(),
            "mdp: negative transition probability in row " + std::to_string(s));
    require(std::fabs(transitions.row(s).sum() - 1.0) <= kRowSumTolerance,
            "mdp: transition row " + std::to_string(s) + " does not sum to 1");
  }
  require((rewards.array() >= 0.0).all() && (rewards.array() <= r_max).all(),
          "mdp: rewards must lie in [0, r_max]");
  for (StateIndex a : absorbing) {
    require(a >= 0 && a < n, "mdp: absorbing state out of range");
    require(start_dist[a] == 0.0, "mdp: start distribution hits absorbing state");
  }
  require((start_dist.array() >= 0.0).all() &&
              std::fabs(start_dist.sum() - 1.0) <= kRowSumTolerance,
          "mdp: start distribution must be a probability vector");
}

Mdp build_chain(int n_states, double stay_prob, double gamma) {
  require(n_states >= 2, "build_chain: need at least two states");
  require(stay_prob >= 0.0 && stay_prob < 1.0,
          "build_chain: stay_prob must lie in [0, 1); a chain with "
          "stay_prob = 1 never terminates");
  require(gamma > 0.0 && gamma < 1.0, "build_chain: gamma must lie in (0, 1)");

  const Eigen::Index n = n_states;
  Mdp mdp;
  mdp.transitions = Eigen::MatrixXd::Zero(n, n);
  mdp.rewards = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index s = 0; s + 1 < n; ++s) {
    mdp.transitions(s, s) = stay_prob;
    mdp.transitions(s, s + 1) = 1.0 - stay_prob;
  }
  mdp.transitions(n - 1, n - 1) = 1.0;
  mdp.rewards(n - 2, n - 1) = 1.0;
  mdp.gamma = gamma;
  mdp.r_max = 1.0;
  mdp.absorbing = {n_states - 1};
  mdp.start_dist = Eigen::VectorXd::Zero(n);
  mdp.start_dist.head(n - 1).setConstant(1.0 / static_cast<double>(n - 1));
  mdp.validate();
  return mdp;
}

Mdp with_point_start(Mdp mdp, StateIndex start) {
  require(start >= 0 && start < mdp.n_states(), "with_point_start: bad state");
  require(!mdp.is_absorbing(start), "with_point_start: state is absorbing");
  mdp.start_dist.setZero();
  mdp.start_dist[start] = 1.0;
  return mdp;
}

ValueVector exact_values(const Mdp& mdp) {
  mdp.validate();
  const Eigen::Index n = mdp.n_states();
  Eigen::MatrixXd p = mdp.transitions;
  Eigen::VectorXd r_bar =
      (mdp.transitions.array() * mdp.rewards.array()).rowwise().sum();
  for (StateIndex a : mdp.absorbing) {
    p.row(a).setZero();
    r_bar[a] = 0.0;
  }
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    throw SingularSystemError("exact_values: I - gamma P is singular");
  }
  return lu.solve(r_bar);
}

TrajectorySampler::TrajectorySampler(const Mdp& mdp) {
  mdp.validate();
  const Eigen::Index n = mdp.n_states();
  rows_.resize(n);
  absorbing_.assign(n, 0);
  for (StateIndex a : mdp.absorbing) absorbing_[a] = 1;
  for (Eigen::Index s = 0; s < n; ++s) {
    double cumulative = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double prob = mdp.transitions(s, t);
      if (prob <= 0.0) continue;
      cumulative += prob;
      rows_[s].push_back({static_cast<StateIndex>(t), cumulative,
                          mdp.rewards(s, t)});
    }
  }
  start_cumulative_.resize(n);
  double cumulative = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    cumulative += mdp.start_dist[s];
    start_cumulative_[s] = cumulative;
    if (mdp.start_dist[s] > 0.0) last_start_ = static_cast<StateIndex>(s);
  }
}

Trajectory TrajectorySampler::operator()(Rng& rng) const {
  const double u0 = rng.uniform();
  StateIndex state = last_start_;
  for (std::size_t s = 0; s < start_cumulative_.size(); ++s) {
    if (u0 < start_cumulative_[s]) {
      state = static_cast<StateIndex>(s);
      break;
    }
  }

  Trajectory trajectory;
  for (std::int64_t step = 0;; ++step) {
    if (step >= kMaxTrajectorySteps) {
      throw std::runtime_error(
          "sample_trajectory: step cap exceeded; the chain does not absorb");
    }
    const std::vector<Edge>& row = rows_[state];
    const double u = rng.uniform();
    const Edge* taken = &row.back();
    for (const Edge& edge : row) {
      if (u < edge.cumulative) {
        taken = &edge;
        break;
      }
    }
    trajectory.steps.push_back({state, taken->reward});
    if (absorbing_[taken->next]) break;
    state = taken->next;
  }
  return trajectory;
}

Trajectory sample_trajectory(const Mdp& mdp, Rng& rng) {
  return TrajectorySampler(mdp)(rng);
}

VisitStats visit_probabilities(const Mdp& mdp) {
  mdp.validate();
  require(is_forward_chain(mdp),
          "visit_probabilities: closed form needs a forward-only chain");
  const Eigen::Index n = mdp.n_states() - 1;
  VisitStats stats;
  // With forward-only dynamics every transient state after the start is
  // visited, so s is visited iff the episode starts at or before s.
  stats.p.resize(n);
  double cumulative = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    cumulative += mdp.start_dist[s];
    stats.p[s] = std::min(cumulative, 1.0);
  }
  stats.p_pair.resize(n, n);
  stats.p_excl.resize(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index t = 0; t < n; ++t) {
      stats.p_pair(s, t) = std::min(stats.p[s], stats.p[t]);
      stats.p_excl(s, t) = std::max(0.0, stats.p[s] - stats.p[t]);
    }
  }
  return stats;
}

}  // namespace dpeval
