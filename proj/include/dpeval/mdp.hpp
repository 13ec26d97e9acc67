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

#ifndef DPEVAL_MDP_HPP_
#define DPEVAL_MDP_HPP_

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "dpeval/rng.hpp"
#include "dpeval/trajectory.hpp"

namespace dpeval {

using ValueVector = Eigen::VectorXd;

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tabular Markov reward process: an MDP with its policy folded in.
// transitions(s, s') is the probability of moving s -> s', rewards(s, s')
// the reward collected on that transition.
struct Mdp {
  Eigen::MatrixXd transitions;
  Eigen::MatrixXd rewards;
  double gamma = 0.0;
  double r_max = 0.0;
  std::vector<StateIndex> absorbing;
  Eigen::VectorXd start_dist;

  Eigen::Index n_states() const { return transitions.rows(); }
  bool is_absorbing(StateIndex s) const;

  // Throws std::invalid_argument if any structural invariant is broken.
  void validate() const;
};

inline constexpr std::int64_t kMaxTrajectorySteps = 10'000'000;

// Chain of n_states states: 0 .. n_states-2 are transient, each staying put
// with probability stay_prob and advancing otherwise; n_states-1 absorbs.
// The unit reward is paid on the transition entering the absorbing state, so
// every return lies in [0, 1]. Start distribution is uniform over the
// transient states.
Mdp build_chain(int n_states, double stay_prob, double gamma);

// Copy of `mdp` whose episodes always start in `start`.
Mdp with_point_start(Mdp mdp, StateIndex start);

// Solves V = r_bar + gamma P V with absorbing states pinned to zero.
ValueVector exact_values(const Mdp& mdp);

// Precomputes sparse cumulative transition rows so repeated sampling does
// not rescan dense rows.
class TrajectorySampler {
 public:
  explicit TrajectorySampler(const Mdp& mdp);

  // Draws a start state, then steps until an absorbing state is entered. The
  // absorbing state itself is not recorded.
  Trajectory operator()(Rng& rng) const;

 private:
  struct Edge {
    StateIndex next;
    double cumulative;
    double reward;
  };
  std::vector<std::vector<Edge>> rows_;
  std::vector<double> start_cumulative_;
  std::vector<char> absorbing_;
  StateIndex last_start_ = 0;
};

Trajectory sample_trajectory(const Mdp& mdp, Rng& rng);

// Visit statistics of a single episode over the transient states:
//   p(s)          = P[s in x]
//   p_pair(s, s') = P[s in x and s' in x]
//   p_excl(s, s') = P[s in x and s' not in x]
struct VisitStats {
  Eigen::VectorXd p;
  Eigen::MatrixXd p_pair;
  Eigen::MatrixXd p_excl;

  Eigen::Index size() const { return p.size(); }
};

// Closed form for forward-only chains (each transient s moves only to s or
// s+1, the last state absorbs). Covers states 0 .. n_states-2. Throws
// std::invalid_argument for any other transition structure.
VisitStats visit_probabilities(const Mdp& mdp);

}  // namespace dpeval

#endif  // DPEVAL_MDP_HPP_
