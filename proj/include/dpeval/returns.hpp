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

#ifndef DPEVAL_RETURNS_HPP_
#define DPEVAL_RETURNS_HPP_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpeval/trajectory.hpp"

namespace dpeval {

using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

struct StateReturn {
  StateIndex state = 0;
  double value = 0.0;

  friend bool operator==(const StateReturn&, const StateReturn&) = default;
};

// Discounted return from the first visit of each visited state, sorted by
// state. Unvisited states are absent (their return is taken as zero).
using FirstVisitReturns = std::vector<StateReturn>;

FirstVisitReturns first_visit_returns(const Trajectory& trajectory,
                                      double gamma);

// Per-state count of trajectories visiting the state, |X_s|, plus m.
struct Signature {
  CountVector counts;
  std::int64_t m = 0;

  // K_X = max_s |X_s|.
  std::int64_t max_count() const {
    return counts.size() == 0 ? 0 : counts.maxCoeff();
  }
  Eigen::Index n_states() const { return counts.size(); }

  friend bool operator==(const Signature& a, const Signature& b) {
    return a.m == b.m && a.counts.size() == b.counts.size() &&
           a.counts == b.counts;
  }
};

// Sufficient statistics shared by both estimators. per_trajectory keeps the
// individual first-visit maps because the regularised risk sums over
// trajectories and is not a function of (f_x, signature) alone.
struct DatasetSummary {
  Eigen::VectorXd f_x;
  Signature signature;
  std::vector<FirstVisitReturns> per_trajectory;

  Eigen::Index n_states() const { return f_x.size(); }
  std::int64_t m() const { return signature.m; }
};

// F_X and the signature over states 0 .. n_states-1. Throws
// std::invalid_argument for an empty dataset or a state outside the range.
DatasetSummary aggregate(const TrajectoryDataset& dataset, double gamma,
                         Eigen::Index n_states);

// Same statistics from precomputed first-visit maps.
DatasetSummary aggregate_returns(std::vector<FirstVisitReturns> returns,
                                 Eigen::Index n_states);

TrajectoryDataset neighbor_replace_last(TrajectoryDataset dataset,
                                        Trajectory replacement);

// Line-oriented trajectory batches: one trajectory per line as
// space-separated `state:reward` pairs, states 0-indexed, `#` starts a
// comment. Throws std::runtime_error with the line number on bad input.
TrajectoryDataset read_trajectories(std::istream& in);
TrajectoryDataset read_trajectories_file(const std::string& path);
void write_trajectories(std::ostream& out, const TrajectoryDataset& dataset);

}  // namespace dpeval

#endif  // DPEVAL_RETURNS_HPP_
