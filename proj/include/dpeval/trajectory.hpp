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

#ifndef DPEVAL_TRAJECTORY_HPP_
#define DPEVAL_TRAJECTORY_HPP_

#include <cstddef>
#include <vector>

namespace dpeval {

using StateIndex = int;

struct Step {
  StateIndex state = 0;
  double reward = 0.0;

  friend bool operator==(const Step&, const Step&) = default;
};

// One episode under the evaluated policy. Actions are not recorded: the
// policy is fixed and nothing downstream consumes them.
struct Trajectory {
  std::vector<Step> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Ordered batch X = (x_1, ..., x_m). Neighbouring datasets differ only in
// the last element.
struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }

  friend bool operator==(const TrajectoryDataset&,
                         const TrajectoryDataset&) = default;
};

}  // namespace dpeval

#endif  // DPEVAL_TRAJECTORY_HPP_
