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

#include "dpeval/returns.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dpeval/mdp.hpp"
#include "dpeval/oracle.hpp"

namespace dpeval {
namespace {

Trajectory make(std::initializer_list<Step> steps) { return Trajectory{steps}; }

double value_of(const FirstVisitReturns& map, StateIndex s) {
  for (const StateReturn& r : map) {
    if (r.state == s) return r.value;
  }
  return 0.0;
}

TEST(FirstVisitReturns, RevisitUsesFirstOccurrence) {
  const auto map = first_visit_returns(make({{0, 1}, {1, 2}, {0, 3}}), 0.5);
  ASSERT_EQ(map.size(), 2u);
  EXPECT_DOUBLE_EQ(value_of(map, 0), 1 + 2 * 0.5 + 3 * 0.25);
  EXPECT_DOUBLE_EQ(value_of(map, 1), 2 + 3 * 0.5);
}

TEST(FirstVisitReturns, SingleStepAndZeroRewards) {
  EXPECT_EQ(first_visit_returns(make({{4, 1}}), 0.3),
            (FirstVisitReturns{{4, 1.0}}));
  for (const auto& r :
       first_visit_returns(make({{0, 0}, {2, 0}, {1, 0}, {2, 0}}), 0.9)) {
    EXPECT_EQ(r.value, 0.0);
  }
}

TEST(FirstVisitReturns, SortedByState) {
  const auto map = first_visit_returns(make({{3, 0}, {1, 0}, {2, 1}}), 0.9);
  ASSERT_EQ(map.size(), 3u);
  EXPECT_EQ(map[0].state, 1);
  EXPECT_EQ(map[1].state, 2);
  EXPECT_EQ(map[2].state, 3);
}

TEST(FirstVisitReturns, BoundedBySampledChainCeiling) {
  const Mdp mdp = build_chain(20, 0.5, 0.9);
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    for (const auto& r : first_visit_returns(sample_trajectory(mdp, rng), 0.9)) {
      EXPECT_GE(r.value, 0.0);
      EXPECT_LE(r.value, mdp.r_max / (1 - mdp.gamma));
    }
  }
}

TEST(Aggregate, AveragesAndCounts) {
  TrajectoryDataset data{{make({{0, 1}}), make({{0, 3}}), make({{1, 0}})}};
  const DatasetSummary s = aggregate(data, 0.5, 3);
  EXPECT_DOUBLE_EQ(s.f_x[0], 2.0);
  EXPECT_EQ(s.signature.counts[0], 2);
  EXPECT_EQ(s.f_x[2], 0.0);
  EXPECT_EQ(s.signature.counts[2], 0);
  EXPECT_EQ(s.m(), 3);
  EXPECT_EQ(s.signature.max_count(), 2);
  EXPECT_EQ(s.per_trajectory.size(), 3u);
}

TEST(Aggregate, SingleTrajectory) {
  const Trajectory t = make({{2, 0}, {0, 1}});
  const DatasetSummary s = aggregate(TrajectoryDataset{{t}}, 0.5, 3);
  EXPECT_DOUBLE_EQ(s.f_x[2], 0.5);
  EXPECT_DOUBLE_EQ(s.f_x[0], 1.0);
  EXPECT_EQ(s.f_x[1], 0.0);
  EXPECT_EQ(s.signature.counts.maxCoeff(), 1);
}

TEST(Aggregate, RejectsEmptyAndOutOfRange) {
  EXPECT_THROW(aggregate(TrajectoryDataset{}, 0.5, 3), std::invalid_argument);
  EXPECT_THROW(aggregate(TrajectoryDataset{{make({{5, 0}})}}, 0.5, 3),
               std::invalid_argument);
}

TEST(NeighborReplaceLast, IdentityReplacement) {
  TrajectoryDataset data{{make({{0, 1}}), make({{1, 0}, {2, 1}})}};
  EXPECT_EQ(neighbor_replace_last(data, data.trajectories.back()), data);
  EXPECT_THROW(neighbor_replace_last(TrajectoryDataset{}, make({{0, 0}})),
               std::invalid_argument);
}

TEST(NeighborReplaceLast, DisjointSingleton) {
  const TrajectoryDataset x{{make({{0, 1}, {1, 0}})}};
  const TrajectoryDataset y = neighbor_replace_last(x, make({{2, 1}}));
  const CountVector diff = aggregate(x, 0.5, 3).signature.counts -
                           aggregate(y, 0.5, 3).signature.counts;
  EXPECT_EQ(diff[0], 1);
  EXPECT_EQ(diff[1], 1);
  EXPECT_EQ(diff[2], -1);
}

// Signatures of neighbours differ by at most one, and each averaged return
// moves by at most F_max / (|X°_s| + 1), X° the shared prefix.
TEST(NeighborReplaceLast, SignatureAndAverageStability) {
  const double gamma = 0.5;
  const double f_max = 1.0 / (1.0 - gamma);
  const double rewards[] = {0.0, 1.0};
  const std::vector<Trajectory> pool = enumerate_trajectories(3, 2, rewards);
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int trial = 0; trial < 3000; ++trial) {
    const int m = 1 + trial % 4;
    TrajectoryDataset x;
    for (int i = 0; i < m; ++i) x.trajectories.push_back(pool[pick(gen)]);
    const TrajectoryDataset y = neighbor_replace_last(x, pool[pick(gen)]);
    const DatasetSummary sx = aggregate(x, gamma, 3);
    const DatasetSummary sy = aggregate(y, gamma, 3);
    EXPECT_LE((sx.signature.counts - sy.signature.counts).cwiseAbs().maxCoeff(), 1);
    TrajectoryDataset prefix = x;
    prefix.trajectories.pop_back();
    CountVector shared = CountVector::Zero(3);
    if (!prefix.empty()) shared = aggregate(prefix, gamma, 3).signature.counts;
    for (int s = 0; s < 3; ++s) {
      EXPECT_LE(std::abs(sx.f_x[s] - sy.f_x[s]),
                f_max / static_cast<double>(shared[s] + 1) + 1e-12);
    }
  }
}

TEST(TrajectoryFile, RoundTrip) {
  const TrajectoryDataset data{
      {make({{0, 0}, {1, 0.25}, {2, 1}}), make({{5, 0.1}}), make({{3, 1e-17}})}};
  std::stringstream buffer;
  write_trajectories(buffer, data);
  EXPECT_EQ(read_trajectories(buffer), data);
}

TEST(TrajectoryFile, CommentsAndBlankLines) {
  std::istringstream in("# header\n0:0 1:1  # trailing\n\n   \n2:0.5\n");
  const TrajectoryDataset data = read_trajectories(in);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data.trajectories[0], make({{0, 0}, {1, 1}}));
  EXPECT_EQ(data.trajectories[1], make({{2, 0.5}}));
}

TEST(TrajectoryFile, MalformedLinesReportLineNumber) {
  std::istringstream missing_colon("0:1\n3\n");
  try {
    read_trajectories(missing_colon);
    FAIL() << "expected a parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream bad_reward("0:x\n");
  EXPECT_THROW(read_trajectories(bad_reward), std::runtime_error);
  std::istringstream negative_state("-1:0\n");
  EXPECT_THROW(read_trajectories(negative_state), std::runtime_error);
}

}  // namespace
}  // namespace dpeval
