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

#include "dpeval/dp_mech.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "dpeval/experiments.hpp"
#include "dpeval/mdp.hpp"

namespace dpeval {
namespace {

TrajectoryDataset singleton() {
  // Returns with gamma = 0.5: state 0 -> 0.25, 1 -> 0.5, 2 -> 1.
  return TrajectoryDataset{{Trajectory{{{0, 0}, {1, 0}, {2, 1}}}}};
}

TrajectoryDataset chain_data(int n_states, int m, std::uint64_t seed) {
  const Mdp mdp = build_chain(n_states, 0.5, 0.9);
  Rng rng(seed);
  TrajectoryDataset data;
  for (int i = 0; i < m; ++i) data.trajectories.push_back(sample_trajectory(mdp, rng));
  return data;
}

TEST(DpLsl, SingletonExample) {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(3, 3);
  const auto rho = EvalWeights::ones(WeightKind::kRegression, 3);
  Rng rng(1);
  const PrivateEstimate e =
      dp_lsl(singleton(), phi, rho, 4.0, 0.5, 1.0, std::nullopt, 1.0, 0.1, rng);
  EXPECT_EQ(e.mechanism, Mechanism::kLsl);
  EXPECT_NEAR(e.budget.alpha, 12.238734153404083, 1e-13);
  EXPECT_NEAR(e.budget.beta, 0.04169632475130709, 1e-16);
  EXPECT_NEAR(e.report.psi, 5.496320343559642, 1e-14);
  EXPECT_EQ(e.report.argmax_k, 0);
  EXPECT_EQ(e.report.k_range, 1);
  EXPECT_DOUBLE_EQ(e.report.f_max, 2.0);
  EXPECT_NEAR(e.sigma, 38.25703042317028, 1e-12);
  EXPECT_LT((e.theta - Eigen::Vector3d(0.25, 0.5, 1.0) / 3.0).norm(), 1e-15);
}

TEST(DpLsw, SingletonExample) {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(3, 3);
  const auto w = EvalWeights::ones(WeightKind::kFixed, 3);
  Rng rng(1);
  const PrivateEstimate e =
      dp_lsw(singleton(), phi, w, 0.5, 1.0, std::nullopt, 1.0, 0.1, rng);
  EXPECT_NEAR(e.report.psi, 3.0, 1e-15);
  EXPECT_NEAR(e.sigma, 42.39621874804868, 1e-12);
  EXPECT_LT((e.theta - Eigen::Vector3d(0.25, 0.5, 1.0)).norm(), 1e-15);
}

TEST(DpMech, BitwiseDeterministic) {
  const TrajectoryDataset data = chain_data(21, 200, 4);
  const Eigen::MatrixXd phi = aggregate_features(20, 2);
  const auto w = EvalWeights::ones(WeightKind::kFixed, 20);
  const auto rho = EvalWeights::ones(WeightKind::kRegression, 20);
  for (int rep = 0; rep < 2; ++rep) {
    Rng a(99), b(99);
    const auto ea = dp_lsw(data, phi, w, 0.9, 1.0, 1.0, 0.1, 0.1, a);
    const auto eb = dp_lsw(data, phi, w, 0.9, 1.0, 1.0, 0.1, 0.1, b);
    EXPECT_EQ(format_estimate(ea, true), format_estimate(eb, true));
    Rng c(7), d(7);
    const auto la = dp_lsl(data, phi, rho, 50.0, 0.9, 1.0, 1.0, 0.1, 0.1, c);
    const auto lb = dp_lsl(data, phi, rho, 50.0, 0.9, 1.0, 1.0, 0.1, 0.1, d);
    EXPECT_EQ(format_estimate(la, true), format_estimate(lb, true));
  }
}

TEST(DpMech, NoiseIsTheSeededGaussian) {
  const TrajectoryDataset data = chain_data(11, 50, 2);
  const Eigen::MatrixXd phi = aggregate_features(10, 1);
  Rng rng(1234);
  const auto e = dp_lsw(data, phi, EvalWeights::ones(WeightKind::kFixed, 10),
                        0.9, 1.0, std::nullopt, 0.5, 0.1, rng);
  Rng replay(1234);
  const Eigen::VectorXd eta = replay.normal_vector(10, e.sigma);
  EXPECT_EQ(e.theta_hat - e.theta, eta);
}

TEST(DpMech, EmpiricalSpreadMatchesSigma) {
  const TrajectoryDataset data = chain_data(9, 100, 3);
  const DatasetSummary summary = aggregate(data, 0.9, 8);
  const Eigen::MatrixXd phi = aggregate_features(8, 2);
  const auto w = EvalWeights::ones(WeightKind::kFixed, 8);
  const auto rho = EvalWeights::ones(WeightKind::kRegression, 8);
  const ReturnBound bound(1.0, 0.9);
  const PrivacyBudget budget = privacy_constants(1.0, 0.1, 4);
  Rng rng(5);
  double sq_w = 0.0, sq_l = 0.0, sigma_w = 0.0, sigma_l = 0.0;
  const int runs = 10000;
  for (int i = 0; i < runs; ++i) {
    const auto ew = dp_lsw(summary, phi, w, bound, budget, rng);
    const auto el = dp_lsl(summary, phi, rho, 20.0, bound, budget, rng);
    sq_w += (ew.theta_hat - ew.theta).squaredNorm();
    sq_l += (el.theta_hat - el.theta).squaredNorm();
    sigma_w = ew.sigma;
    sigma_l = el.sigma;
  }
  EXPECT_NEAR(std::sqrt(sq_w / (4.0 * runs)) / sigma_w, 1.0, 0.03);
  EXPECT_NEAR(std::sqrt(sq_l / (4.0 * runs)) / sigma_l, 1.0, 0.03);
}

TEST(DpLsl, SmallLambdaRejectedBeforeSampling) {
  const TrajectoryDataset data = chain_data(9, 20, 1);
  const Eigen::MatrixXd phi = aggregate_features(8, 2);  // |phi|^2 = 2
  const auto rho = EvalWeights::ones(WeightKind::kRegression, 8);
  Rng rng(8);
  const Rng before = rng;
  EXPECT_THROW(dp_lsl(data, phi, rho, 2.0, 0.9, 1.0, 1.0, 0.1, 0.1, rng),
               InvalidRegularizationError);
  Rng untouched = before;
  EXPECT_EQ(rng.next_u64(), untouched.next_u64());
  EXPECT_NO_THROW(dp_lsl(data, phi, rho, 2.01, 0.9, 1.0, 1.0, 0.1, 0.1, rng));
}

TEST(DpMech, DimensionMismatchRejected) {
  const DatasetSummary summary = aggregate(singleton(), 0.5, 3);
  Rng rng(1);
  EXPECT_THROW(dp_lsw(summary, Eigen::MatrixXd::Identity(3, 3),
                      EvalWeights::ones(WeightKind::kFixed, 3),
                      ReturnBound(1.0, 0.5), privacy_constants(1.0, 0.1, 2), rng),
               std::invalid_argument);
}

TEST(Serialization, PublicAndPrivateSections) {
  Rng rng(1);
  const PrivateEstimate e =
      dp_lsl(singleton(), Eigen::MatrixXd::Identity(3, 3),
             EvalWeights::ones(WeightKind::kRegression, 3), 4.0, 0.5, 1.0,
             std::nullopt, 1.0, 0.1, rng);
  const std::string pub = format_estimate(e, false);
  const std::string all = format_estimate(e, true);
  EXPECT_EQ(all.rfind(pub, 0), 0u);
  EXPECT_EQ(pub.find("[private]"), std::string::npos);
  EXPECT_EQ(pub.find("theta ="), std::string::npos);
  EXPECT_EQ(pub.find("\nsigma ="), std::string::npos);
  EXPECT_EQ(pub.find("\npsi ="), std::string::npos);
  EXPECT_NE(pub.find("mechanism = dp-lsl\n"), std::string::npos);
  EXPECT_NE(pub.find("lambda = 4\n"), std::string::npos);
  EXPECT_NE(pub.find("constants = main\n"), std::string::npos);
  EXPECT_NE(all.find("[private]\n"), std::string::npos);
  EXPECT_NE(all.find("argmax_k = 0\n"), std::string::npos);
  EXPECT_NE(all.find("sigma = 38.25703042317"), std::string::npos);
}

TEST(Serialization, WeightedHasNoLambdaLine) {
  Rng rng(1);
  const PrivateEstimate e =
      dp_lsw(singleton(), Eigen::MatrixXd::Identity(3, 3),
             EvalWeights::ones(WeightKind::kFixed, 3), 0.5, 1.0, std::nullopt,
             1.0, 0.1, rng, CalibrationConstants::kConservative);
  const std::string pub = format_estimate(e, false);
  EXPECT_EQ(pub.find("lambda"), std::string::npos);
  EXPECT_NE(pub.find("mechanism = dp-lsw\n"), std::string::npos);
  EXPECT_NE(pub.find("constants = conservative\n"), std::string::npos);
}

}  // namespace
}  // namespace dpeval
