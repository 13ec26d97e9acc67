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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpeval {

FirstVisitReturns first_visit_returns(const Trajectory& trajectory,
                                      double gamma) {
  const std::size_t length = trajectory.size();
  // Discounted return-to-go, accumulated backwards.
  std::vector<double> to_go(length + 1, 0.0);
  for (std::size_t t = length; t-- > 0;) {
    to_go[t] = trajectory.steps[t].reward + gamma * to_go[t + 1];
  }
  FirstVisitReturns returns;
  returns.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    returns.push_back({trajectory.steps[t].state, to_go[t]});
  }
  // Stable sort keeps the earliest occurrence first within each state.
  std::stable_sort(returns.begin(), returns.end(),
                   [](const StateReturn& a, const StateReturn& b) {
                     return a.state < b.state;
                   });
  returns.erase(std::unique(returns.begin(), returns.end(),
                            [](const StateReturn& a, const StateReturn& b) {
                              return a.state == b.state;
                            }),
                returns.end());
  return returns;
}

DatasetSummary aggregate_returns(std::vector<FirstVisitReturns> returns,
                                 Eigen::Index n_states) {
  if (returns.empty()) {
    throw std::invalid_argument("aggregate: dataset is empty");
  }
  DatasetSummary summary;
  summary.signature.m = static_cast<std::int64_t>(returns.size());
  summary.signature.counts = CountVector::Zero(n_states);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(n_states);
  for (const FirstVisitReturns& visits : returns) {
    for (const StateReturn& visit : visits) {
      if (visit.state < 0 || visit.state >= n_states) {
        throw std::invalid_argument("aggregate: state " +
                                    std::to_string(visit.state) +
                                    " outside the feature state space");
      }
      sums[visit.state] += visit.value;
      ++summary.signature.counts[visit.state];
    }
  }
  summary.f_x = Eigen::VectorXd::Zero(n_states);
  for (Eigen::Index s = 0; s < n_states; ++s) {
    if (summary.signature.counts[s] > 0) {
      summary.f_x[s] =
          sums[s] / static_cast<double>(summary.signature.counts[s]);
    }
  }
  summary.per_trajectory = std::move(returns);
  return summary;
}

DatasetSummary aggregate(const TrajectoryDataset& dataset, double gamma,
                         Eigen::Index n_states) {
  std::vector<FirstVisitReturns> returns;
  returns.reserve(dataset.size());
  for (const Trajectory& trajectory : dataset.trajectories) {
    returns.push_back(first_visit_returns(trajectory, gamma));
  }
  return aggregate_returns(std::move(returns), n_states);
}

TrajectoryDataset neighbor_replace_last(TrajectoryDataset dataset,
                                        Trajectory replacement) {
  if (dataset.empty()) {
    throw std::invalid_argument("neighbor_replace_last: dataset is empty");
  }
  dataset.trajectories.back() = std::move(replacement);
  return dataset;
}

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("trajectory file line " + std::to_string(line) +
                           ": " + what);
}

Step parse_step(const std::string& token, std::size_t line) {
  const auto colon = token.find(':');
  if (colon == std::string::npos) parse_error(line, "expected state:reward");
  Step step;
  const char* begin = token.data();
  const char* mid = begin + colon;
  auto [ptr, ec] = std::from_chars(begin, mid, step.state);
  if (ec != std::errc() || ptr != mid || step.state < 0) {
    parse_error(line, "bad state in '" + token + "'");
  }
  const char* end = begin + token.size();
  auto [rptr, rec] = std::from_chars(mid + 1, end, step.reward);
  if (rec != std::errc() || rptr != end) {
    parse_error(line, "bad reward in '" + token + "'");
  }
  return step;
}

}  // namespace

TrajectoryDataset read_trajectories(std::istream& in) {
  TrajectoryDataset dataset;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream tokens(line);
    Trajectory trajectory;
    for (std::string token; tokens >> token;) {
      trajectory.steps.push_back(parse_step(token, line_number));
    }
    if (!trajectory.empty()) {
      dataset.trajectories.push_back(std::move(trajectory));
    }
  }
  return dataset;
}

TrajectoryDataset read_trajectories_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file " + path);
  return read_trajectories(in);
}

void write_trajectories(std::ostream& out, const TrajectoryDataset& dataset) {
  char buffer[64];
  for (const Trajectory& trajectory : dataset.trajectories) {
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
      const Step& step = trajectory.steps[t];
      auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer),
                                     step.reward);
      (void)ec;
      out << (t == 0 ? "" : " ") << step.state << ':'
          << std::string_view(buffer, ptr - buffer);
    }
    out << '\n';
  }
}

}  // namespace dpeval
