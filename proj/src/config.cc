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

// Experiment configuration: validation and the key = value text format.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dpeval/experiments.hpp"

namespace dpeval {

double ExperimentConfig::lambda_for(std::int64_t m) const {
  const double md = static_cast<double>(m);
  switch (lambda_rule) {
    case LambdaRule::kConstant:
      return lambda_c;
    case LambdaRule::kSqrt:
      return lambda_c * std::sqrt(md);
    case LambdaRule::kLinear:
      return lambda_c * md;
  }
  return lambda_c;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("config: " + what);
  };
  if (n_states < 2) fail("n_states must be at least 2");
  if (!(stay_prob >= 0.0 && stay_prob < 1.0)) fail("stay_prob must be in [0, 1)");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must be in (0, 1)");
  if (!(r_max >= 1.0) || !std::isfinite(r_max)) {
    fail("r_max must be finite and at least the chain's unit reward");
  }
  if (f_max && !(*f_max >= 0.0 && *f_max <= r_max / (1.0 - gamma))) {
    fail("f_max must lie in [0, r_max / (1 - gamma)]");
  }
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta must be in (0, 1)");
  if (algorithms.empty()) fail("algorithms must not be empty");
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    for (std::size_t j = i + 1; j < algorithms.size(); ++j) {
      if (algorithms[i] == algorithms[j]) fail("algorithms listed twice");
    }
  }
  if (m_values.empty()) fail("m_values must not be empty");
  for (std::size_t i = 0; i < m_values.size(); ++i) {
    if (m_values[i] < 1) fail("m_values must be positive");
    if (i > 0 && m_values[i] <= m_values[i - 1]) {
      fail("m_values must be strictly increasing");
    }
  }
  if (!(lambda_c > 0.0) || !std::isfinite(lambda_c)) {
    fail("lambda_c must be positive");
  }
  if (rho_rule != "ones") fail("rho_rule must be 'ones'");
  if (aggregation < 1) fail("aggregation must be at least 1");
  if (runs < 1) fail("runs must be at least 1");
  if (start && (*start < 0 || *start >= n_states - 1)) {
    fail("start must be a transient state in [0, n_states - 2]");
  }
  if (output_dir.empty()) fail("output_dir must not be empty");
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T number(const std::string& text) {
  T value{};
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("bad number '" + text + "'");
  }
  return value;
}

bool boolean(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("bad boolean '" + text + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n_states", [](auto& c, auto& v) { c.n_states = number<int>(v); }},
      {"stay_prob", [](auto& c, auto& v) { c.stay_prob = number<double>(v); }},
      {"gamma", [](auto& c, auto& v) { c.gamma = number<double>(v); }},
      {"r_max", [](auto& c, auto& v) { c.r_max = number<double>(v); }},
      {"f_max",
       [](auto& c, auto& v) {
         if (v == "default" || v == "none") {
           c.f_max.reset();
         } else {
           c.f_max = number<double>(v);
         }
       }},
      {"epsilon", [](auto& c, auto& v) { c.epsilon = number<double>(v); }},
      {"delta", [](auto& c, auto& v) { c.delta = number<double>(v); }},
      {"algorithms",
       [](auto& c, auto& v) {
         c.algorithms.clear();
         for (const std::string& name : split_list(v)) {
           const auto a = parse_algorithm(name);
           if (!a) throw std::invalid_argument("unknown algorithm '" + name + "'");
           c.algorithms.push_back(*a);
         }
       }},
      {"m_values",
       [](auto& c, auto& v) {
         c.m_values.clear();
         for (const std::string& item : split_list(v)) {
           c.m_values.push_back(number<std::int64_t>(item));
         }
       }},
      {"lambda_rule",
       [](auto& c, auto& v) {
         if (v == "constant") {
           c.lambda_rule = LambdaRule::kConstant;
         } else if (v == "sqrt") {
           c.lambda_rule = LambdaRule::kSqrt;
         } else if (v == "linear") {
           c.lambda_rule = LambdaRule::kLinear;
         } else {
           throw std::invalid_argument("lambda_rule must be constant, sqrt "
                                       "or linear");
         }
       }},
      {"lambda_c", [](auto& c, auto& v) { c.lambda_c = number<double>(v); }},
      {"w_rule",
       [](auto& c, auto& v) {
         if (v == "ones") {
           c.w_rule = WeightRule::kOnes;
         } else if (v == "true_visit") {
           c.w_rule = WeightRule::kTrueVisit;
         } else {
           throw std::invalid_argument("w_rule must be ones or true_visit");
         }
       }},
      {"rho_rule", [](auto& c, auto& v) { c.rho_rule = v; }},
      {"aggregation", [](auto& c, auto& v) { c.aggregation = number<int>(v); }},
      {"runs", [](auto& c, auto& v) { c.runs = number<int>(v); }},
      {"master_seed",
       [](auto& c, auto& v) { c.master_seed = number<std::uint64_t>(v); }},
      {"output_dir", [](auto& c, auto& v) { c.output_dir = v; }},
      {"start",
       [](auto& c, auto& v) {
         if (v == "uniform") {
           c.start.reset();
         } else {
           c.start = number<StateIndex>(v);
         }
       }},
      {"record_timing", [](auto& c, auto& v) { c.record_timing = boolean(v); }},
      {"write_gnuplot", [](auto& c, auto& v) { c.write_gnuplot = boolean(v); }},
      {"conservative_constants",
       [](auto& c, auto& v) {
         c.constants = boolean(v) ? CalibrationConstants::kConservative
                                  : CalibrationConstants::kMainText;
       }},
  };
  return table;
}

std::string real(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", x);
  return buffer;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t number_of_line = 0;
  while (std::getline(in, line)) {
    ++number_of_line;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(number_of_line);
    if (eq == std::string::npos) {
      throw std::invalid_argument(where + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
    try {
      it->second(config, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + " (" + key + "): " + e.what());
    }
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
  out << "n_states = " << config.n_states << '\n'
      << "stay_prob = " << real(config.stay_prob) << '\n'
      << "gamma = " << real(config.gamma) << '\n'
      << "r_max = " << real(config.r_max) << '\n'
      << "f_max = " << (config.f_max ? real(*config.f_max) : "default") << '\n'
      << "epsilon = " << real(config.epsilon) << '\n'
      << "delta = " << real(config.delta) << '\n'
      << "algorithms = ";
  for (std::size_t i = 0; i < config.algorithms.size(); ++i) {
    out << (i ? ", " : "") << algorithm_name(config.algorithms[i]);
  }
  out << "\nm_values = ";
  for (std::size_t i = 0; i < config.m_values.size(); ++i) {
    out << (i ? ", " : "") << config.m_values[i];
  }
  static const char* rules[] = {"constant", "sqrt", "linear"};
  out << "\nlambda_rule = " << rules[static_cast<int>(config.lambda_rule)]
      << '\n'
      << "lambda_c = " << real(config.lambda_c) << '\n'
      << "w_rule = "
      << (config.w_rule == WeightRule::kOnes ? "ones" : "true_visit") << '\n'
      << "rho_rule = " << config.rho_rule << '\n'
      << "aggregation = " << config.aggregation << '\n'
      << "runs = " << config.runs << '\n'
      << "master_seed = " << config.master_seed << '\n'
      << "output_dir = " << config.output_dir << '\n'
      << "start = "
      << (config.start ? std::to_string(*config.start) : "uniform") << '\n'
      << "record_timing = " << (config.record_timing ? "true" : "false") << '\n'
      << "write_gnuplot = " << (config.write_gnuplot ? "true" : "false") << '\n'
      << "conservative_constants = "
      << (config.constants == CalibrationConstants::kConservative ? "true"
                                                                  : "false")
      << '\n';
}

}  // namespace dpeval
