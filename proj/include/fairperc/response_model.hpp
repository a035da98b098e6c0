// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Noisy softmax model of how a responder committed to one fairness notion
// picks the more discriminatory of two algorithms.

#ifndef FAIRPERC_RESPONSE_MODEL_HPP
#define FAIRPERC_RESPONSE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "fairperc/errors.hpp"
#include "fairperc/metrics.hpp"
#include "fairperc/random.hpp"
#include "fairperc/test_space.hpp"

namespace fairperc {

// Which algorithm the responder marks as more discriminatory.
enum class Choice : std::uint8_t { A1, A2 };

inline std::string_view to_string(Choice c) { return c == Choice::A1 ? "A1" : "A2"; }

inline Choice parse_choice(std::string_view s) {
  if (s == "A1") return Choice::A1;
  if (s == "A2") return Choice::A2;
  throw InputError("unknown choice: " + std::string(s));
}

inline Choice other(Choice c) { return c == Choice::A1 ? Choice::A2 : Choice::A1; }

struct ResponseModelConfig {
  double temperature = 1.0;
  GroupDimension grouping = GroupDimension::intersection;

  void validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw ConfigError("softmax temperature must be positive and finite");
  }
};

// P(A1) = exp(e1/T) / (exp(e1/T) + exp(e2/T)), shifted by the larger exponent.
inline double softmax_first(double e1, double e2, double temperature) {
  const double x1 = e1 / temperature;
  const double x2 = e2 / temperature;
  const double m = std::max(x1, x2);
  const double w1 = std::exp(x1 - m);
  const double w2 = std::exp(x2 - m);
  return w1 / (w1 + w2);
}

inline double choice_probability(double p_a1, Choice choice) { return choice == Choice::A1 ? p_a1 : 1.0 - p_a1; }

inline double choice_likelihood(const Test& test, FairnessNotion notion, Choice choice,
                                const ResponseModelConfig& config, const Roster& roster) {
  config.validate();
  const auto grouping = Grouping::of(config.grouping, roster);
  const auto e1 = generalized_entropy(compute_benefit(notion, test.truth, test.pred_a1, grouping, roster));
  const auto e2 = generalized_entropy(compute_benefit(notion, test.truth, test.pred_a2, grouping, roster));
  return choice == Choice::A1 ? softmax_first(e1, e2, config.temperature) : softmax_first(e2, e1, config.temperature);
}

inline Choice sample_choice(double p_a1, Rng& rng) {
  return std::bernoulli_distribution(p_a1)(rng) ? Choice::A1 : Choice::A2;
}

inline Choice simulate_choice(const Test& test, FairnessNotion notion, const ResponseModelConfig& config,
                              const Roster& roster, Rng& rng) {
  return sample_choice(choice_likelihood(test, notion, Choice::A1, config, roster), rng);
}

// Uniform coin flip; the test contents are deliberately unused.
inline Choice simulate_random_responder(const Test& /*test*/, Rng& rng) { return sample_choice(0.5, rng); }

}  // namespace fairperc

#endif  // FAIRPERC_RESPONSE_MODEL_HPP
