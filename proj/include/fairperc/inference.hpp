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

// Posterior over fairness notions, greedy test selection by the expected
// gain in posterior mass concentration, and responder classification.

#ifndef FAIRPERC_INFERENCE_HPP
#define FAIRPERC_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairperc/errors.hpp"
#include "fairperc/metrics.hpp"
#include "fairperc/random.hpp"
#include "fairperc/response_model.hpp"
#include "fairperc/test_space.hpp"

namespace fairperc {

struct HypothesisSet {
  std::vector<FairnessNotion> notions;

  // DP, EP, FDP, FNP.
  static HypothesisSet default_set() {
    return {{FairnessNotion::DP, FairnessNotion::EP, FairnessNotion::FDP, FairnessNotion::FNP}};
  }
  // Demographic parity excluded; false positive and false omission parity added.
  static HypothesisSet appendix_set() {
    return {{FairnessNotion::EP, FairnessNotion::FPP, FairnessNotion::FNP, FairnessNotion::FDP,
             FairnessNotion::FOP}};
  }

  std::size_t size() const { return notions.size(); }

  std::optional<std::size_t> index_of(FairnessNotion n) const {
    auto it = std::ranges::find(notions, n);
    if (it == notions.end()) return std::nullopt;
    return static_cast<std::size_t>(it - notions.begin());
  }

  void validate() const {
    if (notions.size() < 2) throw ConfigError("hypothesis set needs at least two notions");
    for (std::size_t i = 0; i < notions.size(); ++i)
      for (std::size_t j = i + 1; j < notions.size(); ++j)
        if (notions[i] == notions[j]) throw ConfigError("duplicate notion in hypothesis set");
  }

  friend bool operator==(const HypothesisSet&, const HypothesisSet&) = default;
};

struct Posterior {
  std::vector<double> probabilities;

  static Posterior uniform(std::size_t n) { return {std::vector<double>(n, 1.0 / static_cast<double>(n))}; }

  std::size_t size() const { return probabilities.size(); }
  double operator[](std::size_t i) const { return probabilities[i]; }

  // Lowest index wins ties.
  std::size_t argmax() const {
    return static_cast<std::size_t>(std::ranges::max_element(probabilities) - probabilities.begin());
  }
  double max() const { return probabilities[argmax()]; }

  double sum_of_squares() const {
    double s = 0.0;
    for (double p : probabilities) s += p * p;
    return s;
  }

  void validate() const {
    if (probabilities.empty()) throw InputError("empty posterior");
    double sum = 0.0;
    for (double p : probabilities) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("posterior entries must be finite and >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("posterior does not sum to 1");
  }

  friend bool operator==(const Posterior&, const Posterior&) = default;
};

struct SelectionPolicy {
  enum class Kind : std::uint8_t { adaptive, random } kind = Kind::adaptive;
  std::uint64_t seed = 0;

  static SelectionPolicy adaptive() { return {}; }
  static SelectionPolicy random(std::uint64_t seed) { return {Kind::random, seed}; }
};

struct FirstTestPolicy {
  enum class Kind : std::uint8_t { argmax, random } kind = Kind::argmax;
  std::uint64_t seed = 0;

  static FirstTestPolicy argmax() { return {}; }
  static FirstTestPolicy random(std::uint64_t seed) { return {Kind::random, seed}; }
};

struct EngineConfig {
  HypothesisSet hypotheses = HypothesisSet::default_set();
  int max_tests = 20;
  double classification_threshold = 0.8;
  ResponseModelConfig response;
  SelectionPolicy selection;
  FirstTestPolicy first_test;
  // Disabled by default: every session runs the full max_tests.
  std::optional<double> early_stop_threshold;

  void validate() const {
    hypotheses.validate();
    response.validate();
    if (max_tests < 1) throw ConfigError("max_tests must be >= 1");
    if (!(classification_threshold > 0.5 && classification_threshold < 1.0))
      throw ConfigError("classification threshold must lie in (0.5, 1)");
    if (early_stop_threshold && !(*early_stop_threshold > 0.0 && *early_stop_threshold < 1.0))
      throw ConfigError("early stop threshold must lie in (0, 1)");
  }
};

struct Classification {
  // Empty when no notion clears the threshold.
  std::optional<FairnessNotion> notion;
  double probability = 0.0;
  Posterior posterior;

  bool matched() const { return notion.has_value(); }
};

// P(A1 | h) for every test and every notion, computed once per test space
// and shared read-only across sessions.
class LikelihoodTable {
 public:
  LikelihoodTable(std::shared_ptr<const TestSpace> space, ResponseModelConfig response)
      : space_(std::move(space)), response_(response) {
    response_.validate();
    const auto& roster = space_->config.roster;
    const auto grouping = Grouping::of(response_.grouping, roster);
    entropy_.resize(space_->size() * kAllNotions.size());
    p_a1_.resize(space_->size() * kAllNotions.size());
    for (const auto& t : space_->tests) {
      const auto pairs = discriminativeness(t, kAllNotions, grouping, roster);
      for (std::size_t n = 0; n < pairs.size(); ++n) {
        const auto k = slot(t.id, n);
        entropy_[k] = {pairs[n].a1, pairs[n].a2};
        p_a1_[k] = softmax_first(pairs[n].a1, pairs[n].a2, response_.temperature);
      }
    }
  }

  const TestSpace& space() const { return *space_; }
  std::shared_ptr<const TestSpace> space_ptr() const { return space_; }
  const ResponseModelConfig& response() const { return response_; }
  std::size_t size() const { return space_->size(); }

  double p_a1(TestId t, FairnessNotion n) const { return p_a1_[slot(t, static_cast<std::size_t>(n))]; }
  std::pair<double, double> entropies(TestId t, FairnessNotion n) const {
    return entropy_[slot(t, static_cast<std::size_t>(n))];
  }

 private:
  static std::size_t slot(TestId t, std::size_t n) { return static_cast<std::size_t>(t) * kAllNotions.size() + n; }

  std::shared_ptr<const TestSpace> space_;
  ResponseModelConfig response_;
  std::vector<std::pair<double, double>> entropy_;
  std::vector<double> p_a1_;
};

// posterior_i * likelihood_i, renormalized.
inline Posterior bayes_update(const Posterior& prior, std::span<const double> likelihoods) {
  if (likelihoods.size() != prior.size()) throw InputError("likelihood count does not match posterior");
  Posterior out{std::vector<double>(prior.size())};
  double z = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    out.probabilities[i] = prior[i] * likelihoods[i];
    z += out.probabilities[i];
  }
  if (!(z > 0.0)) throw InvariantError("observation has zero probability under every hypothesis");
  for (auto& p : out.probabilities) p /= z;
  return out;
}

inline std::vector<double> observed_likelihoods(const LikelihoodTable& table, TestId test, Choice choice,
                                                const HypothesisSet& hypotheses) {
  std::vector<double> l;
  l.reserve(hypotheses.size());
  for (auto n : hypotheses.notions) l.push_back(choice_probability(table.p_a1(test, n), choice));
  return l;
}

inline Posterior bayes_update(const Posterior& prior, const Test& test, Choice choice, const EngineConfig& config,
                              const Roster& roster) {
  std::vector<double> l;
  for (auto n : config.hypotheses.notions) l.push_back(choice_likelihood(test, n, choice, config.response, roster));
  return bayes_update(prior, l);
}

// Expected posterior sum-of-squares after running the test, minus its
// current value. p_a1[i] is P(O = A1 | h_i).
inline double objective_delta(std::span<const double> p_a1, const Posterior& posterior) {
  if (p_a1.size() != posterior.size()) throw InputError("likelihood count does not match posterior");
  // Exactly zero when every hypothesis still carrying mass predicts the same outcome.
  std::optional<double> shared;
  bool informative = false;
  for (std::size_t i = 0; i < p_a1.size() && !informative; ++i) {
    if (posterior[i] == 0.0) continue;
    if (!shared) shared = p_a1[i];
    else informative = p_a1[i] != *shared;
  }
  if (!informative) return 0.0;
  double mass_a1 = 0.0, mass_a2 = 0.0, sq_a1 = 0.0, sq_a2 = 0.0, sq_now = 0.0;
  for (std::size_t i = 0; i < p_a1.size(); ++i) {
    const double j1 = posterior[i] * p_a1[i];
    const double j2 = posterior[i] * (1.0 - p_a1[i]);
    mass_a1 += j1;
    mass_a2 += j2;
    sq_a1 += j1 * j1;
    sq_a2 += j2 * j2;
    sq_now += posterior[i] * posterior[i];
  }
  // sum_o P(o) * sum_i P(h_i | o)^2 = sum_o sum_i (P(h_i) P(o | h_i))^2 / P(o)
  double expected = 0.0;
  if (mass_a1 > 0.0) expected += sq_a1 / mass_a1;
  if (mass_a2 > 0.0) expected += sq_a2 / mass_a2;
  return expected - sq_now;
}

inline double objective_delta(const LikelihoodTable& table, TestId test, const Posterior& posterior,
                              const HypothesisSet& hypotheses) {
  double p[kAllNotions.size()];
  for (std::size_t i = 0; i < hypotheses.size(); ++i) p[i] = table.p_a1(test, hypotheses.notions[i]);
  return objective_delta(std::span<const double>(p, hypotheses.size()), posterior);
}

inline double objective_delta(const Test& test, const Posterior& posterior, const EngineConfig& config,
                              const Roster& roster) {
  std::vector<double> p;
  for (auto n : config.hypotheses.notions)
    p.push_back(choice_likelihood(test, n, Choice::A1, config.response, roster));
  return objective_delta(p, posterior);
}

namespace detail {

inline std::optional<TestId> random_remaining(const std::vector<bool>& administered, std::size_t remaining,
                                              Rng rng) {
  if (remaining == 0) return std::nullopt;
  auto k = std::uniform_int_distribution<std::size_t>(0, remaining - 1)(rng);
  for (std::size_t t = 0; t < administered.size(); ++t) {
    if (administered[t]) continue;
    if (k-- == 0) return static_cast<TestId>(t);
  }
  return std::nullopt;
}

}  // namespace detail

// Argmax of the objective over unadministered tests, lowest id on ties; a
// seeded uniform draw under the random policy. `step` is the 0-based index
// of the test being chosen, so random draws never depend on call history.
// Returns nullopt once every test has been administered.
inline constexpr double kTieTolerance = 1e-12;

inline std::optional<TestId> select_next_test(const LikelihoodTable& table, const std::vector<bool>& administered,
                                              const Posterior& posterior, const EngineConfig& config,
                                              std::size_t step) {
  if (administered.size() != table.size()) throw InputError("administered mask does not match test space");
  const auto remaining =
      static_cast<std::size_t>(std::ranges::count(administered, false));
  if (remaining == 0) return std::nullopt;
  if (step == 0 && config.first_test.kind == FirstTestPolicy::Kind::random)
    return detail::random_remaining(administered, remaining, make_rng(config.first_test.seed, 0));
  if (config.selection.kind == SelectionPolicy::Kind::random)
    return detail::random_remaining(administered, remaining, make_rng(config.selection.seed, step));

  // Tests whose exact objectives are equal can differ in the last bits, so
  // everything within kTieTolerance of the maximum counts as tied.
  std::vector<double> deltas(administered.size(), 0.0);
  double max_delta = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < administered.size(); ++t) {
    if (administered[t]) continue;
    deltas[t] = objective_delta(table, static_cast<TestId>(t), posterior, config.hypotheses);
    max_delta = std::max(max_delta, deltas[t]);
  }
  for (std::size_t t = 0; t < administered.size(); ++t)
    if (!administered[t] && deltas[t] >= max_delta - kTieTolerance) return static_cast<TestId>(t);
  return std::nullopt;
}

inline Classification classify(const Posterior& posterior, const EngineConfig& config) {
  Classification c;
  c.posterior = posterior;
  const auto i = posterior.argmax();
  c.probability = posterior[i];
  if (c.probability > config.classification_threshold) c.notion = config.hypotheses.notions.at(i);
  return c;
}

struct TraceStep {
  TestId test_id = 0;
  Choice choice = Choice::A1;
  Posterior posterior;  // after observing this choice
};

enum class SessionStatus : std::uint8_t { completed, exhausted, early_stopped, aborted };

inline std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::completed: return "completed";
    case SessionStatus::exhausted: return "exhausted";
    case SessionStatus::early_stopped: return "early_stopped";
    case SessionStatus::aborted: return "aborted";
  }
  return "?";
}

inline SessionStatus parse_session_status(std::string_view s) {
  for (auto v : {SessionStatus::completed, SessionStatus::exhausted, SessionStatus::early_stopped,
                 SessionStatus::aborted})
    if (to_string(v) == s) return v;
  throw InputError("unknown session status: " + std::string(s));
}

struct SessionTrace {
  HypothesisSet hypotheses;
  Posterior prior;
  std::vector<TraceStep> steps;
  SessionStatus status = SessionStatus::completed;
  Classification classification;
  std::string error;
};

// Sequential state of one responder's session. Movable, so a session can be
// handed between workers; not safe for concurrent use.
class Engine {
 public:
  Engine(std::shared_ptr<const LikelihoodTable> table, EngineConfig config)
      : table_(std::move(table)), config_(std::move(config)) {
    config_.validate();
    if (config_.response.grouping != table_->response().grouping ||
        config_.response.temperature != table_->response().temperature)
      throw ConfigError("engine response model differs from the likelihood table's");
    posterior_ = Posterior::uniform(config_.hypotheses.size());
    administered_.assign(table_->size(), false);
  }

  const EngineConfig& config() const { return config_; }
  const LikelihoodTable& table() const { return *table_; }
  const Posterior& posterior() const { return posterior_; }
  std::size_t steps() const { return history_.size(); }
  const std::vector<TraceStep>& history() const { return history_; }

  bool budget_spent() const { return history_.size() >= static_cast<std::size_t>(config_.max_tests); }
  bool early_stopped() const {
    return config_.early_stop_threshold && !history_.empty() && posterior_.max() > *config_.early_stop_threshold;
  }
  bool finished() const { return budget_spent() || early_stopped(); }

  std::optional<TestId> next_test() const {
    if (finished()) return std::nullopt;
    return select_next_test(*table_, administered_, posterior_, config_, history_.size());
  }

  void observe(TestId test, Choice choice) {
    if (test < 0 || static_cast<std::size_t>(test) >= administered_.size())
      throw InputError("test id outside the test space");
    if (administered_[static_cast<std::size_t>(test)])
      throw InputError("test " + std::to_string(test) + " already administered");
    if (finished()) throw InputError("session already finished");
    posterior_ = bayes_update(posterior_, observed_likelihoods(*table_, test, choice, config_.hypotheses));
    administered_[static_cast<std::size_t>(test)] = true;
    history_.push_back({test, choice, posterior_});
  }

  Classification classification() const { return classify(posterior_, config_); }

 private:
  std::shared_ptr<const LikelihoodTable> table_;
  EngineConfig config_;
  Posterior posterior_;
  std::vector<bool> administered_;
  std::vector<TraceStep> history_;
};

using Responder = std::function<Choice(const Test&)>;

// Select, ask, update until the budget is spent, the space is exhausted or
// (optionally) the posterior concentrates. A throwing responder aborts the
// session; the trace so far is kept.
inline SessionTrace run_session(std::shared_ptr<const LikelihoodTable> table, const EngineConfig& config,
                                const Responder& responder) {
  Engine engine(std::move(table), config);
  SessionTrace trace;
  trace.hypotheses = config.hypotheses;
  trace.prior = engine.posterior();
  trace.status = SessionStatus::completed;
  while (!engine.finished()) {
    const auto next = engine.next_test();
    if (!next) {
      trace.status = SessionStatus::exhausted;
      break;
    }
    Choice choice;
    try {
      choice = responder(engine.table().space()[*next]);
    } catch (const std::exception& e) {
      trace.status = SessionStatus::aborted;
      trace.error = e.what();
      break;
    }
    engine.observe(*next, choice);
  }
  if (trace.status == SessionStatus::completed && engine.early_stopped() && !engine.budget_spent())
    trace.status = SessionStatus::early_stopped;
  trace.steps = engine.history();
  trace.classification = engine.classification();
  return trace;
}

}  // namespace fairperc

#endif  // FAIRPERC_INFERENCE_HPP
