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

#include "fairperc/trace_log.hpp"

#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "fairperc/response_model.hpp"

namespace fairperc {
namespace {

std::shared_ptr<const LikelihoodTable> small_table() {
  TestSpaceConfig cfg;
  cfg.max_tests = 300;
  return std::make_shared<const LikelihoodTable>(std::make_shared<const TestSpace>(enumerate_tests(cfg)),
                                                 ResponseModelConfig{});
}

Clock counting_clock() {
  return [n = std::int64_t{1'700'000'000'000}]() mutable { return n++; };
}

SessionTrace sample_trace(std::uint64_t seed) {
  const auto table = small_table();
  Rng rng(seed);
  return run_session(table, EngineConfig{}, [&](const fairperc::Test& t) {
    return sample_choice(table->p_a1(t.id, FairnessNotion::EP), rng);
  });
}

TEST(TraceLog, RoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto trace = sample_trace(seed);
    std::stringstream ss;
    write_trace(ss, trace, "abc", counting_clock());
    const auto back = read_trace(ss, EngineConfig{});
    ASSERT_EQ(back.steps.size(), trace.steps.size());
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      EXPECT_EQ(back.steps[i].test_id, trace.steps[i].test_id);
      EXPECT_EQ(back.steps[i].choice, trace.steps[i].choice);
      EXPECT_EQ(back.steps[i].posterior, trace.steps[i].posterior);
    }
    EXPECT_EQ(back.prior, trace.prior);
    EXPECT_EQ(back.status, trace.status);
    EXPECT_EQ(back.classification.notion, trace.classification.notion);
    EXPECT_EQ(back.classification.probability, trace.classification.probability);
  }
}

TEST(TraceLog, FixedClockGivesIdenticalBytes) {
  const auto trace = sample_trace(42);
  std::ostringstream a, b;
  write_trace(a, trace, "s1", counting_clock());
  write_trace(b, sample_trace(42), "s1", counting_clock());
  EXPECT_EQ(a.str(), b.str());
}

TEST(TraceLog, EventShape) {
  const auto trace = sample_trace(1);
  std::stringstream ss;
  write_trace(ss, trace, "s1", counting_clock());
  std::string line;
  std::size_t lines = 0;
  std::int64_t last_ts = 0;
  while (std::getline(ss, line)) {
    const auto ev = Json::parse(line);
    EXPECT_EQ(ev.at("session"), "s1");
    EXPECT_GT(ev.at("ts").get<std::int64_t>(), last_ts);
    last_ts = ev.at("ts").get<std::int64_t>();
    ++lines;
  }
  EXPECT_EQ(lines, trace.steps.size() + 2);
}

TEST(TraceLog, AbortedTraceKeepsError) {
  SessionTrace t;
  t.hypotheses = HypothesisSet::default_set();
  t.prior = Posterior::uniform(4);
  t.status = SessionStatus::aborted;
  t.error = "gone";
  std::stringstream ss;
  write_trace(ss, t, "x", counting_clock());
  const auto back = read_trace(ss, EngineConfig{});
  EXPECT_EQ(back.status, SessionStatus::aborted);
  EXPECT_EQ(back.error, "gone");
  EXPECT_TRUE(back.steps.empty());
}

TEST(TraceLog, RejectsIncompleteOrUnknownInput) {
  std::stringstream missing_end;
  missing_end << make_event(1, "x", "session_start", {{"hypotheses", {"DP", "EP"}}, {"prior", {0.5, 0.5}}}).dump()
              << '\n';
  EXPECT_THROW(read_trace(missing_end, EngineConfig{}), InputError);
  std::stringstream unknown;
  unknown << make_event(1, "x", "bogus", Json::object()).dump() << '\n';
  EXPECT_THROW(read_trace(unknown, EngineConfig{}), InputError);
}

TEST(TraceLog, EngineConfigRoundTrip) {
  EngineConfig c;
  c.hypotheses = HypothesisSet::appendix_set();
  c.max_tests = 7;
  c.classification_threshold = 0.9;
  c.selection = SelectionPolicy::random(11);
  c.first_test = FirstTestPolicy::random(12);
  c.early_stop_threshold = 0.95;
  const auto back = engine_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.hypotheses.notions, c.hypotheses.notions);
  EXPECT_EQ(back.max_tests, 7);
}

}  // namespace
}  // namespace fairperc
