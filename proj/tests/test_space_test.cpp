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

#include "fairperc/test_space.hpp"

#include <set>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace fairperc {
namespace {

TestSpaceConfig config_with_errors(std::size_t lo, std::size_t hi) {
  TestSpaceConfig c;
  c.min_errors = lo;
  c.max_errors = hi;
  return c;
}

TEST(Enumerate, SingleErrorGives45Pairs) {
  const auto space = enumerate_tests(config_with_errors(1, 1));
  EXPECT_EQ(space.size(), 45u);
  EXPECT_EQ(space.size(), oracle::count_equal_accuracy_pairs(oracle::to_ints(TestSpaceConfig::default_truth()), 1, 1));
}

TEST(Enumerate, PerfectPredictorsOnlyIsAConfigError) {
  const auto cfg = config_with_errors(0, 0);
  EXPECT_EQ(count_admissible(cfg), 0u);
  try {
    enumerate_tests(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("0 admissible tests"), std::string::npos);
  }
}

TEST(Enumerate, DefaultConfigMatchesBruteForceCount) {
  const auto space = enumerate_tests(TestSpaceConfig{});
  EXPECT_EQ(space.size(), 8175u);
  EXPECT_EQ(space.size(), oracle::count_equal_accuracy_pairs(oracle::to_ints(TestSpaceConfig::default_truth()), 1, 3));
}

TEST(Enumerate, FullScanInvariants) {
  const auto space = enumerate_tests(TestSpaceConfig{});
  std::set<std::pair<std::string, std::string>> canonical;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& t = space.tests[i];
    ASSERT_EQ(t.id, static_cast<TestId>(i));
    EXPECT_EQ(overall_accuracy(t.truth, t.pred_a1), overall_accuracy(t.truth, t.pred_a2));
    EXPECT_LT(t.pred_a1, t.pred_a2);
    const auto a = t.pred_a1.to_string(), b = t.pred_a2.to_string();
    const std::pair<std::string, std::string> key = std::minmax(a, b);
    EXPECT_TRUE(canonical.insert(key).second) << "duplicate pair at test " << i;
    if (i > 0) {
      const auto& p = space.tests[i - 1];
      EXPECT_LT(std::tie(p.truth, p.pred_a1, p.pred_a2), std::tie(t.truth, t.pred_a1, t.pred_a2));
    }
  }
}

TEST(Enumerate, DeterministicExport) {
  std::ostringstream a, b;
  write_tests(a, enumerate_tests(TestSpaceConfig{}));
  write_tests(b, enumerate_tests(TestSpaceConfig{}));
  EXPECT_EQ(a.str(), b.str());
  // Lexicographically smallest candidate flips ids 0, 1, 3 (three errors);
  // the next three-error vector flips ids 0, 1, 6.
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "0 1101001010 0000001010 0001000010");
}

TEST(Enumerate, MaxTestsCapsThePrefix) {
  auto cfg = TestSpaceConfig{};
  cfg.max_tests = 200;
  const auto capped = enumerate_tests(cfg);
  const auto full = enumerate_tests(TestSpaceConfig{});
  ASSERT_EQ(capped.size(), 200u);
  for (std::size_t i = 0; i < capped.size(); ++i) EXPECT_EQ(capped.tests[i], full.tests[i]);
}

TEST(Enumerate, TruthEnumerationMultipliesPerTruth) {
  TestSpaceConfig cfg = config_with_errors(1, 1);
  cfg.truth_policy = EnumerateTruth{5, 5};
  EXPECT_EQ(count_admissible(cfg), 252u * 45u);
}

TEST(Enumerate, InvalidConfigs) {
  EXPECT_THROW(enumerate_tests(config_with_errors(3, 1)), ConfigError);
  EXPECT_THROW(enumerate_tests(config_with_errors(1, 11)), ConfigError);
  TestSpaceConfig short_truth;
  short_truth.truth_policy = FixedTruth{LabelVector::from_string("101")};
  EXPECT_THROW(enumerate_tests(short_truth), ConfigError);
}

TEST(TextFormat, RoundTripsAndValidates) {
  const auto space = enumerate_tests(config_with_errors(1, 2));
  std::stringstream io;
  write_tests(io, space);
  const auto back = read_tests(io, Roster::default_roster());
  EXPECT_EQ(back.tests, space.tests);

  std::istringstream unequal("0 1101001010 0101001010 0011001010\n");
  EXPECT_THROW(read_tests(unequal, Roster::default_roster()), InputError);
  std::istringstream reversed("0 1101001010 1001001010 0101001010\n");
  EXPECT_THROW(read_tests(reversed, Roster::default_roster()), InputError);
  std::istringstream gap("1 1101001010 0101001010 1001001010\n");
  EXPECT_THROW(read_tests(gap, Roster::default_roster()), InputError);
  std::istringstream garbage("zero one two\n");
  EXPECT_THROW(read_tests(garbage, Roster::default_roster()), InputError);
}

TEST(Discriminativeness, SymmetricConfusionCountsGiveEqualEntropy) {
  const Roster roster = Roster::default_roster();
  const auto grouping = Grouping::of(GroupDimension::intersection, roster);
  // Both flip one positive to negative inside the Caucasian female cell
  // (ids 0 and 1), so every per-group confusion count matches.
  fairperc::Test t{0, TestSpaceConfig::default_truth(), LabelVector::from_string("0101001010"),
         LabelVector::from_string("1001001010")};
  for (const auto& p : discriminativeness(t, kAllNotions, grouping, roster)) EXPECT_EQ(p.a1, p.a2) << to_string(p.notion);
}

TEST(Discriminativeness, ConcentratedErrorsAreMoreUnequalUnderErrorParity) {
  const Roster roster = Roster::default_roster();
  const auto grouping = Grouping::of(GroupDimension::intersection, roster);
  const auto truth = TestSpaceConfig::default_truth();  // 1101001010
  // A1 errs on both African-American women (ids 6, 7); A2 errs once among
  // Caucasian women (id 0) and once among Caucasian men (id 3).
  fairperc::Test t{0, truth, LabelVector::from_string("1101000110"), LabelVector::from_string("0100001010")};
  const FairnessNotion ep[] = {FairnessNotion::EP};
  const auto pairs = discriminativeness(t, ep, grouping, roster);
  // Group order CF, AF, CM, AM: EP benefits (0,1,0,0) -> 1.5 and
  // (1/3,0,1/3,0) -> 0.5 by hand.
  EXPECT_NEAR(pairs[0].a1, 1.5, 1e-12);
  EXPECT_NEAR(pairs[0].a2, 0.5, 1e-12);
  EXPECT_GT(pairs[0].a1, pairs[0].a2);
}

TEST(Discriminativeness, AllEntropiesNonNegative) {
  const auto space = enumerate_tests(TestSpaceConfig{});
  const auto grouping = Grouping::of(GroupDimension::intersection, space.config.roster);
  for (std::size_t i = 0; i < space.size(); i += 7)
    for (const auto& p : discriminativeness(space.tests[i], kAllNotions, grouping, space.config.roster)) {
      EXPECT_GE(p.a1, 0.0);
      EXPECT_GE(p.a2, 0.0);
    }
}

}  // namespace
}  // namespace fairperc
