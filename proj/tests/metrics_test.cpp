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

#include "fairperc/metrics.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace fairperc {
namespace {

TEST(Benefit, DemographicParityWithNoPositivePredictions) {
  const Roster roster = Roster::default_roster();
  const auto truth = LabelVector::from_string("1101001010");
  const auto none = LabelVector::from_string("0000000000");
  std::vector<int> everyone(roster.size());
  for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = static_cast<int>(i);
  EXPECT_EQ(group_benefit(FairnessNotion::DP, truth, none, everyone), 0.0);
  for (double b : compute_benefit(FairnessNotion::DP, truth, none, Grouping::of(GroupDimension::intersection, roster), roster).values)
    EXPECT_EQ(b, 0.0);
}

TEST(Benefit, DemographicParityHalfPredictedPositive) {
  const auto pred = LabelVector::from_string("1100");
  EXPECT_EQ(group_benefit(FairnessNotion::DP, LabelVector::from_string("0000"), pred, std::vector<int>{0, 1, 2, 3}), 0.5);
}

TEST(Benefit, FalseDiscoveryAndFalseNegativeCounts) {
  const auto truth = LabelVector::from_string("0101");
  const auto pred = LabelVector::from_string("1100");
  const std::vector<int> g{0, 1, 2, 3};
  EXPECT_EQ(group_benefit(FairnessNotion::FDP, truth, pred, g), 0.5);
  EXPECT_EQ(group_benefit(FairnessNotion::FNP, truth, pred, g), 0.5);
  // FPP: 1 false positive over 2 true negatives; FOP: 1 false negative over 2 predicted negatives.
  EXPECT_EQ(group_benefit(FairnessNotion::FPP, truth, pred, g), 0.5);
  EXPECT_EQ(group_benefit(FairnessNotion::FOP, truth, pred, g), 0.5);
  EXPECT_EQ(group_benefit(FairnessNotion::EP, truth, pred, g), 0.5);
}

TEST(Benefit, ZeroDenominatorsYieldZero) {
  const std::vector<int> g{0, 1};
  // No predicted positives, no true positives.
  const auto zeros = LabelVector::from_string("00");
  EXPECT_EQ(group_benefit(FairnessNotion::FDP, zeros, zeros, g), 0.0);
  EXPECT_EQ(group_benefit(FairnessNotion::FNP, zeros, zeros, g), 0.0);
  const auto ones = LabelVector::from_string("11");
  EXPECT_EQ(group_benefit(FairnessNotion::FPP, ones, ones, g), 0.0);
  EXPECT_EQ(group_benefit(FairnessNotion::FOP, ones, ones, g), 0.0);
}

TEST(Benefit, LengthMismatchIsInputError) {
  const Roster roster = Roster::default_roster();
  const auto g = Grouping::of(GroupDimension::gender, roster);
  EXPECT_THROW(compute_benefit(FairnessNotion::DP, LabelVector::from_string("110"), LabelVector::from_string("110"), g, roster),
               InputError);
  EXPECT_THROW(compute_benefit(FairnessNotion::DP, LabelVector::from_string("1101001010"), LabelVector::from_string("11"), g, roster),
               InputError);
}

TEST(Benefit, AgreesWithCountingOracleOnRandomTests) {
  const Roster roster = Roster::default_roster();
  std::mt19937_64 rng(11);
  for (auto dim : {GroupDimension::gender, GroupDimension::race, GroupDimension::intersection}) {
    const auto grouping = Grouping::of(dim, roster);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto y = oracle::random_bits(rng, roster.size());
      const auto yhat = oracle::random_bits(rng, roster.size());
      for (auto n : kAllNotions) {
        const auto b = compute_benefit(n, oracle::to_labels(y), oracle::to_labels(yhat), grouping, roster);
        ASSERT_EQ(b.values.size(), grouping.size());
        for (std::size_t g = 0; g < grouping.size(); ++g) {
          EXPECT_EQ(b.values[g], oracle::benefit(n, y, yhat, grouping.groups[g]));
          EXPECT_GE(b.values[g], 0.0);
          EXPECT_LE(b.values[g], 1.0);
        }
      }
    }
  }
}

TEST(GeneralizedEntropy, EqualBenefitsGiveZero) {
  const std::vector<double> b{0.5, 0.5, 0.5, 0.5};
  EXPECT_EQ(generalized_entropy(b), 0.0);
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  EXPECT_EQ(generalized_entropy(zeros), 0.0);
}

TEST(GeneralizedEntropy, HandEvaluatedValues) {
  EXPECT_NEAR(generalized_entropy(std::vector<double>{1.0, 0.0}), 0.5, 1e-15);
  EXPECT_NEAR(generalized_entropy(std::vector<double>{0.2, 0.4}), 0.05555555555555556, 1e-9);
}

TEST(GeneralizedEntropy, EmptyIsInputError) {
  EXPECT_THROW(generalized_entropy(std::vector<double>{}), InputError);
}

TEST(GeneralizedEntropy, ZeroExactlyWhenAllEqual) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> b(1 + trial % 6);
    for (auto& v : b) v = u(rng);
    if (trial % 5 == 0) std::fill(b.begin(), b.end(), b[0]);
    const bool equal = std::adjacent_find(b.begin(), b.end(), std::not_equal_to<>()) == b.end();
    const double e = generalized_entropy(b);
    EXPECT_EQ(e == 0.0, equal);
    EXPECT_GE(e, 0.0);
    EXPECT_NEAR(e, oracle::generalized_entropy(b), 1e-12);
  }
}

TEST(GeneralizedEntropy, ScaleAndPermutationInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> b(4);
    for (auto& v : b) v = u(rng);
    const double e = generalized_entropy(b);
    const double c = 0.1 + 3.0 * u(rng);
    std::vector<double> scaled;
    for (double v : b) scaled.push_back(c * v);
    EXPECT_NEAR(generalized_entropy(scaled), e, 1e-12 * std::max(1.0, e));
    std::shuffle(b.begin(), b.end(), rng);
    EXPECT_NEAR(generalized_entropy(b), e, 1e-12 * std::max(1.0, e));
  }
}

TEST(Accuracy, IdentityComplementAndCount) {
  const auto t = LabelVector::from_string("1101001010");
  EXPECT_EQ(overall_accuracy(t, t), 1.0);
  EXPECT_EQ(overall_accuracy(t, LabelVector::from_string("0010110101")), 0.0);
  EXPECT_DOUBLE_EQ(overall_accuracy(t, LabelVector::from_string("0011001010")), 0.7);
  EXPECT_THROW(overall_accuracy(t, LabelVector::from_string("1")), InputError);
}

TEST(Roster, DefaultRosterComposition) {
  const auto r = Roster::default_roster();
  ASSERT_EQ(r.size(), 10u);
  const auto g = Grouping::of(GroupDimension::intersection, r);
  ASSERT_EQ(g.size(), 4u);
  std::vector<std::size_t> sizes;
  for (const auto& grp : g.groups) sizes.push_back(grp.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 3, 2}));
  EXPECT_EQ(g.labels[0], "caucasian_female");
}

TEST(Roster, RejectsWrongSizeAndEmptyCells) {
  std::vector<DecisionSubject> few{{0, Gender::female, Race::caucasian}};
  EXPECT_THROW(Roster{few}, InputError);
  std::vector<DecisionSubject> no_aa;
  for (int i = 0; i < 10; ++i) no_aa.push_back({i, i % 2 ? Gender::male : Gender::female, Race::caucasian});
  EXPECT_THROW(Roster{no_aa}, InputError);
  auto shuffled = Roster::default_roster().subjects();
  std::vector<DecisionSubject> bad_ids(shuffled.begin(), shuffled.end());
  std::swap(bad_ids[0].id, bad_ids[1].id);
  EXPECT_THROW(Roster{bad_ids}, InputError);
}

TEST(Grouping, PartitionsTheRoster) {
  const auto r = Roster::default_roster();
  for (auto dim : {GroupDimension::gender, GroupDimension::race, GroupDimension::intersection}) {
    const auto g = Grouping::of(dim, r);
    std::vector<int> all;
    for (const auto& grp : g.groups) {
      EXPECT_FALSE(grp.empty());
      all.insert(all.end(), grp.begin(), grp.end());
    }
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  }
}

TEST(Notion, ParsesNamesAndTableAlias) {
  for (auto n : kAllNotions) EXPECT_EQ(parse_notion(to_string(n)), n);
  EXPECT_EQ(parse_notion("FDR"), FairnessNotion::FDP);
  EXPECT_THROW(parse_notion("XYZ"), InputError);
}

TEST(Labels, RejectsNonBinary) {
  EXPECT_THROW(LabelVector::from_string("10a"), InputError);
  EXPECT_THROW(LabelVector(std::vector<std::uint8_t>{2}), InputError);
}

}  // namespace
}  // namespace fairperc
