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

// Group benefit metrics for the six group-fairness notions and the
// Generalized Entropy inequality index (alpha = 2) over benefit vectors.

#ifndef FAIRPERC_METRICS_HPP
#define FAIRPERC_METRICS_HPP

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairperc/errors.hpp"

namespace fairperc {

enum class Gender : std::uint8_t { female, male };
enum class Race : std::uint8_t { caucasian, african_american };

inline constexpr std::size_t kRosterSize = 10;

struct DecisionSubject {
  int id = 0;
  Gender gender = Gender::female;
  Race race = Race::caucasian;

  friend bool operator==(const DecisionSubject&, const DecisionSubject&) = default;
};

inline std::string_view to_string(Gender g) { return g == Gender::female ? "female" : "male"; }
inline std::string_view to_string(Race r) {
  return r == Race::caucasian ? "caucasian" : "african_american";
}

inline Gender parse_gender(std::string_view s) {
  if (s == "female") return Gender::female;
  if (s == "male") return Gender::male;
  throw InputError("unknown gender: " + std::string(s));
}

inline Race parse_race(std::string_view s) {
  if (s == "caucasian") return Race::caucasian;
  if (s == "african_american") return Race::african_american;
  throw InputError("unknown race: " + std::string(s));
}

// Fixed cast of ten decision subjects shown in every test of an experiment.
class Roster {
 public:
  explicit Roster(std::vector<DecisionSubject> subjects) : subjects_(std::move(subjects)) {
    if (subjects_.size() != kRosterSize)
      throw InputError("roster must hold exactly " + std::to_string(kRosterSize) + " subjects");
    std::array<int, 4> cell{};
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
      if (subjects_[i].id != static_cast<int>(i))
        throw InputError("roster ids must be contiguous from 0");
      ++cell[cell_index(subjects_[i])];
    }
    if (std::ranges::any_of(cell, [](int c) { return c == 0; }))
      throw InputError("every gender x race group must be non-empty");
  }

  // 3 Caucasian female, 3 Caucasian male, 2 African-American female,
  // 2 African-American male, in that id order.
  static Roster default_roster() {
    std::vector<DecisionSubject> s;
    auto add = [&](Gender g, Race r, int n) {
      for (int k = 0; k < n; ++k) s.push_back({static_cast<int>(s.size()), g, r});
    };
    add(Gender::female, Race::caucasian, 3);
    add(Gender::male, Race::caucasian, 3);
    add(Gender::female, Race::african_american, 2);
    add(Gender::male, Race::african_american, 2);
    return Roster(std::move(s));
  }

  std::size_t size() const { return subjects_.size(); }
  const DecisionSubject& operator[](std::size_t i) const { return subjects_[i]; }
  std::span<const DecisionSubject> subjects() const { return subjects_; }

  static std::size_t cell_index(const DecisionSubject& s) {
    return static_cast<std::size_t>(s.gender) * 2 + static_cast<std::size_t>(s.race);
  }

  friend bool operator==(const Roster&, const Roster&) = default;

 private:
  std::vector<DecisionSubject> subjects_;
};

// Binary outcome per subject; 1 is the positive ("high risk") label.
class LabelVector {
 public:
  LabelVector() = default;
  explicit LabelVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_)
      if (b > 1) throw InputError("labels must be 0 or 1");
  }

  static LabelVector from_string(std::string_view s) {
    std::vector<std::uint8_t> bits;
    bits.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw InputError("label string must contain only 0/1: " + std::string(s));
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return LabelVector(std::move(bits));
  }

  std::string to_string() const {
    std::string out;
    out.reserve(bits_.size());
    for (auto b : bits_) out.push_back(static_cast<char>('0' + b));
    return out;
  }

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t positives() const { return static_cast<std::size_t>(std::ranges::count(bits_, 1)); }

  friend auto operator<=>(const LabelVector&, const LabelVector&) = default;
  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

enum class FairnessNotion : std::uint8_t { DP, EP, FDP, FNP, FPP, FOP };

inline constexpr std::array<FairnessNotion, 6> kAllNotions = {
    FairnessNotion::DP,  FairnessNotion::EP,  FairnessNotion::FDP,
    FairnessNotion::FNP, FairnessNotion::FPP, FairnessNotion::FOP};

inline std::string_view to_string(FairnessNotion n) {
  switch (n) {
    case FairnessNotion::DP: return "DP";
    case FairnessNotion::EP: return "EP";
    case FairnessNotion::FDP: return "FDP";
    case FairnessNotion::FNP: return "FNP";
    case FairnessNotion::FPP: return "FPP";
    case FairnessNotion::FOP: return "FOP";
  }
  return "?";
}

inline FairnessNotion parse_notion(std::string_view s) {
  for (auto n : kAllNotions)
    if (to_string(n) == s) return n;
  // Published tables label the false-discovery notion "FDR".
  if (s == "FDR") return FairnessNotion::FDP;
  throw InputError("unknown fairness notion: " + std::string(s));
}

enum class GroupDimension : std::uint8_t { gender, race, intersection };

inline std::string_view to_string(GroupDimension d) {
  switch (d) {
    case GroupDimension::gender: return "gender";
    case GroupDimension::race: return "race";
    case GroupDimension::intersection: return "intersection";
  }
  return "?";
}

inline GroupDimension parse_dimension(std::string_view s) {
  if (s == "gender") return GroupDimension::gender;
  if (s == "race") return GroupDimension::race;
  if (s == "intersection") return GroupDimension::intersection;
  throw InputError("unknown grouping dimension: " + std::string(s));
}

// Partition of roster ids by one demographic dimension. Empty groups are
// dropped so the groups always partition the roster.
struct Grouping {
  GroupDimension dimension = GroupDimension::intersection;
  std::vector<std::vector<int>> groups;
  std::vector<std::string> labels;

  static Grouping of(GroupDimension dim, const Roster& roster) {
    Grouping g;
    g.dimension = dim;
    std::vector<std::pair<std::string, std::vector<int>>> cells;
    auto bucket = [&](const std::string& label) -> std::vector<int>& {
      for (auto& [l, ids] : cells)
        if (l == label) return ids;
      return cells.emplace_back(label, std::vector<int>{}).second;
    };
    // Fixed label order so the group order never depends on roster order.
    std::vector<std::string> order;
    for (auto gen : {Gender::female, Gender::male})
      for (auto race : {Race::caucasian, Race::african_american}) {
        std::string l = label_for(dim, gen, race);
        if (std::ranges::find(order, l) == order.end()) order.push_back(l);
      }
    for (const auto& l : order) bucket(l);
    for (const auto& s : roster.subjects()) bucket(label_for(dim, s.gender, s.race)).push_back(s.id);
    for (auto& [l, ids] : cells) {
      if (ids.empty()) continue;
      g.labels.push_back(l);
      g.groups.push_back(std::move(ids));
    }
    return g;
  }

  std::size_t size() const { return groups.size(); }

 private:
  static std::string label_for(GroupDimension dim, Gender gen, Race race) {
    switch (dim) {
      case GroupDimension::gender: return std::string(to_string(gen));
      case GroupDimension::race: return std::string(to_string(race));
      case GroupDimension::intersection:
        return std::string(to_string(race)) + "_" + std::string(to_string(gen));
    }
    return {};
  }
};

struct BenefitVector {
  FairnessNotion notion = FairnessNotion::DP;
  GroupDimension dimension = GroupDimension::intersection;
  std::vector<double> values;
};

struct ConfusionCounts {
  int true_pos = 0;
  int false_pos = 0;
  int true_neg = 0;
  int false_neg = 0;

  int size() const { return true_pos + false_pos + true_neg + false_neg; }
};

inline ConfusionCounts confusion_counts(const LabelVector& truth, const LabelVector& predicted,
                                        std::span<const int> members) {
  ConfusionCounts c;
  for (int id : members) {
    const auto i = static_cast<std::size_t>(id);
    if (i >= truth.size() || i >= predicted.size()) throw InputError("group member outside label vector");
    const bool y = truth[i] == 1;
    const bool yhat = predicted[i] == 1;
    if (y && yhat) ++c.true_pos;
    else if (!y && yhat) ++c.false_pos;
    else if (!y && !yhat) ++c.true_neg;
    else ++c.false_neg;
  }
  return c;
}

// Benefit of one group under one notion. A zero denominator yields 0.
inline double group_benefit(FairnessNotion notion, const ConfusionCounts& c) {
  auto ratio = [](int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; };
  switch (notion) {
    case FairnessNotion::DP: return ratio(c.true_pos + c.false_pos, c.size());
    case FairnessNotion::EP: return ratio(c.false_pos + c.false_neg, c.size());
    case FairnessNotion::FDP: return ratio(c.false_pos, c.true_pos + c.false_pos);
    case FairnessNotion::FNP: return ratio(c.false_neg, c.true_pos + c.false_neg);
    case FairnessNotion::FPP: return ratio(c.false_pos, c.false_pos + c.true_neg);
    case FairnessNotion::FOP: return ratio(c.false_neg, c.false_neg + c.true_neg);
  }
  return 0.0;
}

inline double group_benefit(FairnessNotion notion, const LabelVector& truth,
                            const LabelVector& predicted, std::span<const int> members) {
  if (truth.size() != predicted.size()) throw InputError("truth and prediction lengths differ");
  return group_benefit(notion, confusion_counts(truth, predicted, members));
}

inline BenefitVector compute_benefit(FairnessNotion notion, const LabelVector& truth,
                                     const LabelVector& predicted, const Grouping& grouping,
                                     const Roster& roster) {
  if (truth.size() != roster.size() || predicted.size() != roster.size())
    throw InputError("label vectors must match the roster size");
  BenefitVector b{notion, grouping.dimension, {}};
  b.values.reserve(grouping.size());
  for (const auto& members : grouping.groups)
    b.values.push_back(group_benefit(notion, confusion_counts(truth, predicted, members)));
  return b;
}

// Generalized Entropy index with alpha = 2:
//   (1 / 2N) * sum_G [ (b_G / mu)^2 - 1 ],  mu = mean benefit, N = #groups.
// Evaluated as sum_G (b_G - mu)^2 / (2 N mu^2), which is the same quantity
// but non-negative term by term. Zero when mu = 0 or all entries are equal.
inline double generalized_entropy(std::span<const double> b) {
  if (b.empty()) throw InputError("generalized entropy of an empty benefit vector");
  if (std::ranges::adjacent_find(b, std::ranges::not_equal_to{}) == b.end()) return 0.0;
  const double n = static_cast<double>(b.size());
  double sum = 0.0;
  for (double v : b) sum += v;
  const double mu = sum / n;
  if (mu == 0.0) return 0.0;
  double ss = 0.0;
  for (double v : b) ss += (v - mu) * (v - mu);
  return ss / (2.0 * n * mu * mu);
}

inline double generalized_entropy(const BenefitVector& b) { return generalized_entropy(b.values); }

inline double overall_accuracy(const LabelVector& truth, const LabelVector& predicted) {
  if (truth.size() != predicted.size()) throw InputError("truth and prediction lengths differ");
  if (truth.size() == 0) throw InputError("accuracy of empty label vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace fairperc

#endif  // FAIRPERC_METRICS_HPP
