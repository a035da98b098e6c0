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

#ifndef FAIRPERC_SCENARIO_HPP
#define FAIRPERC_SCENARIO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "fairperc/errors.hpp"

namespace fairperc {

enum class ScenarioId : std::uint8_t { crime_risk, cancer_risk, flu_severity, prison_sentencing, bail_amount };
enum class Stakes : std::uint8_t { high, low };

inline constexpr std::array<ScenarioId, 5> kAllScenarios = {ScenarioId::crime_risk, ScenarioId::cancer_risk,
                                                            ScenarioId::flu_severity,
                                                            ScenarioId::prison_sentencing, ScenarioId::bail_amount};

struct Scenario {
  ScenarioId id;
  Stakes stakes;
  bool adaptive;  // drives pairwise test sessions
  bool survey;    // offered as a three-algorithm trade-off survey
  std::string framing_text;
};

inline std::string_view to_string(ScenarioId s) {
  switch (s) {
    case ScenarioId::crime_risk: return "crime_risk";
    case ScenarioId::cancer_risk: return "cancer_risk";
    case ScenarioId::flu_severity: return "flu_severity";
    case ScenarioId::prison_sentencing: return "prison_sentencing";
    case ScenarioId::bail_amount: return "bail_amount";
  }
  return "?";
}

inline std::string_view to_string(Stakes s) { return s == Stakes::high ? "high" : "low"; }

inline ScenarioId parse_scenario(std::string_view s) {
  for (auto id : kAllScenarios)
    if (to_string(id) == s) return id;
  throw InputError("unknown scenario: " + std::string(s));
}

// Short built-in framings. Deployments load the full participant-facing
// prose through the service config ("scenarios" object).
inline Scenario builtin_scenario(ScenarioId id) {
  switch (id) {
    case ScenarioId::crime_risk:
      return {id, Stakes::high, true, false,
              "A court uses risk-assessment algorithms to predict whether a defendant will commit another "
              "crime. Judges consult the prediction when deciding bond and jail time."};
    case ScenarioId::cancer_risk:
      return {id, Stakes::high, true, true,
              "A hospital uses algorithms to predict each patient's risk of skin cancer. Doctors use the "
              "prediction to plan treatment; a missed diagnosis can shorten a patient's life."};
    case ScenarioId::flu_severity:
      return {id, Stakes::low, false, true,
              "An app predicts how severe a patient's flu symptoms will become. Patients use the prediction "
              "to decide whether to see a doctor; an error means a short period of discomfort."};
    case ScenarioId::prison_sentencing:
      return {id, Stakes::high, false, true,
              "Judges use algorithmic predictions of future crime when deciding how long a defendant "
              "spends in prison."};
    case ScenarioId::bail_amount:
      return {id, Stakes::low, false, true,
              "Judges use algorithmic predictions of whether a defendant will appear at future hearings "
              "when setting the bail amount."};
  }
  throw InputError("unknown scenario");
}

// The three fixed survey algorithms: overall, female and male accuracy (%).
struct SurveyAlgorithm {
  std::string_view name;
  int accuracy;
  int female_accuracy;
  int male_accuracy;
};

inline constexpr std::array<SurveyAlgorithm, 3> kSurveyAlgorithms = {{
    {"A1", 94, 89, 99},
    {"A2", 91, 90, 92},
    {"A3", 86, 86, 86},
}};

inline int parse_survey_choice(std::string_view s) {
  for (std::size_t i = 0; i < kSurveyAlgorithms.size(); ++i)
    if (kSurveyAlgorithms[i].name == s) return static_cast<int>(i);
  throw InputError("survey choice must be A1, A2 or A3, got: " + std::string(s));
}

}  // namespace fairperc

#endif  // FAIRPERC_SCENARIO_HPP
