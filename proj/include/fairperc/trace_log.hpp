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

// Line-delimited JSON event log for session traces: one event per line with
// timestamp, session id, event kind and payload.

#ifndef FAIRPERC_TRACE_LOG_HPP
#define FAIRPERC_TRACE_LOG_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "fairperc/inference.hpp"

namespace fairperc {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;

inline Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

inline Json to_json(const HypothesisSet& h) {
  Json j = Json::array();
  for (auto n : h.notions) j.push_back(std::string(to_string(n)));
  return j;
}

inline HypothesisSet hypotheses_from_json(const Json& j) {
  HypothesisSet h;
  for (const auto& n : j) h.notions.push_back(parse_notion(n.get<std::string>()));
  h.validate();
  return h;
}

inline Json to_json(const Classification& c) {
  return {{"matched", c.matched()},
          {"notion", c.notion ? Json(std::string(to_string(*c.notion))) : Json(nullptr)},
          {"probability", c.probability}};
}

inline Json to_json(const EngineConfig& c) {
  Json j = {{"hypotheses", to_json(c.hypotheses)},
            {"max_tests", c.max_tests},
            {"classification_threshold", c.classification_threshold},
            {"temperature", c.response.temperature},
            {"grouping", to_string(c.response.grouping)},
            {"selection",
             {{"kind", c.selection.kind == SelectionPolicy::Kind::adaptive ? "adaptive" : "random"},
              {"seed", c.selection.seed}}},
            {"first_test",
             {{"kind", c.first_test.kind == FirstTestPolicy::Kind::argmax ? "argmax" : "random"},
              {"seed", c.first_test.seed}}}};
  j["early_stop_threshold"] = c.early_stop_threshold ? Json(*c.early_stop_threshold) : Json(nullptr);
  return j;
}

inline EngineConfig engine_config_from_json(const Json& j) {
  EngineConfig c;
  c.hypotheses = hypotheses_from_json(j.at("hypotheses"));
  c.max_tests = j.at("max_tests").get<int>();
  c.classification_threshold = j.at("classification_threshold").get<double>();
  c.response.temperature = j.at("temperature").get<double>();
  c.response.grouping = parse_dimension(j.at("grouping").get<std::string>());
  c.selection = j.at("selection").at("kind") == "adaptive"
                    ? SelectionPolicy::adaptive()
                    : SelectionPolicy::random(j.at("selection").at("seed").get<std::uint64_t>());
  c.first_test = j.at("first_test").at("kind") == "argmax"
                     ? FirstTestPolicy::argmax()
                     : FirstTestPolicy::random(j.at("first_test").at("seed").get<std::uint64_t>());
  if (j.contains("early_stop_threshold") && !j["early_stop_threshold"].is_null())
    c.early_stop_threshold = j["early_stop_threshold"].get<double>();
  c.validate();
  return c;
}

inline Json make_event(std::int64_t ts, std::string_view session, std::string_view kind, Json payload) {
  return {{"ts", ts}, {"session", session}, {"kind", kind}, {"payload", std::move(payload)}};
}

inline void write_trace(std::ostream& os, const SessionTrace& trace, std::string_view session_id,
                        const Clock& clock) {
  os << make_event(clock(), session_id, "session_start",
                   {{"hypotheses", to_json(trace.hypotheses)}, {"prior", trace.prior.probabilities}})
            .dump()
     << '\n';
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    os << make_event(clock(), session_id, "step",
                     {{"index", i},
                      {"test_id", s.test_id},
                      {"choice", to_string(s.choice)},
                      {"posterior", s.posterior.probabilities}})
              .dump()
       << '\n';
  }
  Json end = {{"status", to_string(trace.status)}, {"classification", to_json(trace.classification)}};
  if (!trace.error.empty()) end["error"] = trace.error;
  os << make_event(clock(), session_id, "session_end", std::move(end)).dump() << '\n';
}

// Inverse of write_trace for a single session's lines.
inline SessionTrace read_trace(std::istream& is, const EngineConfig& config) {
  SessionTrace trace;
  std::string line;
  bool ended = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto ev = Json::parse(line);
    const auto& kind = ev.at("kind").get_ref<const std::string&>();
    const auto& p = ev.at("payload");
    if (kind == "session_start") {
      trace.hypotheses = hypotheses_from_json(p.at("hypotheses"));
      trace.prior.probabilities = p.at("prior").get<std::vector<double>>();
    } else if (kind == "step") {
      trace.steps.push_back({p.at("test_id").get<TestId>(), parse_choice(p.at("choice").get<std::string>()),
                             Posterior{p.at("posterior").get<std::vector<double>>()}});
    } else if (kind == "session_end") {
      trace.status = parse_session_status(p.at("status").get<std::string>());
      trace.error = p.value("error", "");
      ended = true;
    } else {
      throw InputError("unknown trace event kind: " + kind);
    }
  }
  if (!ended) throw InputError("trace log has no session_end event");
  auto cfg = config;
  cfg.hypotheses = trace.hypotheses;
  trace.classification = classify(trace.steps.empty() ? trace.prior : trace.steps.back().posterior, cfg);
  return trace;
}

}  // namespace fairperc

#endif  // FAIRPERC_TRACE_LOG_HPP
