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

// Live adaptive sessions, surveys and export over an append-only event log.
//
// Every state change is first written to the log as an event and then
// applied through the same code path that replays the log at startup, so a
// restarted service reconstructs sessions bit for bit.

#ifndef FAIRPERC_SERVICE_HPP
#define FAIRPERC_SERVICE_HPP

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairperc/errors.hpp"
#include "fairperc/inference.hpp"
#include "fairperc/random.hpp"
#include "fairperc/scenario.hpp"
#include "fairperc/test_space.hpp"
#include "fairperc/trace_log.hpp"

namespace fairperc {

enum class ExplanationUi : std::uint8_t { free_text, structured };

inline std::string_view to_string(ExplanationUi u) { return u == ExplanationUi::free_text ? "free_text" : "structured"; }

inline ExplanationUi parse_explanation_ui(std::string_view s) {
  if (s == "free_text") return ExplanationUi::free_text;
  if (s == "structured") return ExplanationUi::structured;
  throw ValidationError("unknown explanation_ui: " + std::string(s));
}

struct Explanation {
  ExplanationUi variant = ExplanationUi::free_text;
  std::string body;
  GroupDimension attribute = GroupDimension::intersection;
  FairnessNotion metric = FairnessNotion::DP;
};

inline Json to_json(const Explanation& e) {
  if (e.variant == ExplanationUi::free_text) return {{"free_text", e.body}};
  return {{"attribute", to_string(e.attribute)}, {"metric", to_string(e.metric)}};
}

// Accepts only the variant the session's interface displays; structured
// metrics must come from the session's hypothesis menu.
inline Explanation parse_explanation(const Json& j, ExplanationUi ui, const HypothesisSet& menu) {
  if (!j.is_object()) throw ValidationError("explanation is required");
  Explanation e;
  e.variant = ui;
  try {
    if (ui == ExplanationUi::free_text) {
      if (!j.contains("free_text") || !j["free_text"].is_string()) throw ValidationError("free_text explanation is required");
      e.body = j["free_text"].get<std::string>();
      if (e.body.find_first_not_of(" \t\r\n") == std::string::npos)
        throw ValidationError("explanation must not be empty");
    } else {
      if (!j.contains("attribute") || !j.contains("metric"))
        throw ValidationError("structured explanation needs attribute and metric");
      e.attribute = parse_dimension(j["attribute"].get<std::string>());
      e.metric = parse_notion(j["metric"].get<std::string>());
      if (!menu.index_of(e.metric)) throw ValidationError("metric is not among the displayed notions");
    }
  } catch (const InputError& err) {
    throw ValidationError(err.what());
  } catch (const Json::exception& err) {
    throw ValidationError(std::string("malformed explanation: ") + err.what());
  }
  return e;
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log_path = "fairperc-events.jsonl";
  std::string static_dir;  // optional web UI bundle served at "/"
  std::vector<ScenarioId> adaptive_scenarios = {ScenarioId::crime_risk, ScenarioId::cancer_risk};
  std::map<ScenarioId, std::string> framing_text;  // overrides of the built-in framings
  int max_tests = 20;
  double classification_threshold = 0.8;
  FirstTestPolicy::Kind first_test = FirstTestPolicy::Kind::random;
  std::optional<double> early_stop_threshold;
  ExplanationUi explanation_ui = ExplanationUi::free_text;
  ResponseModelConfig response;
  TestSpaceConfig space;
  std::optional<std::uint64_t> master_seed;
  std::int64_t session_ttl_ms = 24ll * 60 * 60 * 1000;

  static ServiceConfig from_json(const Json& j) {
    ServiceConfig c;
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.log_path = j.value("log_path", c.log_path);
    c.static_dir = j.value("static_dir", c.static_dir);
    if (j.contains("adaptive_scenarios")) {
      c.adaptive_scenarios.clear();
      for (const auto& s : j["adaptive_scenarios"]) c.adaptive_scenarios.push_back(parse_scenario(s.get<std::string>()));
    }
    if (j.contains("scenarios"))
      for (const auto& [name, body] : j["scenarios"].items())
        c.framing_text[parse_scenario(name)] = body.at("framing_text").get<std::string>();
    c.max_tests = j.value("max_tests", c.max_tests);
    c.classification_threshold = j.value("classification_threshold", c.classification_threshold);
    if (j.contains("first_test")) c.first_test = parse_first_test(j["first_test"].get<std::string>());
    if (j.contains("early_stop_threshold") && !j["early_stop_threshold"].is_null())
      c.early_stop_threshold = j["early_stop_threshold"].get<double>();
    if (j.contains("explanation_ui")) c.explanation_ui = parse_explanation_ui(j["explanation_ui"].get<std::string>());
    c.response.temperature = j.value("temperature", c.response.temperature);
    if (j.contains("grouping")) c.response.grouping = parse_dimension(j["grouping"].get<std::string>());
    if (j.contains("truth")) c.space.truth_policy = FixedTruth{LabelVector::from_string(j["truth"].get<std::string>())};
    c.space.min_errors = j.value("min_errors", c.space.min_errors);
    c.space.max_errors = j.value("max_errors", c.space.max_errors);
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("session_ttl_hours")) c.session_ttl_ms = static_cast<std::int64_t>(j["session_ttl_hours"].get<double>() * 3600 * 1000);
    return c;
  }

  static ServiceConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return from_json(Json::parse(in));
  }

  // FAIRPERC_HOST, FAIRPERC_PORT, FAIRPERC_LOG_PATH, FAIRPERC_SCENARIOS
  // (comma list), FAIRPERC_MAX_TESTS, FAIRPERC_SEED, FAIRPERC_FIRST_TEST,
  // FAIRPERC_EXPLANATION_UI, FAIRPERC_STATIC_DIR.
  void apply_env(const std::function<const char*(const char*)>& getenv = [](const char* k) { return std::getenv(k); }) {
    if (const char* v = getenv("FAIRPERC_HOST")) host = v;
    if (const char* v = getenv("FAIRPERC_PORT")) port = std::stoi(v);
    if (const char* v = getenv("FAIRPERC_LOG_PATH")) log_path = v;
    if (const char* v = getenv("FAIRPERC_STATIC_DIR")) static_dir = v;
    if (const char* v = getenv("FAIRPERC_MAX_TESTS")) max_tests = std::stoi(v);
    if (const char* v = getenv("FAIRPERC_SEED")) master_seed = std::stoull(v);
    if (const char* v = getenv("FAIRPERC_FIRST_TEST")) first_test = parse_first_test(v);
    if (const char* v = getenv("FAIRPERC_EXPLANATION_UI")) explanation_ui = parse_explanation_ui(v);
    if (const char* v = getenv("FAIRPERC_SCENARIOS")) {
      adaptive_scenarios.clear();
      std::stringstream ss(v);
      for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) adaptive_scenarios.push_back(parse_scenario(item));
    }
  }

  static FirstTestPolicy::Kind parse_first_test(std::string_view s) {
    if (s == "argmax") return FirstTestPolicy::Kind::argmax;
    if (s == "random") return FirstTestPolicy::Kind::random;
    throw ConfigError("first_test must be argmax or random");
  }
};

// Append-only JSONL file. On open, the longest prefix of complete, parseable
// lines is kept and anything after it (a torn write) is truncated away.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path) : path_(std::move(path)) {
    std::uintmax_t good = 0;
    if (std::filesystem::exists(path_)) {
      std::ifstream in(path_, std::ios::binary);
      std::string line;
      std::uintmax_t offset = 0;
      while (std::getline(in, line)) {
        if (in.eof()) break;  // no trailing newline: torn write
        offset += line.size() + 1;
        if (line.empty()) {
          good = offset;
          continue;
        }
        auto ev = Json::parse(line, nullptr, false);
        if (ev.is_discarded()) break;
        recovered_.push_back(std::move(ev));
        good = offset;
      }
      in.close();
      if (std::filesystem::file_size(path_) != good) std::filesystem::resize_file(path_, good);
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw ConfigError("cannot open event log " + path_.string());
  }

  std::vector<Json> take_recovered() { return std::exchange(recovered_, {}); }

  void append(const Json& event) {
    std::lock_guard lock(mu_);
    out_ << event.dump() << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("event log write failed");
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
  std::vector<Json> recovered_;
};

enum class SessionState : std::uint8_t { active, completed, aborted };

inline std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::active: return "active";
    case SessionState::completed: return "completed";
    case SessionState::aborted: return "aborted";
  }
  return "?";
}

struct ExportFilter {
  std::optional<ScenarioId> scenario;
  bool include_demographics = false;
};

struct SurveyResponse {
  ScenarioId scenario;
  Stakes stakes;
  int chosen;  // index into kSurveyAlgorithms
  std::optional<Json> demographics;
};

inline const std::vector<std::string>& demographic_fields() {
  static const std::vector<std::string> fields = {"age_bracket", "gender", "race", "education", "political_leaning"};
  return fields;
}

inline Json validate_demographics(const Json& j) {
  if (!j.is_object()) throw ValidationError("demographics must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::ranges::find(demographic_fields(), key) == demographic_fields().end())
      throw ValidationError("unknown demographics field: " + key);
    if (!value.is_string() && !value.is_null()) throw ValidationError("demographics values must be strings");
  }
  return j;
}

class ExperimentService {
 public:
  ExperimentService(ServiceConfig config, std::shared_ptr<const LikelihoodTable> table, Clock clock = system_clock())
      : config_(std::move(config)), table_(std::move(table)), clock_(std::move(clock)), log_(config_.log_path) {
    master_seed_ = config_.master_seed ? *config_.master_seed : std::random_device{}() * 0x100000001ull ^ std::random_device{}();
    for (const auto& ev : log_.take_recovered()) apply(ev);
  }

  explicit ExperimentService(ServiceConfig config, Clock clock = system_clock())
      : ExperimentService(config, build_table(config), std::move(clock)) {}

  static std::shared_ptr<const LikelihoodTable> build_table(const ServiceConfig& config) {
    auto space = std::make_shared<const TestSpace>(enumerate_tests(config.space));
    return std::make_shared<const LikelihoodTable>(space, config.response);
  }

  const LikelihoodTable& table() const { return *table_; }
  const ServiceConfig& config() const { return config_; }

  Scenario scenario(ScenarioId id) const {
    auto s = builtin_scenario(id);
    s.adaptive = std::ranges::find(config_.adaptive_scenarios, id) != config_.adaptive_scenarios.end();
    if (auto it = config_.framing_text.find(id); it != config_.framing_text.end()) s.framing_text = it->second;
    return s;
  }

  Json scenarios() const {
    Json list = Json::array();
    for (auto id : kAllScenarios) {
      const auto s = scenario(id);
      list.push_back({{"id", to_string(id)},
                      {"stakes", to_string(s.stakes)},
                      {"adaptive", s.adaptive},
                      {"survey", s.survey},
                      {"framing_text", s.framing_text}});
    }
    Json algos = Json::array();
    for (const auto& a : kSurveyAlgorithms)
      algos.push_back({{"name", a.name},
                       {"accuracy", a.accuracy},
                       {"female_accuracy", a.female_accuracy},
                       {"male_accuracy", a.male_accuracy}});
    return {{"schema_version", kSchemaVersion}, {"scenarios", list}, {"survey_algorithms", algos}};
  }

  // Request: {"scenario": ..., optional "hypothesis_set": "default"|"appendix",
  // "max_tests", "classification_threshold", "first_test", "selection",
  // "early_stop_threshold", "explanation_ui", "demographics"}.
  Json create_session(const Json& request) {
    if (!request.is_object() || !request.contains("scenario") || !request["scenario"].is_string())
      throw InputError("scenario is required");
    const auto sid = parse_scenario(request["scenario"].get<std::string>());
    if (!scenario(sid).adaptive) throw InputError("scenario does not run adaptive sessions: " + std::string(to_string(sid)));

    std::unique_lock map_lock(sessions_mu_);
    const auto seq = next_seq_;
    const auto seed = mix_seed(master_seed_, 2 * seq + 1);
    const auto id = hex_token(mix_seed(master_seed_, 2 * seq), 16);

    EngineConfig ec;
    ec.max_tests = config_.max_tests;
    ec.classification_threshold = config_.classification_threshold;
    ec.response = table_->response();
    ec.early_stop_threshold = config_.early_stop_threshold;
    auto first_kind = config_.first_test;
    auto ui = config_.explanation_ui;
    try {
      if (request.contains("hypothesis_set")) {
        const auto set = request["hypothesis_set"].get<std::string>();
        if (set == "default") ec.hypotheses = HypothesisSet::default_set();
        else if (set == "appendix") ec.hypotheses = HypothesisSet::appendix_set();
        else throw ValidationError("hypothesis_set must be default or appendix");
      }
      if (request.value("appendix_set", false)) ec.hypotheses = HypothesisSet::appendix_set();
      ec.max_tests = request.value("max_tests", ec.max_tests);
      ec.classification_threshold = request.value("classification_threshold", ec.classification_threshold);
      if (request.contains("early_stop_threshold"))
        ec.early_stop_threshold = request["early_stop_threshold"].is_null()
                                      ? std::nullopt
                                      : std::optional<double>(request["early_stop_threshold"].get<double>());
      if (request.contains("first_test")) first_kind = ServiceConfig::parse_first_test(request["first_test"].get<std::string>());
      if (request.contains("selection")) {
        const auto sel = request["selection"].get<std::string>();
        if (sel == "random") ec.selection = SelectionPolicy::random(seed);
        else if (sel != "adaptive") throw ValidationError("selection must be adaptive or random");
      }
      if (request.contains("explanation_ui")) ui = parse_explanation_ui(request["explanation_ui"].get<std::string>());
      ec.first_test = first_kind == FirstTestPolicy::Kind::argmax ? FirstTestPolicy::argmax() : FirstTestPolicy::random(seed);
      ec.validate();
    } catch (const Json::exception& e) {
      throw ValidationError(std::string("malformed session request: ") + e.what());
    } catch (const ConfigError& e) {
      throw ValidationError(e.what());
    }

    Json payload = {{"seq", seq},
                    {"scenario", to_string(sid)},
                    {"seed", seed},
                    {"explanation_ui", to_string(ui)},
                    {"config", to_json(ec)}};
    if (request.contains("demographics")) payload["demographics"] = validate_demographics(request["demographics"]);
    record(make_event(clock_(), id, "session_created", std::move(payload)));

    auto& s = *sessions_.at(id);
    std::lock_guard lock(s.mu);
    map_lock.unlock();
    ensure_outstanding(s);
    return payload_for(s);
  }

  Json current_test(const std::string& id) {
    auto& s = find(id);
    std::lock_guard lock(s.mu);
    expire_if_idle(s);
    if (s.state == SessionState::active) ensure_outstanding(s);
    return payload_for(s);
  }

  // Request: {"test_id": n, "choice": "A1"|"A2", "explanation": {...}}.
  // The choice names the canonical algorithm, independent of display side.
  Json submit_response(const std::string& id, const Json& request) {
    auto& s = find(id);
    std::lock_guard lock(s.mu);
    expire_if_idle(s);
    if (s.state != SessionState::active)
      throw ConflictError("session " + id + " is " + std::string(to_string(s.state)));
    ensure_outstanding(s);
    if (!request.is_object() || !request.contains("test_id") || !request["test_id"].is_number_integer())
      throw ValidationError("test_id is required");
    const auto test_id = request["test_id"].get<TestId>();
    if (!s.outstanding || test_id != *s.outstanding)
      throw ConflictError("test " + std::to_string(test_id) + " is not the outstanding test of session " + id);
    Choice choice;
    try {
      choice = parse_choice(request.at("choice").get<std::string>());
    } catch (const std::exception&) {
      throw ValidationError("choice must be A1 or A2");
    }
    if (!request.contains("explanation")) throw ValidationError("explanation is required");
    const auto expl = parse_explanation(request["explanation"], s.ui, s.engine.config().hypotheses);

    record(make_event(clock_(), id, "response",
                      {{"test_id", test_id},
                       {"step", s.engine.steps()},
                       {"choice", to_string(choice)},
                       {"explanation", to_json(expl)}}),
           &s);
    ensure_outstanding(s);
    return payload_for(s);
  }

  // Optional questionnaire, accepted at any point of the session.
  Json submit_demographics(const std::string& id, const Json& request) {
    auto& s = find(id);
    std::lock_guard lock(s.mu);
    record(make_event(clock_(), id, "demographics", {{"demographics", validate_demographics(request)}}), &s);
    return {{"schema_version", kSchemaVersion}, {"status", "recorded"}};
  }

  // Request: {"scenario": ..., "chosen": "A1"|"A2"|"A3", optional "demographics"}.
  Json submit_survey(const Json& request) {
    if (!request.is_object()) throw ValidationError("survey request must be an object");
    ScenarioId sid;
    int chosen;
    try {
      sid = parse_scenario(request.at("scenario").get<std::string>());
      chosen = parse_survey_choice(request.at("chosen").get<std::string>());
    } catch (const InputError& e) {
      throw ValidationError(e.what());
    } catch (const Json::exception& e) {
      throw ValidationError(std::string("malformed survey: ") + e.what());
    }
    const auto sc = scenario(sid);
    if (!sc.survey) throw ValidationError("scenario has no survey: " + std::string(to_string(sid)));
    std::lock_guard lock(surveys_mu_);
    Json payload = {{"index", surveys_.size()},
                    {"scenario", to_string(sid)},
                    {"stakes", to_string(sc.stakes)},
                    {"chosen", kSurveyAlgorithms[static_cast<std::size_t>(chosen)].name}};
    if (request.contains("demographics")) payload["demographics"] = validate_demographics(request["demographics"]);
    const auto index = surveys_.size();
    record_survey(make_event(clock_(), "", "survey", std::move(payload)));
    return {{"schema_version", kSchemaVersion}, {"status", "recorded"}, {"index", index}};
  }

  // Completed sessions in creation order, one JSON record per line.
  std::string export_sessions(const ExportFilter& filter = {}) const {
    std::ostringstream out;
    std::shared_lock map_lock(sessions_mu_);
    for (const auto& id : order_) {
      auto& s = *sessions_.at(id);
      std::lock_guard lock(s.mu);
      if (s.state != SessionState::completed) continue;
      if (filter.scenario && *filter.scenario != s.scenario) continue;
      out << export_record(s, filter.include_demographics).dump() << '\n';
    }
    return out.str();
  }

  std::string export_surveys(bool include_demographics = false) const {
    std::ostringstream out;
    std::lock_guard lock(surveys_mu_);
    for (const auto& r : surveys_) {
      Json j = {{"schema_version", kSchemaVersion},
                {"scenario", to_string(r.scenario)},
                {"stakes", to_string(r.stakes)},
                {"chosen", kSurveyAlgorithms[static_cast<std::size_t>(r.chosen)].name}};
      if (include_demographics && r.demographics) j["demographics"] = *r.demographics;
      out << j.dump() << '\n';
    }
    return out.str();
  }

  // Aborts every active session idle for longer than the configured TTL.
  std::size_t expire_idle() {
    std::size_t n = 0;
    std::shared_lock map_lock(sessions_mu_);
    for (const auto& id : order_) {
      auto& s = *sessions_.at(id);
      std::lock_guard lock(s.mu);
      n += expire_if_idle(s);
    }
    return n;
  }

  std::optional<Posterior> posterior(const std::string& id) const {
    std::shared_lock map_lock(sessions_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    std::lock_guard lock(it->second->mu);
    return it->second->engine.posterior();
  }

  std::optional<SessionState> state(const std::string& id) const {
    std::shared_lock map_lock(sessions_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    std::lock_guard lock(it->second->mu);
    return it->second->state;
  }

  std::vector<std::string> session_ids() const {
    std::shared_lock map_lock(sessions_mu_);
    return order_;
  }

  std::size_t survey_count() const {
    std::lock_guard lock(surveys_mu_);
    return surveys_.size();
  }

 private:
  struct Answer {
    TestId test_id;
    Choice choice;
    bool swapped;
    Explanation explanation;
    std::int64_t ts;
  };

  struct LiveSession {
    LiveSession(std::shared_ptr<const LikelihoodTable> table, EngineConfig config)
        : engine(std::move(table), std::move(config)) {}

    mutable std::mutex mu;
    std::string id;
    std::uint64_t seq = 0;
    std::uint64_t seed = 0;
    ScenarioId scenario = ScenarioId::crime_risk;
    ExplanationUi ui = ExplanationUi::free_text;
    Engine engine;
    std::optional<TestId> outstanding;
    bool swapped = false;  // A2 rendered on the left
    std::vector<Answer> answers;
    std::optional<Json> demographics;
    std::string return_code;
    SessionState state = SessionState::active;
    std::string abort_reason;
    std::int64_t created_ms = 0;
    std::int64_t last_ms = 0;
  };

  static std::string hex_token(std::uint64_t v, int digits) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s(static_cast<std::size_t>(digits), '0');
    for (int i = digits - 1; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kHex[v & 0xF];
    return s;
  }

  LiveSession& find(const std::string& id) const {
    std::shared_lock map_lock(sessions_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("no session " + id);
    return *it->second;
  }

  void record(const Json& event, LiveSession* target = nullptr) {
    log_.append(event);
    apply(event, target);
  }

  void record_survey(const Json& event) {
    log_.append(event);
    apply_survey(event);
  }

  // Session events run under the session lock with target set; session_created
  // runs under the map write lock. During startup replay target is null.
  void apply(const Json& ev, LiveSession* target = nullptr) {
    const auto& kind = ev.at("kind").get_ref<const std::string&>();
    if (kind == "survey") {
      apply_survey(ev);
      return;
    }
    const auto& id = ev.at("session").get_ref<const std::string&>();
    const auto& p = ev.at("payload");
    const auto ts = ev.at("ts").get<std::int64_t>();
    if (kind == "session_created") {
      auto s = std::make_unique<LiveSession>(table_, engine_config_from_json(p.at("config")));
      s->id = id;
      s->seq = p.at("seq").get<std::uint64_t>();
      s->seed = p.at("seed").get<std::uint64_t>();
      s->scenario = parse_scenario(p.at("scenario").get<std::string>());
      s->ui = parse_explanation_ui(p.at("explanation_ui").get<std::string>());
      if (p.contains("demographics")) s->demographics = p["demographics"];
      s->created_ms = s->last_ms = ts;
      next_seq_ = std::max(next_seq_, s->seq + 1);
      order_.push_back(id);
      sessions_.emplace(id, std::move(s));
      return;
    }
    if (!target) {
      auto it = sessions_.find(id);
      if (it == sessions_.end()) throw InvariantError("event for unknown session " + id);
      target = it->second.get();
    }
    auto& s = *target;
    s.last_ms = ts;
    if (kind == "test_issued") {
      s.outstanding = p.at("test_id").get<TestId>();
      s.swapped = p.at("swapped").get<bool>();
    } else if (kind == "response") {
      const auto test = p.at("test_id").get<TestId>();
      const auto choice = parse_choice(p.at("choice").get<std::string>());
      s.engine.observe(test, choice);
      s.answers.push_back({test, choice, s.swapped,
                           parse_explanation(p.at("explanation"), s.ui, s.engine.config().hypotheses), ts});
      s.outstanding.reset();
    } else if (kind == "session_completed") {
      s.state = SessionState::completed;
      s.return_code = p.at("return_code").get<std::string>();
      s.outstanding.reset();
    } else if (kind == "session_aborted") {
      s.state = SessionState::aborted;
      s.abort_reason = p.value("reason", "");
      s.outstanding.reset();
    } else if (kind == "demographics") {
      s.demographics = p.at("demographics");
    } else {
      throw InvariantError("unknown event kind " + kind);
    }
  }

  void apply_survey(const Json& ev) {
    const auto& p = ev.at("payload");
    const auto sid = parse_scenario(p.at("scenario").get<std::string>());
    SurveyResponse r{sid, builtin_scenario(sid).stakes, parse_survey_choice(p.at("chosen").get<std::string>()),
                     std::nullopt};
    if (p.contains("demographics")) r.demographics = p["demographics"];
    surveys_.push_back(std::move(r));
  }

  // Issues the next test, or completes the session once the engine is done.
  void ensure_outstanding(LiveSession& s) {
    if (s.state != SessionState::active || s.outstanding) return;
    std::optional<TestId> next;
    if (!s.engine.finished()) next = s.engine.next_test();
    if (!next) {
      record(make_event(clock_(), s.id, "session_completed",
                        {{"return_code", hex_token(mix_seed(s.seed, 0xC0DE), 10)},
                         {"posterior", s.engine.posterior().probabilities},
                         {"classification", to_json(s.engine.classification())}}),
           &s);
      return;
    }
    const auto step = s.engine.steps();
    auto rng = make_rng(s.seed, 1000 + step);
    const bool swapped = std::bernoulli_distribution(0.5)(rng);
    record(make_event(clock_(), s.id, "test_issued", {{"test_id", *next}, {"step", step}, {"swapped", swapped}}), &s);
  }

  bool expire_if_idle(LiveSession& s) {
    if (s.state != SessionState::active) return false;
    if (clock_() - s.last_ms <= config_.session_ttl_ms) return false;
    record(make_event(clock_(), s.id, "session_aborted", {{"reason", "expired"}}), &s);
    return true;
  }

  static Json bits(const LabelVector& v) {
    Json a = Json::array();
    for (auto b : v.bits()) a.push_back(static_cast<int>(b));
    return a;
  }

  Json payload_for(const LiveSession& s) const {
    Json j = {{"schema_version", kSchemaVersion},
              {"session_id", s.id},
              {"scenario", to_string(s.scenario)},
              {"status", to_string(s.state)},
              {"hypotheses", to_json(s.engine.config().hypotheses)},
              {"max_tests", s.engine.config().max_tests},
              {"tests_completed", s.engine.steps()}};
    if (s.state == SessionState::completed) {
      j["kind"] = "complete";
      j["classification"] = to_json(s.engine.classification());
      j["posterior"] = s.engine.posterior().probabilities;
      j["return_code"] = s.return_code;
      return j;
    }
    if (s.state == SessionState::aborted || !s.outstanding) {
      j["kind"] = "aborted";
      j["reason"] = s.abort_reason;
      return j;
    }
    const auto& test = table_->space()[*s.outstanding];
    const auto& roster = table_->space().config.roster;
    j["kind"] = "test";
    j["step"] = s.engine.steps() + 1;
    j["explanation_ui"] = to_string(s.ui);
    j["test"] = {{"id", test.id},
                 {"truth", bits(test.truth)},
                 {"predictions", {{"A1", bits(test.pred_a1)}, {"A2", bits(test.pred_a2)}}},
                 {"display_order", s.swapped ? Json{"A2", "A1"} : Json{"A1", "A2"}}};
    Json subjects = Json::array();
    for (const auto& d : roster.subjects())
      subjects.push_back({{"id", d.id}, {"gender", to_string(d.gender)}, {"race", to_string(d.race)}});
    j["roster"] = subjects;
    if (s.ui == ExplanationUi::structured) j["disparities"] = disparities(test, s.engine.config().hypotheses);
    return j;
  }

  // Per-notion inequality and group benefits for each algorithm, as shown
  // in the structured explanation menu.
  Json disparities(const Test& test, const HypothesisSet& hypotheses) const {
    const auto& roster = table_->space().config.roster;
    const auto grouping = Grouping::of(table_->response().grouping, roster);
    Json out = Json::array();
    for (auto n : hypotheses.notions) {
      const auto [e1, e2] = table_->entropies(test.id, n);
      out.push_back({{"notion", to_string(n)},
                     {"groups", grouping.labels},
                     {"A1", {{"inequality", e1}, {"benefits", compute_benefit(n, test.truth, test.pred_a1, grouping, roster).values}}},
                     {"A2", {{"inequality", e2}, {"benefits", compute_benefit(n, test.truth, test.pred_a2, grouping, roster).values}}}});
    }
    return out;
  }

  Json export_record(const LiveSession& s, bool include_demographics) const {
    Json steps = Json::array();
    for (std::size_t i = 0; i < s.answers.size(); ++i) {
      const auto& a = s.answers[i];
      steps.push_back({{"test_id", a.test_id},
                       {"choice", to_string(a.choice)},
                       {"display_order", a.swapped ? Json{"A2", "A1"} : Json{"A1", "A2"}},
                       {"explanation", to_json(a.explanation)},
                       {"posterior", s.engine.history()[i].posterior.probabilities}});
    }
    Json j = {{"schema_version", kSchemaVersion},
              {"session_id", s.id},
              {"scenario", to_string(s.scenario)},
              {"stakes", to_string(builtin_scenario(s.scenario).stakes)},
              {"explanation_ui", to_string(s.ui)},
              {"hypotheses", to_json(s.engine.config().hypotheses)},
              {"config", to_json(s.engine.config())},
              {"steps", steps},
              {"final_posterior", s.engine.posterior().probabilities},
              {"classification", to_json(s.engine.classification())},
              {"return_code", s.return_code}};
    if (include_demographics) j["demographics"] = s.demographics ? *s.demographics : Json(nullptr);
    return j;
  }

  ServiceConfig config_;
  std::shared_ptr<const LikelihoodTable> table_;
  Clock clock_;
  EventLog log_;
  std::uint64_t master_seed_ = 0;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<LiveSession>> sessions_;
  std::vector<std::string> order_;
  std::uint64_t next_seq_ = 0;

  mutable std::mutex surveys_mu_;
  std::vector<SurveyResponse> surveys_;
};

}  // namespace fairperc

#endif  // FAIRPERC_SERVICE_HPP
