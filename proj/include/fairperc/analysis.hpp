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

// Batch simulation of notion-following and random responders, and the
// tabular reports computed from simulation output or exported sessions.

#ifndef FAIRPERC_ANALYSIS_HPP
#define FAIRPERC_ANALYSIS_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fairperc/errors.hpp"
#include "fairperc/inference.hpp"
#include "fairperc/random.hpp"
#include "fairperc/response_model.hpp"
#include "fairperc/scenario.hpp"
#include "fairperc/trace_log.hpp"

namespace fairperc {

enum class ReportKind : std::uint8_t {
  convergence_curves,
  classification_histogram,
  summary_table,
  demographic_breakdown,
  survey_tally
};

inline std::string_view to_string(ReportKind k) {
  switch (k) {
    case ReportKind::convergence_curves: return "convergence_curves";
    case ReportKind::classification_histogram: return "classification_histogram";
    case ReportKind::summary_table: return "summary_table";
    case ReportKind::demographic_breakdown: return "demographic_breakdown";
    case ReportKind::survey_tally: return "survey_tally";
  }
  return "?";
}

using Cell = std::variant<std::string, std::int64_t, double>;

struct Report {
  ReportKind kind = ReportKind::summary_table;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  Json metadata = Json::object();

  std::size_t column(std::string_view name) const {
    auto it = std::ranges::find(columns, name);
    if (it == columns.end()) throw InputError("report has no column " + std::string(name));
    return static_cast<std::size_t>(it - columns.begin());
  }

  double number(std::size_t row, std::string_view col) const {
    const auto& c = rows.at(row).at(column(col));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    throw InputError("cell is not numeric");
  }

  std::string text(std::size_t row, std::string_view col) const {
    return std::get<std::string>(rows.at(row).at(column(col)));
  }

  std::string to_csv() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6f", v);
                out << buf;
              } else {
                out << v;
              }
            },
            row[i]);
      }
      out << '\n';
    }
    return out.str();
  }

  Json sidecar() const {
    return {{"schema_version", kSchemaVersion}, {"kind", to_string(kind)}, {"columns", columns}, {"metadata", metadata}};
  }

  // Writes <prefix>.csv and <prefix>.json.
  void write(const std::filesystem::path& prefix) const {
    std::ofstream csv(prefix.string() + ".csv", std::ios::binary);
    std::ofstream meta(prefix.string() + ".json", std::ios::binary);
    if (!csv || !meta) throw ConfigError("cannot write report " + prefix.string());
    csv << to_csv();
    meta << sidecar().dump(2) << '\n';
  }
};

// Final state of one session, from an export line or a simulation run.
struct SessionRecord {
  std::string session_id;
  std::string scenario;
  HypothesisSet hypotheses;
  std::vector<double> final_posterior;
  std::optional<FairnessNotion> true_notion;  // simulations only
  std::optional<Json> demographics;
  std::size_t tests = 0;

  Json to_json() const {
    Json j = {{"schema_version", kSchemaVersion},
              {"session_id", session_id},
              {"scenario", scenario},
              {"hypotheses", fairperc::to_json(hypotheses)},
              {"final_posterior", final_posterior},
              {"tests", tests}};
    if (true_notion) j["true_notion"] = to_string(*true_notion);
    if (demographics) j["demographics"] = *demographics;
    return j;
  }

  static SessionRecord from_json(const Json& j) {
    SessionRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.hypotheses = hypotheses_from_json(j.at("hypotheses"));
    r.final_posterior = j.at("final_posterior").get<std::vector<double>>();
    if (r.final_posterior.size() != r.hypotheses.size())
      throw InputError("record " + r.session_id + ": posterior does not match hypothesis set");
    if (j.contains("true_notion")) r.true_notion = parse_notion(j["true_notion"].get<std::string>());
    if (j.contains("demographics") && j["demographics"].is_object()) r.demographics = j["demographics"];
    if (j.contains("tests")) r.tests = j["tests"].get<std::size_t>();
    else if (j.contains("steps")) r.tests = j["steps"].size();
    return r;
  }
};

inline std::vector<SessionRecord> read_records(std::istream& in) {
  std::vector<SessionRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(SessionRecord::from_json(Json::parse(line)));
  return out;
}

struct SurveyRecord {
  ScenarioId scenario;
  Stakes stakes;
  int chosen;
};

inline std::vector<SurveyRecord> read_surveys(std::istream& in) {
  std::vector<SurveyRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = Json::parse(line);
    const auto sid = parse_scenario(j.at("scenario").get<std::string>());
    out.push_back({sid, builtin_scenario(sid).stakes, parse_survey_choice(j.at("chosen").get<std::string>())});
  }
  return out;
}

struct SimulationSpec {
  enum class Responder : std::uint8_t { notion_follower, random } responder = Responder::notion_follower;
  FairnessNotion notion = FairnessNotion::DP;
  double temperature = 1.0;  // responder's own softmax temperature
  EngineConfig engine;
  int num_runs = 100;
  std::uint64_t master_seed = 0;

  void validate() const {
    engine.validate();
    if (num_runs < 1) throw ConfigError("num_runs must be >= 1");
    if (!(temperature > 0.0)) throw ConfigError("responder temperature must be positive");
  }

  Json to_json() const {
    return {{"responder", responder == Responder::random ? "random" : "notion_follower"},
            {"notion", to_string(notion)},
            {"temperature", temperature},
            {"engine", fairperc::to_json(engine)},
            {"num_runs", num_runs},
            {"master_seed", master_seed}};
  }
};

struct SimulationResult {
  Report curves;
  std::vector<SessionRecord> records;
  // 1-based step at which the tracked posterior first exceeded the
  // threshold; empty when it never did.
  std::vector<std::optional<int>> tests_to_threshold;
};

// Median with never-reached runs counted as `censor_at`.
inline double median_censored(const std::vector<std::optional<int>>& values, int censor_at) {
  if (values.empty()) return 0.0;
  std::vector<int> v;
  v.reserve(values.size());
  for (const auto& x : values) v.push_back(x ? *x : censor_at);
  std::ranges::sort(v);
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double median_of(std::vector<double> v) {
  std::ranges::sort(v);
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// Runs are independent: run r draws responder randomness from
// (master_seed, r) and, under random selection, test order from
// (selection seed, r).
inline SimulationResult run_simulation(const SimulationSpec& spec, std::shared_ptr<const LikelihoodTable> table) {
  spec.validate();
  const auto tracked = spec.responder == SimulationSpec::Responder::notion_follower
                           ? spec.engine.hypotheses.index_of(spec.notion)
                           : std::nullopt;
  std::vector<SessionTrace> traces(static_cast<std::size_t>(spec.num_runs));
  detail::parallel_for(spec.num_runs, [&](int run) {
    auto cfg = spec.engine;
    if (cfg.selection.kind == SelectionPolicy::Kind::random)
      cfg.selection.seed = mix_seed(spec.engine.selection.seed, static_cast<std::uint64_t>(run));
    if (cfg.first_test.kind == FirstTestPolicy::Kind::random)
      cfg.first_test.seed = mix_seed(spec.engine.first_test.seed, static_cast<std::uint64_t>(run));
    auto rng = make_rng(spec.master_seed, static_cast<std::uint64_t>(run));
    Responder responder;
    if (spec.responder == SimulationSpec::Responder::random) {
      responder = [&rng](const Test& t) { return simulate_random_responder(t, rng); };
    } else {
      responder = [&](const Test& t) {
        const auto [e1, e2] = table->entropies(t.id, spec.notion);
        return sample_choice(softmax_first(e1, e2, spec.temperature), rng);
      };
    }
    traces[static_cast<std::size_t>(run)] = run_session(table, cfg, responder);
  });

  const double threshold = spec.engine.classification_threshold;
  auto tracked_value = [&](const Posterior& p) { return tracked ? p[*tracked] : p.max(); };

  SimulationResult result;
  const auto steps = static_cast<std::size_t>(spec.engine.max_tests);
  std::vector<std::vector<double>> by_step(steps + 1);
  for (std::size_t run = 0; run < traces.size(); ++run) {
    const auto& tr = traces[run];
    std::optional<int> reached;
    Posterior current = tr.prior;
    by_step[0].push_back(tracked_value(current));
    for (std::size_t k = 1; k <= steps; ++k) {
      if (k <= tr.steps.size()) current = tr.steps[k - 1].posterior;
      const double v = tracked_value(current);
      by_step[k].push_back(v);
      if (!reached && k <= tr.steps.size() && v > threshold) reached = static_cast<int>(k);
    }
    result.tests_to_threshold.push_back(reached);

    SessionRecord rec;
    rec.session_id = "sim-" + std::to_string(run);
    rec.scenario = "simulation";
    rec.hypotheses = spec.engine.hypotheses;
    rec.final_posterior = current.probabilities;
    if (spec.responder == SimulationSpec::Responder::notion_follower) rec.true_notion = spec.notion;
    rec.tests = tr.steps.size();
    result.records.push_back(std::move(rec));
  }

  auto& rep = result.curves;
  rep.kind = ReportKind::convergence_curves;
  rep.columns = {"step", tracked ? "mean_posterior_true" : "mean_posterior_max",
                 tracked ? "median_posterior_true" : "median_posterior_max", "fraction_above_threshold"};
  for (std::size_t k = 0; k <= steps; ++k) {
    const auto& v = by_step[k];
    double sum = 0.0;
    std::int64_t above = 0;
    for (double x : v) {
      sum += x;
      above += x > threshold;
    }
    rep.rows.push_back({static_cast<std::int64_t>(k), sum / static_cast<double>(v.size()), median_of(v),
                        static_cast<double>(above) / static_cast<double>(v.size())});
  }
  std::int64_t reached_count = 0;
  Json ttt = Json::array();
  for (const auto& t : result.tests_to_threshold) {
    reached_count += t.has_value();
    ttt.push_back(t ? Json(*t) : Json(nullptr));
  }
  rep.metadata = {{"spec", spec.to_json()},
                  {"threshold", threshold},
                  {"test_space_size", table->size()},
                  {"tracked", tracked ? "true_notion" : "max_posterior"},
                  {"reached_fraction", static_cast<double>(reached_count) / spec.num_runs},
                  {"median_tests_to_threshold", median_censored(result.tests_to_threshold, spec.engine.max_tests + 1)},
                  {"median_censored_at", spec.engine.max_tests + 1},
                  {"tests_to_threshold", ttt}};
  return result;
}

namespace detail {

inline const HypothesisSet& common_hypotheses(const std::vector<SessionRecord>& records) {
  const auto& h = records.front().hypotheses;
  for (const auto& r : records)
    if (!(r.hypotheses == h)) throw InputError("records mix different hypothesis sets");
  return h;
}

}  // namespace detail

inline const std::vector<double>& default_bin_edges() {
  static const std::vector<double> edges = {0.25, 0.4, 0.6, 0.8, 1.0};
  return edges;
}

// Counts per (MAP notion, likelihood bin). Bins are (lo, hi]; a MAP
// probability at or below the first edge lands in the first bin.
inline Report classification_histogram(const std::vector<SessionRecord>& records,
                                       const std::vector<double>& bin_edges = default_bin_edges()) {
  if (bin_edges.size() < 2 || !std::ranges::is_sorted(bin_edges)) throw InputError("bin edges must be ascending, >= 2");
  Report rep;
  rep.kind = ReportKind::classification_histogram;
  rep.columns = {"notion", "bin_lo", "bin_hi", "count"};
  rep.metadata = {{"bin_edges", bin_edges}, {"records", records.size()}};
  if (records.empty()) return rep;
  const auto& hyp = detail::common_hypotheses(records);
  const auto nbins = bin_edges.size() - 1;
  std::vector<std::vector<std::int64_t>> counts(hyp.size(), std::vector<std::int64_t>(nbins, 0));
  for (const auto& r : records) {
    const Posterior p{r.final_posterior};
    const auto i = p.argmax();
    std::size_t b = 0;
    while (b + 1 < nbins && p[i] > bin_edges[b + 1]) ++b;
    ++counts[i][b];
  }
  for (std::size_t i = 0; i < hyp.size(); ++i)
    for (std::size_t b = 0; b < nbins; ++b)
      rep.rows.push_back({std::string(to_string(hyp.notions[i])), bin_edges[b], bin_edges[b + 1], counts[i][b]});
  rep.metadata["hypotheses"] = to_json(hyp);
  return rep;
}

// Percentage of records per scenario matched to each notion above the
// threshold, plus "none".
inline Report summary_table(const std::vector<SessionRecord>& records, double threshold = 0.8) {
  Report rep;
  rep.kind = ReportKind::summary_table;
  rep.metadata = {{"threshold", threshold}, {"records", records.size()}};
  if (records.empty()) {
    rep.columns = {"scenario", "n", "none"};
    return rep;
  }
  const auto& hyp = detail::common_hypotheses(records);
  rep.columns = {"scenario", "n"};
  for (auto n : hyp.notions) rep.columns.emplace_back(to_string(n));
  rep.columns.emplace_back("none");
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::int64_t>> counts;
  for (const auto& r : records) {
    auto [it, fresh] = counts.try_emplace(r.scenario, std::vector<std::int64_t>(hyp.size() + 1, 0));
    if (fresh) order.push_back(r.scenario);
    const Posterior p{r.final_posterior};
    const auto i = p.argmax();
    ++it->second[p[i] > threshold ? i : hyp.size()];
  }
  for (const auto& sc : order) {
    const auto& c = counts[sc];
    std::int64_t n = 0;
    for (auto x : c) n += x;
    std::vector<Cell> row = {sc, n};
    for (auto x : c) row.emplace_back(100.0 * static_cast<double>(x) / static_cast<double>(n));
    rep.rows.push_back(std::move(row));
  }
  rep.metadata["hypotheses"] = to_json(hyp);
  return rep;
}

// Per value of one demographic attribute, the percentage of sessions matched
// to `notion` above the threshold. Records without the attribute are
// reported under "(missing)"; if no record carries it at all that is an error.
inline Report demographic_breakdown(const std::vector<SessionRecord>& records, const std::string& attribute,
                                    FairnessNotion notion = FairnessNotion::DP, double threshold = 0.8) {
  Report rep;
  rep.kind = ReportKind::demographic_breakdown;
  rep.columns = {attribute, "n", "matched_pct"};
  rep.metadata = {{"attribute", attribute}, {"notion", to_string(notion)}, {"threshold", threshold}};
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> cells;
  bool seen = false;
  for (const auto& r : records) {
    std::string value = "(missing)";
    if (r.demographics && r.demographics->contains(attribute) && (*r.demographics)[attribute].is_string()) {
      value = (*r.demographics)[attribute].get<std::string>();
      seen = true;
    }
    const Posterior p{r.final_posterior};
    const auto i = p.argmax();
    auto& [n, matched] = cells[value];
    ++n;
    matched += p[i] > threshold && r.hypotheses.notions[i] == notion;
  }
  if (!seen) throw MissingDataError("no record carries demographic attribute '" + attribute + "'");
  for (const auto& [value, c] : cells)
    rep.rows.push_back({value, c.first, 100.0 * static_cast<double>(c.second) / static_cast<double>(c.first)});
  return rep;
}

inline Report survey_tally(const std::vector<SurveyRecord>& responses) {
  Report rep;
  rep.kind = ReportKind::survey_tally;
  rep.columns = {"scenario", "stakes", "A1", "A2", "A3", "total"};
  std::map<ScenarioId, std::array<std::int64_t, 3>> counts;
  for (const auto& r : responses) ++counts[r.scenario][static_cast<std::size_t>(r.chosen)];
  for (const auto& [sid, c] : counts)
    rep.rows.push_back({std::string(to_string(sid)), std::string(to_string(builtin_scenario(sid).stakes)), c[0], c[1],
                        c[2], c[0] + c[1] + c[2]});
  rep.metadata = {{"responses", responses.size()}};
  return rep;
}

}  // namespace fairperc

#endif  // FAIRPERC_ANALYSIS_HPP
