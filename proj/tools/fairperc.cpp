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

// Batch simulations, report generation and test-space export.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fairperc.hpp"

using namespace fairperc;

namespace {

struct SpaceOptions {
  std::string config_path;
  std::string truth;
  int min_errors = -1;
  int max_errors = -1;
  double temperature = 0.0;
  std::string grouping;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config (truth, min_errors, max_errors, temperature, grouping)");
    cmd->add_option("--truth", truth, "Truth label bits, e.g. 1101001010");
    cmd->add_option("--min-errors", min_errors, "Minimum errors per algorithm");
    cmd->add_option("--max-errors", max_errors, "Maximum errors per algorithm");
    cmd->add_option("--temperature", temperature, "Softmax temperature of the inference model");
    cmd->add_option("--grouping", grouping, "gender | race | intersection");
  }

  ServiceConfig resolve() const {
    ServiceConfig c = config_path.empty() ? ServiceConfig{} : ServiceConfig::load(config_path);
    if (!truth.empty()) c.space.truth_policy = FixedTruth{LabelVector::from_string(truth)};
    if (min_errors >= 0) c.space.min_errors = static_cast<std::size_t>(min_errors);
    if (max_errors >= 0) c.space.max_errors = static_cast<std::size_t>(max_errors);
    if (temperature > 0.0) c.response.temperature = temperature;
    if (!grouping.empty()) c.response.grouping = parse_dimension(grouping);
    return c;
  }
};

HypothesisSet hypothesis_set(const std::string& name) {
  if (name == "default") return HypothesisSet::default_set();
  if (name == "appendix") return HypothesisSet::appendix_set();
  HypothesisSet h;
  std::stringstream ss(name);
  for (std::string item; std::getline(ss, item, ',');) h.notions.push_back(parse_notion(item));
  h.validate();
  return h;
}

void emit(const Report& report, const std::string& output) {
  if (output.empty()) {
    std::cout << report.to_csv();
  } else {
    report.write(output);
    std::cerr << "wrote " << output << ".csv and " << output << ".json\n";
  }
}

std::vector<SessionRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  return read_records(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive fairness-perception experiments: simulation and reports"};
  app.require_subcommand(1);

  SpaceOptions enum_space;
  std::string enum_out;
  auto* enumerate = app.add_subcommand("enumerate-tests", "Write the test space, one test per line");
  enum_space.add_to(enumerate);
  enumerate->add_option("-o,--output", enum_out, "Output file (default stdout)");

  SpaceOptions sim_space;
  std::string responder = "follower", notion = "DP", selection = "adaptive", hypotheses = "default",
              first_test = "argmax", sim_out, records_out;
  double responder_temperature = 1.0, threshold = 0.8;
  int runs = 100, max_tests = 20;
  std::uint64_t seed = 0, selection_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Simulate responders and report convergence curves");
  sim_space.add_to(simulate);
  simulate->add_option("--responder", responder, "follower | random")->check(CLI::IsMember({"follower", "random"}));
  simulate->add_option("--notion", notion, "Notion followed by simulated responders");
  simulate->add_option("--responder-temperature", responder_temperature, "Responder softmax temperature");
  simulate->add_option("--selection", selection, "adaptive | random")->check(CLI::IsMember({"adaptive", "random"}));
  simulate->add_option("--selection-seed", selection_seed, "Seed for random test order");
  simulate->add_option("--first-test", first_test, "argmax | random")->check(CLI::IsMember({"argmax", "random"}));
  simulate->add_option("--hypotheses", hypotheses, "default | appendix | comma list of notions");
  simulate->add_option("--runs", runs, "Number of simulated responders");
  simulate->add_option("--max-tests", max_tests, "Tests per run");
  simulate->add_option("--threshold", threshold, "Classification threshold");
  simulate->add_option("--seed", seed, "Master seed");
  simulate->add_option("-o,--output", sim_out, "Report path prefix (writes .csv and .json)");
  simulate->add_option("--records", records_out, "Also write per-run session records (JSONL)");

  std::string hist_in, hist_out;
  std::vector<double> bins = default_bin_edges();
  auto* histogram = app.add_subcommand("histogram", "Matched notion x likelihood bin counts");
  histogram->add_option("-i,--input", hist_in, "Session records (JSONL)")->required();
  histogram->add_option("--bins", bins, "Bin edges")->delimiter(',');
  histogram->add_option("-o,--output", hist_out, "Report path prefix");

  std::string sum_in, sum_out;
  double sum_threshold = 0.8;
  auto* summary = app.add_subcommand("summary", "Percentage matched per notion above the threshold");
  summary->add_option("-i,--input", sum_in, "Session records (JSONL)")->required();
  summary->add_option("--threshold", sum_threshold, "Classification threshold");
  summary->add_option("-o,--output", sum_out, "Report path prefix");

  std::string demo_in, demo_out, attribute, demo_notion = "DP";
  double demo_threshold = 0.8;
  auto* demographics = app.add_subcommand("demographics", "Matched percentage per demographic subgroup");
  demographics->add_option("-i,--input", demo_in, "Session export with demographics (JSONL)")->required();
  demographics->add_option("--attribute", attribute, "Demographic field")->required();
  demographics->add_option("--notion", demo_notion, "Notion to report");
  demographics->add_option("--threshold", demo_threshold, "Classification threshold");
  demographics->add_option("-o,--output", demo_out, "Report path prefix");

  std::string survey_in, survey_out;
  auto* tally = app.add_subcommand("survey-tally", "Per-scenario survey choice counts");
  tally->add_option("-i,--input", survey_in, "Survey export (JSONL)")->required();
  tally->add_option("-o,--output", survey_out, "Report path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enumerate) {
      const auto cfg = enum_space.resolve();
      const auto space = enumerate_tests(cfg.space);
      if (enum_out.empty()) {
        write_tests(std::cout, space);
      } else {
        std::ofstream out(enum_out, std::ios::binary);
        write_tests(out, space);
      }
      std::cerr << "enumerated " << space.size() << " tests\n";
    } else if (*simulate) {
      const auto cfg = sim_space.resolve();
      auto space = std::make_shared<const TestSpace>(enumerate_tests(cfg.space));
      auto table = std::make_shared<const LikelihoodTable>(space, cfg.response);
      SimulationSpec spec;
      spec.responder = responder == "random" ? SimulationSpec::Responder::random
                                             : SimulationSpec::Responder::notion_follower;
      spec.notion = parse_notion(notion);
      spec.temperature = responder_temperature;
      spec.engine.hypotheses = hypothesis_set(hypotheses);
      spec.engine.max_tests = max_tests;
      spec.engine.classification_threshold = threshold;
      spec.engine.response = cfg.response;
      if (selection == "random") spec.engine.selection = SelectionPolicy::random(selection_seed);
      if (first_test == "random") spec.engine.first_test = FirstTestPolicy::random(seed);
      spec.num_runs = runs;
      spec.master_seed = seed;
      std::cerr << "test space: " << space->size() << " tests\n";
      const auto result = run_simulation(spec, table);
      emit(result.curves, sim_out);
      if (!records_out.empty()) {
        std::ofstream out(records_out, std::ios::binary);
        for (const auto& r : result.records) out << r.to_json().dump() << '\n';
      }
      std::cerr << "median tests to threshold: " << result.curves.metadata["median_tests_to_threshold"] << '\n';
    } else if (*histogram) {
      emit(classification_histogram(load_records(hist_in), bins), hist_out);
    } else if (*summary) {
      emit(summary_table(load_records(sum_in), sum_threshold), sum_out);
    } else if (*demographics) {
      emit(demographic_breakdown(load_records(demo_in), attribute, parse_notion(demo_notion), demo_threshold), demo_out);
    } else if (*tally) {
      std::ifstream in(survey_in);
      if (!in) throw ConfigError("cannot read " + survey_in);
      emit(survey_tally(read_surveys(in)), survey_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
