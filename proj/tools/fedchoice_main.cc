/**
 * Copyright 2026 The fedchoice Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: synthetic data, partitioning, distributed and
// centralized estimation, ledger audit and report rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fedchoice/experiment.h"
#include "fedchoice/ledger.h"
#include "json.hpp"

namespace {

using namespace fedchoice;

constexpr int kExitOk = 0;
constexpr int kExitProtocol = 1;
constexpr int kExitConfig = 2;

BetaVector BetaFromVector(const std::vector<double> &v) { return {v.at(0), v.at(1), v.at(2)}; }

nlohmann::json ReadJsonFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct ScheduleFlags {
  bool fast = false;
  std::optional<double> temp_initial, temp_min, alpha, step;
  std::optional<std::uint64_t> inner;

  void Add(CLI::App *cmd) {
    cmd->add_flag("--fast", fast, "CI profile: 100 inner iterations, temp_min 1e-3");
    cmd->add_option("--temp-initial", temp_initial, "Initial temperature");
    cmd->add_option("--temp-min", temp_min, "Stop once the temperature reaches this value");
    cmd->add_option("--alpha", alpha, "Geometric cooling factor");
    cmd->add_option("--inner", inner, "Proposals per temperature level");
    cmd->add_option("--step", step, "Half-width of the uniform proposal step");
  }
  void Apply(AnnealingSchedule &s) const {
    if (fast) s = AnnealingSchedule::Fast();
    if (temp_initial) s.temp_initial = *temp_initial;
    if (temp_min) s.temp_min = *temp_min;
    if (alpha) s.alpha = *alpha;
    if (inner) s.inner_iterations = *inner;
    if (step) s.step_half_width = *step;
  }
};

void PrintVerdict(const ChainVerdict &v, std::ostream &out) {
  out << "chain: " << (v.valid ? "valid" : "INVALID") << "\n";
  if (!v.valid) {
    out << "first bad index: " << *v.first_bad_index << " (" << v.reason << ")\n";
    return;
  }
  out << "entries: " << v.entries << "\n";
  for (const auto &[type, count] : v.counts) out << "  " << std::left << std::setw(16) << ToString(type) << count << "\n";
  out << "parties:";
  for (const auto &p : v.parties) out << " " << p;
  out << "\n";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Privacy-preserving distributed estimation of a binary logit mode-choice model"};
  app.require_subcommand(1);

  // gen-data
  auto *gen = app.add_subcommand("gen-data", "Draw a synthetic auto/train survey with known parameters");
  std::size_t gen_n = 246;
  std::vector<double> gen_beta{0.35, -0.006, -0.001};
  std::vector<double> cost_range{20.0, 300.0};
  std::vector<double> time_range{60.0, 600.0};
  double auto_cost_shift = 0.0;
  std::uint64_t gen_seed = 2017;
  std::string gen_out;
  gen->add_option("-n,--rows", gen_n, "Number of observations")->check(CLI::PositiveNumber);
  gen->add_option("--beta", gen_beta, "True parameters: asc cost time")->expected(3);
  gen->add_option("--cost-range", cost_range, "Cost range (min max)")->expected(2);
  gen->add_option("--time-range", time_range, "Travel-time range in minutes (min max)")->expected(2);
  gen->add_option("--auto-cost-shift", auto_cost_shift, "Shift applied to the auto cost range only");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("-o,--out", gen_out, "Output CSV (default: stdout)");

  // partition
  auto *part = app.add_subcommand("partition", "Split a dataset into per-worker files");
  std::string part_in;
  std::vector<std::size_t> part_sizes{61, 61, 61, 63};
  std::uint64_t part_seed = 7;
  std::string part_dir = ".";
  std::string part_prefix = "part";
  part->add_option("input", part_in, "Input CSV")->required();
  part->add_option("--sizes", part_sizes, "Rows per worker")->delimiter(',');
  part->add_option("--seed", part_seed, "Permutation seed");
  part->add_option("--out-dir", part_dir, "Output directory");
  part->add_option("--prefix", part_prefix, "File name prefix");

  // run
  auto *run = app.add_subcommand("run", "Run the distributed estimation (chief and workers)");
  std::string run_config;
  std::optional<std::uint64_t> run_seed, run_sample;
  std::optional<std::string> run_transport, run_ledger, run_report, run_table, run_dataset, run_host;
  std::optional<std::uint16_t> run_port;
  std::optional<std::int64_t> run_timeout;
  std::vector<std::string> run_parts;
  std::vector<std::size_t> run_sizes;
  bool run_insecure = false;
  ScheduleFlags run_sched;
  run->add_option("-c,--config", run_config, "Experiment config (JSON)");
  run->add_option("--seed", run_seed, "Chief RNG seed");
  run->add_option("--transport", run_transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
  run->add_option("--host", run_host, "TCP host for the chief listener");
  run->add_option("--port", run_port, "TCP port (0 = ephemeral)");
  run->add_option("--timeout-ms", run_timeout, "Per-round timeout");
  run->add_option("--ledger", run_ledger, "Ledger output path");
  run->add_option("--ledger-sample", run_sample, "Record every Nth data transaction");
  run->add_option("--report", run_report, "Report JSON path");
  run->add_option("--table", run_table, "Report text table path");
  run->add_option("--dataset", run_dataset, "Pooled dataset CSV to partition");
  run->add_option("--parts", run_parts, "Pre-partitioned worker CSVs");
  run->add_option("--sizes", run_sizes, "Partition sizes")->delimiter(',');
  run->add_flag("--insecure", run_insecure, "Disable channel encryption (debugging only)");
  run_sched.Add(run);

  // centralized
  auto *cen = app.add_subcommand("centralized", "Anneal on pooled data with the chief's RNG contract");
  std::optional<std::string> cen_dataset;
  std::uint64_t cen_seed = 1;
  std::optional<std::string> cen_traj;
  ScheduleFlags cen_sched;
  cen->add_option("--dataset", cen_dataset, "Dataset CSV (default: synthetic 246 rows)");
  cen->add_option("--seed", cen_seed, "RNG seed");
  cen->add_option("--trajectory", cen_traj, "Write the accepted-state trajectory as JSON");
  cen_sched.Add(cen);

  // verify-ledger
  auto *ver = app.add_subcommand("verify-ledger", "Check the hash chain of a ledger file");
  std::string ver_path;
  ver->add_option("ledger", ver_path, "Ledger file")->required();

  // report
  auto *rep = app.add_subcommand("report", "Render and check a run report");
  std::string rep_path;
  rep->add_option("report", rep_path, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      if (gen_beta.size() != 3) throw ConfigError("--beta takes three values");
      AttributeRanges ranges{cost_range[0], cost_range[1], time_range[0], time_range[1], auto_cost_shift};
      SurveyDataset ds;
      try {
        ds = GenerateSynthetic(gen_n, BetaFromVector(gen_beta), ranges, gen_seed);
      } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
      }
      if (gen_out.empty()) {
        std::cout << ToCsv(ds.rows);
      } else {
        WriteCsv(gen_out, ds.rows);
        std::cerr << "wrote " << ds.rows.size() << " rows to " << gen_out << "\n";
      }
      return kExitOk;
    }

    if (*part) {
      SurveyDataset ds;
      std::vector<std::vector<Observation>> parts;
      try {
        ds = ReadCsv(part_in);
        parts = Partition(ds.rows, part_sizes, part_seed);
      } catch (const DatasetError &e) {
        throw ConfigError(e.what());
      }
      std::filesystem::create_directories(part_dir);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto path = std::filesystem::path(part_dir) / (part_prefix + "-" + std::to_string(i + 1) + ".csv");
        WriteCsv(path, parts[i]);
        std::cout << path.string() << " " << parts[i].size() << "\n";
      }
      return kExitOk;
    }

    if (*run) {
      ExperimentConfig cfg = run_config.empty() ? ExperimentConfig{} : ExperimentConfig::FromJson(ReadJsonFile(run_config));
      run_sched.Apply(cfg.schedule);
      if (run_seed) cfg.seed = *run_seed;
      if (run_transport) cfg.transport = *run_transport == "tcp" ? TransportKind::kTcp : TransportKind::kInProc;
      if (run_host) cfg.host = *run_host;
      if (run_port) cfg.port = *run_port;
      if (run_timeout) cfg.timeout_ms = *run_timeout;
      if (run_ledger) cfg.ledger = *run_ledger;
      if (run_sample) cfg.ledger_sample = *run_sample;
      if (run_report) cfg.report = *run_report;
      if (run_table) cfg.table = *run_table;
      if (run_dataset) cfg.dataset = *run_dataset;
      if (!run_parts.empty()) cfg.parts = run_parts;
      if (!run_sizes.empty()) cfg.partition_sizes = run_sizes;
      if (run_insecure) cfg.insecure = true;

      const ExperimentOutcome out = RunExperiment(cfg);
      for (const auto &[node, reason] : out.registration.rejected) {
        std::cerr << "rejected " << node << ": " << reason << "\n";
      }
      std::cout << FormatReportTable(nlohmann::json::parse(out.report.dump()));
      std::cout << "\nreport: " << cfg.report << "\nledger: " << cfg.ledger << "\n";
      return kExitOk;
    }

    if (*cen) {
      AnnealingSchedule schedule;
      cen_sched.Apply(schedule);
      SurveyDataset ds;
      try {
        schedule.Validate();
        ds = cen_dataset ? ReadCsv(*cen_dataset)
                         : GenerateSynthetic(246, ExperimentConfig{}.true_beta, AttributeRanges{}, 2017);
      } catch (const std::exception &e) {
        throw ConfigError(e.what());
      }
      const AnnealResult res = CentralizedOracle(ds.rows, schedule, cen_seed, {}, cen_traj.has_value());
      const double null_ll = choice_model::NullLogLikelihood(ds.rows.size());
      std::cout << std::setprecision(10);
      std::cout << "observations: " << ds.rows.size() << "\n";
      std::cout << "beta: " << res.beta.asc << " " << res.beta.cost << " " << res.beta.time << "\n";
      try {
        const auto se = choice_model::StdErrors(res.beta, ds.rows);
        std::cout << "std errors: " << se[0] << " " << se[1] << " " << se[2] << "\n";
      } catch (const SingularInformationError &e) {
        std::cout << "std errors: n/a (" << e.what() << ")\n";
      }
      std::cout << "null ll: " << null_ll << "\nfinal ll: " << res.ll
                << "\nrho square: " << choice_model::RhoSquare(null_ll, res.ll) << "\n";
      std::cout << "evaluator calls: " << res.evaluator_calls << "  accepted: " << res.accepted << "\n";
      if (cen_traj) {
        nlohmann::ordered_json traj = nlohmann::ordered_json::array();
        for (const auto &p : res.trajectory) {
          traj.push_back({{"round", p.round},
                          {"beta", {p.beta.asc, p.beta.cost, p.beta.time}},
                          {"ll", p.ll},
                          {"temp", p.temp}});
        }
        std::ofstream(*cen_traj) << traj.dump() << "\n";
      }
      return kExitOk;
    }

    if (*ver) {
      try {
        const ChainVerdict v = VerifyChain(ver_path);
        PrintVerdict(v, std::cout);
        return v.valid ? kExitOk : kExitProtocol;
      } catch (const MalformedEntry &e) {
        std::cout << "chain: INVALID\n";
        if (e.line() >= 2) std::cout << "first bad index: " << e.line() - 2 << " (malformed entry)\n";
        std::cerr << e.what() << "\n";
        return kExitProtocol;
      }
    }

    if (*rep) {
      const nlohmann::json report = ReadJsonFile(rep_path);
      std::cout << FormatReportTable(report);
      const auto problems = CheckReport(report);
      for (const auto &p : problems) std::cerr << "inconsistent: " << p << "\n";
      return problems.empty() ? kExitOk : kExitProtocol;
    }
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitProtocol;
  }
  return kExitOk;
}
