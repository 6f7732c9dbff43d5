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

#ifndef FEDCHOICE_EXPERIMENT_H_
#define FEDCHOICE_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedchoice/annealer.h"
#include "fedchoice/dataset.h"
#include "fedchoice/runtime.h"
#include "json.hpp"

namespace fedchoice {

using OrderedJson = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string &what) : std::runtime_error("config: " + what) {}
};

enum class TransportKind { kInProc, kTcp };

struct ExperimentConfig {
  // Data. With neither `dataset` nor `parts`, a synthetic dataset is drawn.
  std::optional<std::string> dataset;
  std::vector<std::string> parts;
  std::size_t synthetic_n = 246;
  BetaVector true_beta{0.35, -0.006, -0.001};
  AttributeRanges ranges;
  std::uint64_t data_seed = 2017;
  std::vector<std::size_t> partition_sizes{61, 61, 61, 63};
  std::uint64_t partition_seed = 7;

  // Estimation.
  AnnealingSchedule schedule;
  BetaVector beta_initial;
  std::uint64_t seed = 1;
  std::optional<double> null_ll;

  // Network and contracts.
  TransportKind transport = TransportKind::kInProc;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::int64_t timeout_ms = 30000;
  bool insecure = false;
  ContractTerms chief_terms{24 * 3600, false, true};
  ContractTerms worker_terms{24 * 3600, false, true};
  std::vector<std::optional<ContractTerms>> worker_terms_override;
  std::int64_t run_estimate_s = 2 * 3600;

  // Outputs.
  std::string ledger = "ledger.jsonl";
  std::uint64_t ledger_sample = 1;
  std::string report = "report.json";
  std::optional<std::string> table;
  bool record_trajectory = true;

  // Unknown keys are a ConfigError.
  static ExperimentConfig FromJson(const nlohmann::json &j);
  OrderedJson ToJson() const;
  void Validate() const;
};

struct ExperimentHooks {
  PlaintextTap tap;
};

struct ExperimentOutcome {
  OrderedJson report;
  ChiefResult chief;
  RegistrationResult registration;
  std::vector<WorkerReport> workers;
  std::vector<std::size_t> part_sizes;
};

// Loads or synthesizes the data, partitions it, starts one thread per
// worker, registers them, runs the chief to completion and writes the
// ledger and report files. Throws ProtocolError (and subclasses) on run
// failures and ConfigError on configuration problems.
ExperimentOutcome RunExperiment(const ExperimentConfig &config, const ExperimentHooks &hooks = {});

// Centralized annealing over pooled data with the chief's RNG contract.
AnnealResult CentralizedOracle(std::span<const Observation> data, const AnnealingSchedule &schedule,
                               std::uint64_t seed, const BetaVector &beta_initial = {}, bool record_trajectory = true);

// Returns a list of violated self-consistency rules (empty if consistent).
std::vector<std::string> CheckReport(const nlohmann::json &report);

// Plain-text rendering of the estimates and latency tables.
std::string FormatReportTable(const nlohmann::json &report);

}  // namespace fedchoice

#endif  // FEDCHOICE_EXPERIMENT_H_
