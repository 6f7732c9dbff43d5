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

#ifndef FEDCHOICE_RUNTIME_H_
#define FEDCHOICE_RUNTIME_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedchoice/annealer.h"
#include "fedchoice/choice_model.h"
#include "fedchoice/ledger.h"
#include "fedchoice/message.h"
#include "fedchoice/metrics.h"
#include "fedchoice/secure_channel.h"
#include "fedchoice/transport.h"

namespace fedchoice {

inline constexpr char kSurveySchemaId[] = "mode-choice/auto-train/v1";
inline constexpr char kObjective[] = "binary-logit-log-likelihood";
inline constexpr auto kDefaultRoundTimeout = std::chrono::seconds(30);

class WorkerTimeout : public ProtocolError {
 public:
  WorkerTimeout(std::uint64_t round, const std::string &worker)
      : ProtocolError("worker " + worker + " timed out in round " + std::to_string(round)), round_(round),
        worker_(worker) {}
  std::uint64_t round() const { return round_; }
  const std::string &worker() const { return worker_; }

 private:
  std::uint64_t round_;
  std::string worker_;
};

class RoundMismatch : public ProtocolError {
 public:
  RoundMismatch(std::uint64_t expected, std::uint64_t got, const std::string &worker)
      : ProtocolError("worker " + worker + " answered round " + std::to_string(got) + " during round " +
                      std::to_string(expected)) {}
};

class TermsRejected : public ProtocolError {
 public:
  explicit TermsRejected(const std::string &worker) : ProtocolError("contract terms of " + worker + " rejected") {}
};

class NoWorkers : public ProtocolError {
 public:
  NoWorkers() : ProtocolError("chief_run requires at least one registered worker (W = 0)") {}
};

// ---------------------------------------------------------------------------
// Worker

enum class WorkerOutcome { kCompleted, kRejected, kChannelClosed, kFailed };

struct WorkerReport {
  std::string node_id;
  WorkerOutcome outcome = WorkerOutcome::kFailed;
  std::string error;
  std::uint64_t evaluations = 0;
  LatencyRecord latency;
  TrafficCounters traffic;
  // Types sent after the handshake completed, in order of first use.
  std::vector<MsgType> types_sent_after_registration;
};

// Data holder. Observations stay in this object; only Evaluation sums leave.
class WorkerNode {
 public:
  WorkerNode(std::string node_id, std::vector<Observation> observations, ContractTerms terms,
             ChannelOptions options = {});

  // Serves one chief until ModelFinal or until the channel closes.
  WorkerReport Serve(std::unique_ptr<Transport> transport,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(kDefaultRoundTimeout));

  const std::string &node_id() const { return node_id_; }
  std::size_t observation_count() const { return observations_.size(); }

 private:
  std::string node_id_;
  std::vector<Observation> observations_;
  ContractTerms terms_;
  ChannelOptions options_;
};

// ---------------------------------------------------------------------------
// Chief

struct ChiefConfig {
  std::string node_id = "chief";
  AnnealingSchedule schedule;
  BetaVector beta_initial;
  std::uint64_t seed = 1;
  ContractTerms terms{24 * 3600, false, true};
  std::int64_t run_estimate_s = 2 * 3600;
  std::chrono::milliseconds timeout = kDefaultRoundTimeout;
  // Record every Nth data transaction; lifecycle entries are always recorded.
  std::uint64_t ledger_sample = 1;
  ChannelOptions channel;
  std::string incentive = "research-credit";
  // Needed when beta_initial is not zero; otherwise the first round is the null.
  std::optional<double> null_ll;
  bool record_trajectory = true;
};

struct RegistrationResult {
  std::vector<std::string> registered;
  std::vector<std::pair<std::string, std::string>> rejected;  // (node, reason)
};

struct WorkerLink {
  std::string node_id;
  std::unique_ptr<SecureChannel> channel;
};

struct ChiefResult {
  BetaVector beta;
  double ll = 0.0;
  FitStatistics fit;
  LatencyRecord latency;
  AnnealResult anneal;
  std::uint64_t broadcasts = 0;
  std::vector<std::pair<std::string, TrafficCounters>> worker_traffic;  // chief-side view
};

// Coordinator. Owns the schedule and every random draw, never observations.
class ChiefNode {
 public:
  ChiefNode(ChiefConfig config, Ledger &ledger);
  ~ChiefNode();

  // Writes the DomainAnnounce and SurveyPublish ledger entries.
  void AnnounceDomain();

  // Announces to each connected peer, checks its terms, performs the
  // handshake and records ChannelOpen. Incompatible peers are closed and
  // listed as rejected; the others are unaffected.
  RegistrationResult RegisterWorkers(std::vector<std::unique_ptr<Transport>> pending);

  // Distributed annealing over the registered workers, then ModelFinal to
  // each and a ModelPublish ledger entry. Throws NoWorkers, WorkerTimeout,
  // RoundMismatch; channels are closed on failure.
  ChiefResult Run();

  LatencyRecord CollectMetrics() const { return latency_; }
  // Closes every registered channel; workers observe ChannelClosed.
  void Abort() { CloseAll(); }
  std::size_t worker_count() const { return workers_.size(); }

 private:
  class DistributedEvaluator;
  void RecordData(const std::string &sender, const std::string &receiver, TxType type);
  void CloseAll();

  ChiefConfig config_;
  Ledger &ledger_;
  std::vector<WorkerLink> workers_;
  LatencyRecord latency_;
  std::uint64_t data_tx_ = 0;
};

}  // namespace fedchoice

#endif  // FEDCHOICE_RUNTIME_H_
