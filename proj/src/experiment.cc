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

#include "fedchoice/experiment.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace fedchoice {
namespace {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

template <typename T>
T Get(const Json &j, const char *key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

void RejectUnknown(const Json &j, std::initializer_list<const char *> allowed, const std::string &where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto &[key, _] : j.items()) {
    bool ok = false;
    for (const char *a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

BetaVector BetaFromJson(const Json &j, const char *what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be an array of three numbers");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const Json::exception &) {
    throw ConfigError(std::string(what) + " must be an array of three numbers");
  }
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

OrderedJson BetaToJson(const BetaVector &b) { return OrderedJson::array({b.asc, b.cost, b.time}); }

ContractTerms TermsFromJson(const Json &j, const std::string &where) {
  RejectUnknown(j, {"temporality", "idle_only", "public_share"}, where);
  ContractTerms t;
  if (j.contains("temporality")) t.temporality_s = Get<std::int64_t>(j, "temporality");
  if (j.contains("idle_only")) t.idle_only = Get<bool>(j, "idle_only");
  if (j.contains("public_share")) t.public_share = Get<bool>(j, "public_share");
  return t;
}

OrderedJson TermsToJson(const ContractTerms &t) {
  return {{"temporality", t.temporality_s}, {"idle_only", t.idle_only}, {"public_share", t.public_share}};
}

OrderedJson ScheduleToJson(const AnnealingSchedule &s) {
  return {{"temp_initial", s.temp_initial},
          {"temp_min", s.temp_min},
          {"alpha", s.alpha},
          {"inner_iterations", s.inner_iterations},
          {"step_half_width", s.step_half_width}};
}

OrderedJson StatsToJson(const LatencyStats &s) {
  return {{"count", s.count()}, {"mean_s", s.mean()}, {"sigma_s", s.sigma()}};
}

OrderedJson LatencyToJson(const LatencyRecord &r) {
  return {{"send", StatsToJson(r.send)}, {"get", StatsToJson(r.get)}};
}

std::string_view OutcomeName(WorkerOutcome o) {
  switch (o) {
    case WorkerOutcome::kCompleted:
      return "completed";
    case WorkerOutcome::kRejected:
      return "rejected";
    case WorkerOutcome::kChannelClosed:
      return "channel-closed";
    case WorkerOutcome::kFailed:
      return "failed";
  }
  return "unknown";
}

}  // namespace

ExperimentConfig ExperimentConfig::FromJson(const Json &j) {
  RejectUnknown(j,
                {"dataset", "parts", "synthetic_n", "true_beta", "ranges", "data_seed", "partition_sizes",
                 "partition_seed", "profile", "schedule", "beta_initial", "seed", "null_ll", "transport", "host",
                 "port", "timeout_ms", "insecure", "chief_terms", "worker_terms", "worker_terms_override",
                 "run_estimate_s", "ledger", "ledger_sample", "report", "table", "record_trajectory"},
                "config");
  ExperimentConfig c;
  if (j.contains("dataset")) c.dataset = Get<std::string>(j, "dataset");
  if (j.contains("parts")) c.parts = Get<std::vector<std::string>>(j, "parts");
  if (j.contains("synthetic_n")) c.synthetic_n = Get<std::size_t>(j, "synthetic_n");
  if (j.contains("true_beta")) c.true_beta = BetaFromJson(j.at("true_beta"), "true_beta");
  if (j.contains("ranges")) {
    const Json &r = j.at("ranges");
    RejectUnknown(r, {"cost_min", "cost_max", "time_min", "time_max", "auto_cost_shift"}, "ranges");
    if (r.contains("cost_min")) c.ranges.cost_min = Get<double>(r, "cost_min");
    if (r.contains("cost_max")) c.ranges.cost_max = Get<double>(r, "cost_max");
    if (r.contains("time_min")) c.ranges.time_min = Get<double>(r, "time_min");
    if (r.contains("time_max")) c.ranges.time_max = Get<double>(r, "time_max");
    if (r.contains("auto_cost_shift")) c.ranges.auto_cost_shift = Get<double>(r, "auto_cost_shift");
  }
  if (j.contains("data_seed")) c.data_seed = Get<std::uint64_t>(j, "data_seed");
  if (j.contains("partition_sizes")) c.partition_sizes = Get<std::vector<std::size_t>>(j, "partition_sizes");
  if (j.contains("partition_seed")) c.partition_seed = Get<std::uint64_t>(j, "partition_seed");
  if (j.contains("profile")) {
    const auto profile = Get<std::string>(j, "profile");
    if (profile == "fast") {
      c.schedule = AnnealingSchedule::Fast();
    } else if (profile != "default") {
      throw ConfigError("profile must be 'default' or 'fast'");
    }
  }
  if (j.contains("schedule")) {
    const Json &s = j.at("schedule");
    RejectUnknown(s, {"temp_initial", "temp_min", "alpha", "inner_iterations", "step_half_width"}, "schedule");
    if (s.contains("temp_initial")) c.schedule.temp_initial = Get<double>(s, "temp_initial");
    if (s.contains("temp_min")) c.schedule.temp_min = Get<double>(s, "temp_min");
    if (s.contains("alpha")) c.schedule.alpha = Get<double>(s, "alpha");
    if (s.contains("inner_iterations")) c.schedule.inner_iterations = Get<std::uint64_t>(s, "inner_iterations");
    if (s.contains("step_half_width")) c.schedule.step_half_width = Get<double>(s, "step_half_width");
  }
  if (j.contains("beta_initial")) c.beta_initial = BetaFromJson(j.at("beta_initial"), "beta_initial");
  if (j.contains("seed")) c.seed = Get<std::uint64_t>(j, "seed");
  if (j.contains("null_ll") && !j.at("null_ll").is_null()) c.null_ll = Get<double>(j, "null_ll");
  if (j.contains("transport")) {
    const auto t = Get<std::string>(j, "transport");
    if (t == "inproc") {
      c.transport = TransportKind::kInProc;
    } else if (t == "tcp") {
      c.transport = TransportKind::kTcp;
    } else {
      throw ConfigError("transport must be 'inproc' or 'tcp'");
    }
  }
  if (j.contains("host")) c.host = Get<std::string>(j, "host");
  if (j.contains("port")) c.port = Get<std::uint16_t>(j, "port");
  if (j.contains("timeout_ms")) c.timeout_ms = Get<std::int64_t>(j, "timeout_ms");
  if (j.contains("insecure")) c.insecure = Get<bool>(j, "insecure");
  if (j.contains("chief_terms")) c.chief_terms = TermsFromJson(j.at("chief_terms"), "chief_terms");
  if (j.contains("worker_terms")) c.worker_terms = TermsFromJson(j.at("worker_terms"), "worker_terms");
  if (j.contains("worker_terms_override")) {
    const Json &o = j.at("worker_terms_override");
    if (!o.is_array()) throw ConfigError("worker_terms_override must be an array");
    for (const auto &item : o) {
      if (item.is_null()) {
        c.worker_terms_override.emplace_back(std::nullopt);
      } else {
        c.worker_terms_override.emplace_back(TermsFromJson(item, "worker_terms_override"));
      }
    }
  }
  if (j.contains("run_estimate_s")) c.run_estimate_s = Get<std::int64_t>(j, "run_estimate_s");
  if (j.contains("ledger")) c.ledger = Get<std::string>(j, "ledger");
  if (j.contains("ledger_sample")) c.ledger_sample = Get<std::uint64_t>(j, "ledger_sample");
  if (j.contains("report")) c.report = Get<std::string>(j, "report");
  if (j.contains("table")) c.table = Get<std::string>(j, "table");
  if (j.contains("record_trajectory")) c.record_trajectory = Get<bool>(j, "record_trajectory");
  return c;
}

OrderedJson ExperimentConfig::ToJson() const {
  OrderedJson j;
  if (dataset) j["dataset"] = *dataset;
  if (!parts.empty()) j["parts"] = parts;
  j["synthetic_n"] = synthetic_n;
  j["true_beta"] = BetaToJson(true_beta);
  j["ranges"] = {{"cost_min", ranges.cost_min},
                 {"cost_max", ranges.cost_max},
                 {"time_min", ranges.time_min},
                 {"time_max", ranges.time_max},
                 {"auto_cost_shift", ranges.auto_cost_shift}};
  j["data_seed"] = data_seed;
  j["partition_sizes"] = partition_sizes;
  j["partition_seed"] = partition_seed;
  j["schedule"] = ScheduleToJson(schedule);
  j["beta_initial"] = BetaToJson(beta_initial);
  j["seed"] = seed;
  j["null_ll"] = null_ll ? OrderedJson(*null_ll) : OrderedJson(nullptr);
  j["transport"] = transport == TransportKind::kTcp ? "tcp" : "inproc";
  j["host"] = host;
  j["port"] = port;
  j["timeout_ms"] = timeout_ms;
  j["insecure"] = insecure;
  j["chief_terms"] = TermsToJson(chief_terms);
  j["worker_terms"] = TermsToJson(worker_terms);
  j["run_estimate_s"] = run_estimate_s;
  j["ledger"] = ledger;
  j["ledger_sample"] = ledger_sample;
  j["report"] = report;
  if (table) j["table"] = *table;
  j["record_trajectory"] = record_trajectory;
  return j;
}

void ExperimentConfig::Validate() const {
  try {
    schedule.Validate();
    ranges.Validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  if (dataset && !parts.empty()) throw ConfigError("give either 'dataset' or 'parts', not both");
  if (parts.empty() && partition_sizes.empty()) throw ConfigError("partition_sizes must not be empty");
  if (parts.empty() && std::find(partition_sizes.begin(), partition_sizes.end(), 0u) != partition_sizes.end()) {
    throw ConfigError("every worker needs at least one observation");
  }
  if (!dataset && parts.empty() && synthetic_n == 0) throw ConfigError("synthetic_n must be >= 1");
  if (timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
  if (ledger_sample < 1) throw ConfigError("ledger_sample must be >= 1");
  if (chief_terms.temporality_s <= 0 || worker_terms.temporality_s <= 0) {
    throw ConfigError("temporality must be positive");
  }
  if (!beta_initial.IsFinite()) throw ConfigError("beta_initial must be finite");
  if (beta_initial != BetaVector{} && !null_ll) throw ConfigError("null_ll is required when beta_initial is not zero");
}

AnnealResult CentralizedOracle(std::span<const Observation> data, const AnnealingSchedule &schedule,
                               std::uint64_t seed, const BetaVector &beta_initial, bool record_trajectory) {
  if (data.empty()) throw EmptyDatasetError();
  LocalEvaluator evaluator(data);
  Rng rng(seed);
  return annealer::Run(schedule, beta_initial, evaluator, rng, {.record_trajectory = record_trajectory});
}

ExperimentOutcome RunExperiment(const ExperimentConfig &config, const ExperimentHooks &hooks) {
  config.Validate();
  const auto started = Clock::now();

  // Data preparation stands in for the workers' own survey answers.
  std::vector<std::vector<Observation>> parts;
  std::string provenance;
  std::optional<BetaVector> true_beta;
  try {
    if (!config.parts.empty()) {
      for (const auto &path : config.parts) parts.push_back(ReadCsv(path).rows);
      provenance = "parts";
    } else {
      SurveyDataset pooled;
      if (config.dataset) {
        pooled = ReadCsv(*config.dataset);
      } else {
        pooled = GenerateSynthetic(config.synthetic_n, config.true_beta, config.ranges, config.data_seed);
        true_beta = config.true_beta;
      }
      provenance = pooled.provenance;
      parts = Partition(pooled.rows, config.partition_sizes, config.partition_seed);
    }
  } catch (const DatasetError &e) {
    throw ConfigError(e.what());
  }
  for (const auto &p : parts) {
    if (p.empty()) throw ConfigError("a worker partition is empty");
  }
  if (!config.worker_terms_override.empty() && config.worker_terms_override.size() != parts.size()) {
    throw ConfigError("worker_terms_override must have one entry per worker");
  }

  ExperimentOutcome outcome;
  const std::size_t w_count = parts.size();
  for (const auto &p : parts) outcome.part_sizes.push_back(p.size());

  Ledger ledger = Ledger::Create(config.ledger);
  ChiefConfig chief_cfg;
  chief_cfg.schedule = config.schedule;
  chief_cfg.beta_initial = config.beta_initial;
  chief_cfg.seed = config.seed;
  chief_cfg.terms = config.chief_terms;
  chief_cfg.run_estimate_s = config.run_estimate_s;
  chief_cfg.timeout = std::chrono::milliseconds(config.timeout_ms);
  chief_cfg.ledger_sample = config.ledger_sample;
  chief_cfg.channel.insecure = config.insecure;
  chief_cfg.channel.tap = hooks.tap;
  chief_cfg.null_ll = config.null_ll;
  chief_cfg.record_trajectory = config.record_trajectory;
  ChiefNode chief(chief_cfg, ledger);
  chief.AnnounceDomain();

  ChannelOptions worker_channel;
  worker_channel.insecure = config.insecure;
  std::vector<WorkerNode> workers;
  const std::vector<std::vector<Observation>> worker_rows = parts;
  for (std::size_t i = 0; i < w_count; ++i) {
    ContractTerms terms = config.worker_terms;
    if (!config.worker_terms_override.empty() && config.worker_terms_override[i]) {
      terms = *config.worker_terms_override[i];
    }
    workers.emplace_back("worker-" + std::to_string(i + 1), std::move(parts[i]), terms, worker_channel);
  }

  outcome.workers.resize(w_count);
  std::vector<std::thread> threads;
  std::vector<std::unique_ptr<Transport>> pending;
  const auto timeout = std::chrono::milliseconds(config.timeout_ms);
  // Workers get a generous idle timeout; the chief enforces the round limit.
  const auto worker_timeout = timeout * 4;

  std::optional<TcpListener> listener;
  if (config.transport == TransportKind::kTcp) listener.emplace(config.host, config.port);

  auto join_all = [&] {
    for (auto &t : threads) {
      if (t.joinable()) t.join();
    }
  };

  try {
    for (std::size_t i = 0; i < w_count; ++i) {
      if (config.transport == TransportKind::kInProc) {
        auto [chief_end, worker_end] = MakeInProcPair("worker-" + std::to_string(i + 1));
        pending.push_back(std::move(chief_end));
        threads.emplace_back([&, i, t = std::move(worker_end)]() mutable {
          outcome.workers[i] = workers[i].Serve(std::move(t), worker_timeout);
        });
      } else {
        const std::uint16_t port = listener->port();
        threads.emplace_back([&, i, port] {
          try {
            auto t = TcpConnect(config.host, port, timeout);
            outcome.workers[i] = workers[i].Serve(std::move(t), worker_timeout);
          } catch (const std::exception &e) {
            outcome.workers[i].node_id = workers[i].node_id();
            outcome.workers[i].error = e.what();
          }
        });
        // One connection at a time keeps registration order deterministic.
        pending.push_back(listener->Accept(timeout));
      }
    }
    outcome.registration = chief.RegisterWorkers(std::move(pending));
    outcome.chief = chief.Run();
  } catch (...) {
    for (auto &t : pending) {
      if (t) t->Close();
    }
    chief.Abort();
    join_all();
    throw;
  }
  join_all();
  const double elapsed = std::chrono::duration<double>(Clock::now() - started).count();

  // Standard errors need the observations, so the harness computes them on
  // the pooled data; the chief itself never could.
  std::optional<Vector3> se;
  {
    std::vector<Observation> all;
    for (std::size_t i = 0; i < w_count; ++i) {
      const auto &rows = worker_rows[i];
      all.insert(all.end(), rows.begin(), rows.end());
    }
    try {
      se = choice_model::StdErrors(outcome.chief.beta, all);
    } catch (const SingularInformationError &) {
      se.reset();
    }
  }
  outcome.chief.fit.std_errors = se;

  const auto &ch = outcome.chief;
  OrderedJson r;
  r["schema"] = "fedchoice.run_report/1";
  r["seed"] = config.seed;
  r["transport"] = config.transport == TransportKind::kTcp ? "tcp" : "inproc";
  r["encrypted"] = !config.insecure;
  r["schedule"] = ScheduleToJson(config.schedule);
  r["beta_initial"] = BetaToJson(config.beta_initial);
  OrderedJson data;
  data["provenance"] = provenance;
  data["observations"] = std::accumulate(outcome.part_sizes.begin(), outcome.part_sizes.end(), std::size_t{0});
  data["partition_sizes"] = outcome.part_sizes;
  data["true_beta"] = true_beta ? BetaToJson(*true_beta) : OrderedJson(nullptr);
  r["data"] = data;
  r["estimate"] = {{"beta", BetaToJson(ch.beta)},
                   {"std_errors", se ? OrderedJson::array({(*se)[0], (*se)[1], (*se)[2]}) : OrderedJson(nullptr)}};
  r["null_ll"] = ch.fit.null_ll;
  r["final_ll"] = ch.fit.final_ll;
  r["rho_square"] = ch.fit.rho_square;
  r["annealing"] = {{"outer_levels", ch.anneal.outer_levels},
                    {"proposals", ch.anneal.proposals},
                    {"evaluator_calls", ch.anneal.evaluator_calls},
                    {"accepted", ch.anneal.accepted},
                    {"broadcasts", ch.broadcasts}};
  OrderedJson wj = OrderedJson::array();
  for (std::size_t i = 0; i < w_count; ++i) {
    const WorkerReport &w = outcome.workers[i];
    OrderedJson e;
    e["id"] = workers[i].node_id();
    e["observations"] = outcome.part_sizes[i];
    e["outcome"] = OutcomeName(w.outcome);
    e["evaluations"] = w.evaluations;
    e["messages_sent"] = w.traffic.messages_sent;
    e["messages_received"] = w.traffic.messages_received;
    e["data_messages"] = w.traffic.data_messages();
    e["bytes_sent"] = w.traffic.bytes_sent;
    e["bytes_received"] = w.traffic.bytes_received;
    e["bytes_total"] = w.traffic.bytes();
    e["max_data_frame_bytes"] = w.traffic.max_data_frame_bytes;
    e["latency"] = LatencyToJson(w.latency);
    wj.push_back(std::move(e));
  }
  r["workers"] = wj;
  r["chief"] = {{"id", chief_cfg.node_id}, {"latency", LatencyToJson(ch.latency)}};
  OrderedJson counts = OrderedJson::object();
  for (int t = 0; t <= static_cast<int>(TxType::kModelPublish); ++t) {
    const auto type = static_cast<TxType>(t);
    const auto it = ledger.counts().find(type);
    counts[std::string(ToString(type))] = it == ledger.counts().end() ? 0 : it->second;
  }
  r["ledger"] = {{"path", config.ledger}, {"sample", config.ledger_sample}, {"entries", ledger.size()},
                 {"counts", counts}};
  r["elapsed_s"] = elapsed;
  outcome.report = r;

  WriteText(config.report, r.dump(2) + "\n");
  if (config.table) WriteText(*config.table, FormatReportTable(Json::parse(r.dump())));
  return outcome;
}

std::vector<std::string> CheckReport(const nlohmann::json &r) {
  std::vector<std::string> problems;
  try {
    const double null_ll = r.at("null_ll").get<double>();
    const double final_ll = r.at("final_ll").get<double>();
    const double rho = r.at("rho_square").get<double>();
    if (choice_model::RhoSquare(null_ll, final_ll) != rho) problems.push_back("rho_square != 1 - final_ll/null_ll");

    const auto &data = r.at("data");
    const auto sizes = data.at("partition_sizes").get<std::vector<std::size_t>>();
    const auto n = data.at("observations").get<std::size_t>();
    if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != n) {
      problems.push_back("partition sizes do not sum to the observation count");
    }
    const auto &workers = r.at("workers");
    if (workers.size() != sizes.size()) problems.push_back("worker count differs from partition count");
    const auto calls = r.at("annealing").at("evaluator_calls").get<std::uint64_t>();
    std::uint64_t proposals_received = 0;
    std::uint64_t evaluations_sent = 0;
    std::size_t channels = 0;
    for (std::size_t i = 0; i < workers.size(); ++i) {
      const auto &w = workers[i];
      if (i < sizes.size() && w.at("observations").get<std::size_t>() != sizes[i]) {
        problems.push_back("worker " + w.at("id").get<std::string>() + " observation count differs from partition");
      }
      const auto ev = w.at("evaluations").get<std::uint64_t>();
      const auto outcome = w.at("outcome").get<std::string>();
      if (outcome != "rejected") ++channels;
      if (outcome == "completed" ? ev != calls : ev > calls) {
        problems.push_back("worker " + w.at("id").get<std::string>() + " evaluations != evaluator calls");
      }
      if (w.at("data_messages").get<std::uint64_t>() != 2 * ev) {
        problems.push_back("worker " + w.at("id").get<std::string>() + " data messages != 2 x evaluations");
      }
      proposals_received += ev;
      evaluations_sent += ev;
    }
    const auto &ledger = r.at("ledger");
    const auto sample = ledger.at("sample").get<std::uint64_t>();
    if (sample == 1) {
      const auto &counts = ledger.at("counts");
      if (counts.at("BetaSent").get<std::uint64_t>() != proposals_received) {
        problems.push_back("ledger BetaSent count differs from proposals delivered");
      }
      if (counts.at("EvaluationSent").get<std::uint64_t>() != evaluations_sent) {
        problems.push_back("ledger EvaluationSent count differs from evaluations returned");
      }
      if (counts.at("ChannelOpen").get<std::size_t>() != channels) {
        problems.push_back("ledger ChannelOpen count differs from registered worker count");
      }
    }
  } catch (const nlohmann::json::exception &e) {
    problems.push_back(std::string("report is missing fields: ") + e.what());
  } catch (const std::invalid_argument &e) {
    problems.push_back(e.what());
  }
  return problems;
}

std::string FormatReportTable(const nlohmann::json &r) {
  std::ostringstream out;
  const auto beta = r.at("estimate").at("beta");
  const auto &se = r.at("estimate").at("std_errors");
  auto se_text = [&](std::size_t k) -> std::string {
    if (se.is_null()) return "n/a";
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << se[k].get<double>();
    return s.str();
  };
  out << "Estimated parameters\n";
  out << std::left << std::setw(28) << "Variable" << std::setw(14) << "Parameter" << "Std. err.\n";
  out << std::string(52, '-') << "\n";
  static const char *kNames[] = {"Auto constant (beta_a)", "Cost (beta_c)", "Travel time (beta_t)"};
  for (std::size_t k = 0; k < 3; ++k) {
    out << std::setw(28) << kNames[k] << std::setw(14) << std::fixed << std::setprecision(4) << beta[k].get<double>()
        << se_text(k) << "\n";
  }
  out << std::setw(28) << "Train constant" << "0 (ref.)\n";
  out << std::string(52, '-') << "\n";
  out << std::setw(28) << "Null log-likelihood" << std::setprecision(4) << r.at("null_ll").get<double>() << "\n";
  out << std::setw(28) << "Final log-likelihood" << r.at("final_ll").get<double>() << "\n";
  out << std::setw(28) << "Rho square" << r.at("rho_square").get<double>() << "\n\n";

  out << "Message latency (seconds)\n";
  out << std::setw(14) << "Node" << std::setw(26) << "Send mean (sigma)" << std::setw(26) << "Get mean (sigma)"
      << "Messages\n";
  out << std::string(74, '-') << "\n";
  auto row = [&](const std::string &id, const nlohmann::json &lat, std::uint64_t messages) {
    auto cell = [](const nlohmann::json &s) {
      std::ostringstream c;
      c << std::fixed << std::setprecision(6) << s.at("mean_s").get<double>() << " (" << s.at("sigma_s").get<double>()
        << ")";
      return c.str();
    };
    out << std::setw(14) << id << std::setw(26) << cell(lat.at("send")) << std::setw(26) << cell(lat.at("get"))
        << messages << "\n";
  };
  const auto &chief = r.at("chief");
  row(chief.at("id").get<std::string>(), chief.at("latency"),
      chief.at("latency").at("send").at("count").get<std::uint64_t>() +
          chief.at("latency").at("get").at("count").get<std::uint64_t>());
  for (const auto &w : r.at("workers")) {
    row(w.at("id").get<std::string>(), w.at("latency"), w.at("data_messages").get<std::uint64_t>());
  }
  out << "\n";
  out << "Traffic per worker\n";
  for (const auto &w : r.at("workers")) {
    out << "  " << std::setw(12) << w.at("id").get<std::string>() << w.at("data_messages").get<std::uint64_t>()
        << " data messages, " << w.at("bytes_total").get<std::uint64_t>() << " bytes, largest data frame "
        << w.at("max_data_frame_bytes").get<std::uint64_t>() << " bytes\n";
  }
  return out.str();
}

}  // namespace fedchoice
