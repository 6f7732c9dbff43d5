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

#include <cmath>
#include <thread>

#include "doctest.h"
#include "fedchoice/dataset.h"
#include "fedchoice/experiment.h"
#include "fedchoice/runtime.h"
#include "temp_dir.h"

using namespace fedchoice;
using namespace std::chrono_literals;
using fedchoice::testing::TempDir;

namespace {

const BetaVector kTrueBeta{0.35, -0.006, -0.001};

struct ClusterRun {
  RegistrationResult registration;
  ChiefResult chief;
  std::vector<WorkerReport> workers;
  std::filesystem::path ledger;
};

// One chief and one thread per worker over in-process transports.
ClusterRun RunCluster(const TempDir &dir, const std::vector<std::vector<Observation>> &parts, ChiefConfig config,
                      const std::vector<ContractTerms> &terms = {}) {
  ClusterRun out;
  out.ledger = dir / "ledger.jsonl";
  auto ledger = Ledger::Create(out.ledger);
  ChiefNode chief(config, ledger);
  chief.AnnounceDomain();

  std::vector<std::unique_ptr<Transport>> chief_ends;
  std::vector<std::thread> threads;
  out.workers.resize(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto [c, w] = MakeInProcPair("w" + std::to_string(i + 1));
    chief_ends.push_back(std::move(c));
    const ContractTerms t = i < terms.size() ? terms[i] : ContractTerms{};
    threads.emplace_back([&, i, t, transport = std::move(w)]() mutable {
      WorkerNode node("w" + std::to_string(i + 1), parts[i], t);
      out.workers[i] = node.Serve(std::move(transport), 5s);
    });
  }
  out.registration = chief.RegisterWorkers(std::move(chief_ends));
  try {
    out.chief = chief.Run();
  } catch (...) {
    chief.Abort();
    for (auto &t : threads) t.join();
    throw;
  }
  for (auto &t : threads) t.join();
  return out;
}

ChiefConfig FastConfig(std::uint64_t seed) {
  ChiefConfig c;
  c.schedule = AnnealingSchedule::Fast();
  c.seed = seed;
  return c;
}

std::vector<Observation> Pooled(const std::vector<std::vector<Observation>> &parts) {
  std::vector<Observation> all;
  for (const auto &p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

// A peer that completes registration and then misbehaves on the first proposal.
enum class Misbehaviour { kSilent, kWrongRound, kWrongType };

void RoguePeer(std::unique_ptr<Transport> transport, Misbehaviour how) {
  SecureChannel ch(std::move(transport), "rogue");
  try {
    ch.Receive(2s);  // DomainAnnounce
    ch.Send(DomainJoinPayload{});
    ch.AcceptHandshake(ch.Receive(2s).msg);
    ch.Receive(2s);  // SurveyPublish
    const auto in = ch.Receive(2s);
    const auto round = std::get<BetaProposalPayload>(in.msg.payload).round;
    if (how == Misbehaviour::kWrongRound) ch.Send(EvaluationPayload{-1.0, round + 1});
    if (how == Misbehaviour::kWrongType) ch.Send(DomainJoinPayload{});
    ch.Receive(5s);  // until the chief closes
  } catch (const std::exception &) {
  }
}

}  // namespace

TEST_CASE("single worker reproduces the centralized trajectory bit for bit") {
  TempDir dir;
  const auto data = GenerateSynthetic(246, kTrueBeta, {}, 2017).rows;
  const auto run = RunCluster(dir, {data}, FastConfig(13));
  const auto oracle = CentralizedOracle(data, AnnealingSchedule::Fast(), 13);
  REQUIRE(run.chief.anneal.trajectory.size() == oracle.trajectory.size());
  for (std::size_t i = 0; i < oracle.trajectory.size(); ++i) {
    REQUIRE(run.chief.anneal.trajectory[i].round == oracle.trajectory[i].round);
    REQUIRE(run.chief.anneal.trajectory[i].ll == oracle.trajectory[i].ll);
    REQUIRE(run.chief.anneal.trajectory[i].beta == oracle.trajectory[i].beta);
  }
  CHECK(run.chief.beta == oracle.beta);
}

TEST_CASE("four workers match the centralized trajectory") {
  TempDir dir;
  const auto data = GenerateSynthetic(246, kTrueBeta, {}, 2017).rows;
  const std::vector<std::size_t> sizes{61, 61, 61, 63};
  const auto parts = Partition(data, sizes, 7);
  const auto pooled = Pooled(parts);
  const auto run = RunCluster(dir, parts, FastConfig(21));
  const auto oracle = CentralizedOracle(pooled, AnnealingSchedule::Fast(), 21);
  REQUIRE(run.chief.anneal.trajectory.size() == oracle.trajectory.size());
  for (std::size_t i = 0; i < oracle.trajectory.size(); ++i) {
    const auto &a = run.chief.anneal.trajectory[i];
    const auto &b = oracle.trajectory[i];
    REQUIRE(a.round == b.round);
    REQUIRE(std::fabs(a.ll - b.ll) <= 1e-9);
    const auto x = a.beta.ToArray(), y = b.beta.ToArray();
    for (int k = 0; k < 3; ++k) REQUIRE(std::fabs(x[k] - y[k]) <= 1e-12);
  }
  CHECK(run.chief.anneal.evaluator_calls == 6601);
  CHECK(run.chief.broadcasts == 6601);

  SUBCASE("worker protocol shape") {
    for (const auto &w : run.workers) {
      CHECK(w.outcome == WorkerOutcome::kCompleted);
      CHECK(w.evaluations == 6601);
      CHECK(w.latency.get.count() == run.chief.broadcasts);
      CHECK(w.latency.send.count() == w.latency.get.count());
      CHECK(w.latency.send.min() > 0.0);
      CHECK(w.latency.get.min() > 0.0);
      CHECK(std::isfinite(w.latency.send.max()));
      CHECK(w.types_sent_after_registration == std::vector<MsgType>{MsgType::kEvaluation});
      // Announce, ConnectionRequest, SurveyPublish, proposals, ModelFinal.
      CHECK(w.traffic.messages_received == 3 + w.evaluations + 1);
      // DomainJoin, ConnectionAccept, evaluations.
      CHECK(w.traffic.messages_sent == 2 + w.evaluations);
      CHECK(w.traffic.data_messages() == 2 * w.evaluations);
    }
    CHECK(run.chief.latency.send.count() == run.chief.broadcasts);
    CHECK(run.chief.latency.get.count() == 4 * run.chief.broadcasts);
  }
  SUBCASE("ledger contents") {
    const auto v = VerifyChain(run.ledger);
    REQUIRE(v.valid);
    CHECK(v.counts.at(TxType::kChannelOpen) == 4);
    CHECK(v.counts.at(TxType::kDomainAnnounce) == 1);
    CHECK(v.counts.at(TxType::kSurveyPublish) == 1);
    CHECK(v.counts.at(TxType::kModelPublish) == 1);
    CHECK(v.counts.at(TxType::kBetaSent) == 4 * 6601);
    CHECK(v.counts.at(TxType::kEvaluationSent) == 4 * 6601);
    CHECK(v.parties == std::set<std::string>{"chief", "domain", "w1", "w2", "w3", "w4"});
  }
  SUBCASE("fit statistics") {
    CHECK(run.chief.fit.null_ll == doctest::Approx(-246 * std::log(2.0)).epsilon(1e-14));
    CHECK(run.chief.fit.final_ll == run.chief.ll);
    CHECK(run.chief.fit.rho_square == 1.0 - run.chief.ll / run.chief.fit.null_ll);
  }
}

TEST_CASE("worker answers with its local log-likelihood and the proposal round") {
  const auto data = GenerateSynthetic(61, kTrueBeta, {}, 3).rows;
  auto [c, w] = MakeInProcPair("direct");
  std::thread worker([&, t = std::move(w)]() mutable {
    WorkerNode node("w1", data, {});
    const auto report = node.Serve(std::move(t), 2s);
    CHECK(report.outcome == WorkerOutcome::kCompleted);
    CHECK(report.evaluations == 3);
  });
  SecureChannel chief(std::move(c), "chief");
  chief.Send(DomainAnnouncePayload{"credit", kSurveySchemaId});
  CHECK(std::holds_alternative<DomainJoinPayload>(chief.Receive(2s).msg.payload));
  chief.InitiateHandshake(2s);
  chief.Send(SurveyPublishPayload{kSurveySchemaId, kObjective});

  chief.Send(BetaProposalPayload{{0, 0, 0}, 17});
  auto e = std::get<EvaluationPayload>(chief.Receive(2s).msg.payload);
  CHECK(e.round == 17);
  // 61 ln 0.5 = -42.281978014156663868...
  CHECK(e.ll == doctest::Approx(-42.28197801415666).epsilon(1e-14));

  chief.Send(BetaProposalPayload{kTrueBeta, 3});
  e = std::get<EvaluationPayload>(chief.Receive(2s).msg.payload);
  CHECK(e.round == 3);
  CHECK(e.ll == choice_model::LogLikelihood(kTrueBeta, data));

  chief.Send(BetaProposalPayload{{1, 1, 1}, 123456789});
  CHECK(std::get<EvaluationPayload>(chief.Receive(2s).msg.payload).round == 123456789);
  chief.Send(ModelFinalPayload{});
  worker.join();
}

TEST_CASE("worker requires observations") {
  CHECK_THROWS_AS(WorkerNode("w1", {}, {}), EmptyDatasetError);
}

TEST_CASE("registration filters incompatible terms") {
  TempDir dir;
  const auto data = GenerateSynthetic(246, kTrueBeta, {}, 2017).rows;
  const std::vector<std::size_t> sizes{61, 61, 61, 63};
  const auto parts = Partition(data, sizes, 7);
  ContractTerms private_terms;
  private_terms.public_share = false;
  auto config = FastConfig(1);
  config.schedule.inner_iterations = 5;
  const auto run = RunCluster(dir, parts, config, {{}, private_terms, {}, {}});
  CHECK(run.registration.registered == std::vector<std::string>{"w1", "w3", "w4"});
  REQUIRE(run.registration.rejected.size() == 1);
  CHECK(run.registration.rejected[0].first == "w2");
  CHECK(run.workers[1].outcome == WorkerOutcome::kRejected);
  CHECK(run.workers[1].evaluations == 0);
  for (int i : {0, 2, 3}) CHECK(run.workers[i].outcome == WorkerOutcome::kCompleted);
  const auto v = VerifyChain(run.ledger);
  CHECK(v.counts.at(TxType::kChannelOpen) == 3);
  CHECK(v.parties.count("w2") == 0);

  // The sum covers only the registered workers.
  std::vector<Observation> kept;
  for (int i : {0, 2, 3}) kept.insert(kept.end(), parts[i].begin(), parts[i].end());
  const auto oracle = CentralizedOracle(kept, config.schedule, 1);
  CHECK(std::fabs(run.chief.ll - oracle.ll) <= 1e-9);
}

TEST_CASE("short worker temporality is rejected") {
  TempDir dir;
  const auto data = GenerateSynthetic(20, kTrueBeta, {}, 1).rows;
  ContractTerms brief;
  brief.temporality_s = 3600;
  auto config = FastConfig(1);
  config.schedule.inner_iterations = 1;
  config.run_estimate_s = 7200;
  const auto run = RunCluster(dir, {data, data}, config, {brief, {}});
  CHECK(run.registration.registered == std::vector<std::string>{"w2"});
}

TEST_CASE("no workers") {
  TempDir dir;
  auto ledger = Ledger::Create(dir / "l.jsonl");
  ChiefNode chief(FastConfig(1), ledger);
  const auto reg = chief.RegisterWorkers({});
  CHECK(reg.registered.empty());
  CHECK_THROWS_AS(chief.Run(), NoWorkers);

  ContractTerms private_terms;
  private_terms.public_share = false;
  TempDir dir2;
  const auto data = GenerateSynthetic(10, kTrueBeta, {}, 1).rows;
  CHECK_THROWS_AS(RunCluster(dir2, {data}, FastConfig(1), {private_terms}), NoWorkers);
}

TEST_CASE("chief config validation") {
  TempDir dir;
  auto ledger = Ledger::Create(dir / "l.jsonl");
  ChiefConfig c = FastConfig(1);
  c.beta_initial = {0.1, 0, 0};
  CHECK_THROWS_AS(ChiefNode(c, ledger), std::invalid_argument);
  c.null_ll = -10.0;
  CHECK_NOTHROW(ChiefNode(c, ledger));
  c = FastConfig(1);
  c.ledger_sample = 0;
  CHECK_THROWS_AS(ChiefNode(c, ledger), std::invalid_argument);
  c = FastConfig(1);
  c.schedule.alpha = 1.5;
  CHECK_THROWS_AS(ChiefNode(c, ledger), std::invalid_argument);
}

TEST_CASE("misbehaving workers abort the run") {
  const auto data = GenerateSynthetic(30, kTrueBeta, {}, 1).rows;
  auto run_with = [&](Misbehaviour how) {
    TempDir dir;
    auto ledger = Ledger::Create(dir / "l.jsonl");
    auto config = FastConfig(1);
    config.timeout = 200ms;
    ChiefNode chief(config, ledger);
    auto [c1, w1] = MakeInProcPair("good");
    auto [c2, w2] = MakeInProcPair("bad");
    WorkerReport good_report;
    std::thread good([&, t = std::move(w1)]() mutable {
      good_report = WorkerNode("w1", data, {}).Serve(std::move(t), 2s);
    });
    std::thread bad([how, t = std::move(w2)]() mutable { RoguePeer(std::move(t), how); });
    std::vector<std::unique_ptr<Transport>> ends;
    ends.push_back(std::move(c1));
    ends.push_back(std::move(c2));
    REQUIRE(chief.RegisterWorkers(std::move(ends)).registered.size() == 2);
    std::exception_ptr err;
    try {
      chief.Run();
    } catch (...) {
      err = std::current_exception();
    }
    good.join();
    bad.join();
    CHECK(good_report.outcome == WorkerOutcome::kChannelClosed);
    CHECK(good_report.evaluations == 1);
    return err;
  };
  SUBCASE("silent worker") {
    try {
      std::rethrow_exception(run_with(Misbehaviour::kSilent));
    } catch (const WorkerTimeout &e) {
      CHECK(e.round() == 0);
      CHECK(e.worker() == "rogue");
    }
  }
  SUBCASE("stale round") { CHECK_THROWS_AS(std::rethrow_exception(run_with(Misbehaviour::kWrongRound)), RoundMismatch); }
  SUBCASE("wrong message type") {
    CHECK_THROWS_AS(std::rethrow_exception(run_with(Misbehaviour::kWrongType)), ProtocolError);
  }
}

TEST_CASE("ledger sampling") {
  TempDir dir;
  const auto data = GenerateSynthetic(40, kTrueBeta, {}, 1).rows;
  auto config = FastConfig(2);
  config.schedule.inner_iterations = 10;
  config.ledger_sample = 7;
  const auto run = RunCluster(dir, {data, data}, config);
  const std::uint64_t data_tx = 2 * 2 * run.chief.anneal.evaluator_calls;
  const auto v = VerifyChain(run.ledger);
  REQUIRE(v.valid);
  CHECK(v.counts.at(TxType::kBetaSent) + v.counts.at(TxType::kEvaluationSent) == (data_tx + 6) / 7);
  CHECK(v.counts.at(TxType::kChannelOpen) == 2);
  CHECK(v.counts.at(TxType::kModelPublish) == 1);
}

TEST_CASE("non-zero start uses the supplied null log-likelihood") {
  TempDir dir;
  const auto data = GenerateSynthetic(50, kTrueBeta, {}, 1).rows;
  auto config = FastConfig(3);
  config.schedule.inner_iterations = 5;
  config.beta_initial = {0.2, -0.001, 0.0};
  config.null_ll = choice_model::NullLogLikelihood(data.size());
  const auto run = RunCluster(dir, {data}, config);
  CHECK(run.chief.fit.null_ll == *config.null_ll);
  CHECK(run.chief.anneal.trajectory.front().beta == config.beta_initial);
}

TEST_CASE("chief broadcast latency dominates worker send latency") {
  TempDir dir;
  const auto data = GenerateSynthetic(246, kTrueBeta, {}, 2017).rows;
  const std::vector<std::size_t> sizes{61, 61, 61, 63};
  const auto run = RunCluster(dir, Partition(data, sizes, 7), FastConfig(4));
  for (const auto &w : run.workers) CHECK(run.chief.latency.send.mean() >= w.latency.send.mean());
}

TEST_CASE("latency stats") {
  LatencyStats s;
  for (double x : {1.0, 2.0, 3.0, 4.0}) s.Add(x);
  CHECK(s.count() == 4);
  CHECK(s.mean() == 2.5);
  CHECK(s.sigma() == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(s.min() == 1.0);
  CHECK(s.max() == 4.0);
  CHECK(LatencyStats().sigma() == 0.0);
}
