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

#include "fedchoice/runtime.h"

#include <algorithm>
#include <exception>

namespace fedchoice {
namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

// ---------------------------------------------------------------------------
// Worker

WorkerNode::WorkerNode(std::string node_id, std::vector<Observation> observations, ContractTerms terms,
                       ChannelOptions options)
    : node_id_(std::move(node_id)),
      observations_(std::move(observations)),
      terms_(terms),
      options_(std::move(options)) {
  if (observations_.empty()) throw EmptyDatasetError();
}

WorkerReport WorkerNode::Serve(std::unique_ptr<Transport> transport, std::chrono::milliseconds timeout) {
  WorkerReport report;
  report.node_id = node_id_;
  report.latency.node_id = node_id_;
  SecureChannel channel(std::move(transport), node_id_, options_);

  auto send = [&](Payload payload) {
    const MsgType type = static_cast<MsgType>(payload.index());
    const SendInfo info = channel.Send(std::move(payload));
    if (channel.established()) {
      auto &seen = report.types_sent_after_registration;
      if (std::find(seen.begin(), seen.end(), type) == seen.end()) seen.push_back(type);
    }
    return info;
  };

  try {
    for (;;) {
      Received in = channel.Receive(timeout);
      const MsgType type = in.msg.type();
      switch (type) {
        case MsgType::kDomainAnnounce: {
          const auto &announce = std::get<DomainAnnouncePayload>(in.msg.payload);
          if (announce.schema_id != kSurveySchemaId) throw ProtocolError("unsupported survey schema");
          send(DomainJoinPayload{terms_});
          break;
        }
        case MsgType::kConnectionRequest: {
          channel.AcceptHandshake(in.msg);
          break;
        }
        case MsgType::kSurveyPublish: {
          if (!channel.established()) throw ProtocolError("survey published before the channel was secured");
          const auto &survey = std::get<SurveyPublishPayload>(in.msg.payload);
          if (survey.schema_id != kSurveySchemaId || survey.objective != kObjective) {
            throw ProtocolError("unsupported survey or objective");
          }
          break;
        }
        case MsgType::kBetaProposal: {
          if (!channel.established()) throw ProtocolError("proposal received before handshake");
          report.latency.get.Add(in.latency_s);
          const auto &proposal = std::get<BetaProposalPayload>(in.msg.payload);
          const double ll = choice_model::LogLikelihood(proposal.beta, observations_);
          const SendInfo info = send(EvaluationPayload{ll, proposal.round});
          report.latency.send.Add(info.latency_s);
          ++report.evaluations;
          break;
        }
        case MsgType::kModelFinal:
          report.outcome = WorkerOutcome::kCompleted;
          report.traffic = channel.traffic();
          channel.Close();
          return report;
        default:
          throw ProtocolError("unexpected " + std::string(ToString(type)) + " at worker");
      }
    }
  } catch (const ChannelClosed &) {
    report.outcome = channel.established() ? WorkerOutcome::kChannelClosed : WorkerOutcome::kRejected;
  } catch (const std::exception &e) {
    report.outcome = WorkerOutcome::kFailed;
    report.error = e.what();
    channel.Close();
  }
  report.traffic = channel.traffic();
  return report;
}

// ---------------------------------------------------------------------------
// Chief

class ChiefNode::DistributedEvaluator : public Evaluator {
 public:
  explicit DistributedEvaluator(ChiefNode &chief) : chief_(chief) {}

  double Evaluate(const BetaVector &beta) override {
    const std::uint64_t round = round_++;
    const std::string &self = chief_.config_.node_id;

    // Sequential unicast in registration order.
    const auto t0 = Clock::now();
    for (auto &w : chief_.workers_) {
      w.channel->Send(BetaProposalPayload{beta, round});
      chief_.RecordData(self, w.node_id, TxType::kBetaSent);
    }
    chief_.latency_.send.Add(std::chrono::duration<double>(Clock::now() - t0).count());
    ++broadcasts_;

    // Barrier: exactly one reply per worker, summed in registration order.
    const auto deadline = Clock::now() + chief_.config_.timeout;
    double sum = 0.0;
    for (auto &w : chief_.workers_) {
      const auto left =
          std::max(std::chrono::milliseconds(0),
                   std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()));
      Received in;
      try {
        in = w.channel->Receive(left);
      } catch (const TransportTimeout &) {
        throw WorkerTimeout(round, w.node_id);
      } catch (const ChannelClosed &) {
        throw WorkerTimeout(round, w.node_id);
      }
      const auto *eval = std::get_if<EvaluationPayload>(&in.msg.payload);
      if (eval == nullptr) {
        throw ProtocolError("expected Evaluation from " + w.node_id + ", got " + std::string(ToString(in.msg.type())));
      }
      if (eval->round != round) throw RoundMismatch(round, eval->round, w.node_id);
      chief_.latency_.get.Add(in.latency_s);
      chief_.RecordData(w.node_id, self, TxType::kEvaluationSent);
      sum += eval->ll;
    }
    if (round == 0) initial_ll_ = sum;
    return sum;
  }

  std::uint64_t broadcasts() const { return broadcasts_; }
  double initial_ll() const { return initial_ll_; }

 private:
  ChiefNode &chief_;
  std::uint64_t round_ = 0;
  std::uint64_t broadcasts_ = 0;
  double initial_ll_ = 0.0;
};

ChiefNode::ChiefNode(ChiefConfig config, Ledger &ledger) : config_(std::move(config)), ledger_(ledger) {
  config_.schedule.Validate();
  if (config_.ledger_sample < 1) throw std::invalid_argument("ledger_sample must be >= 1");
  if (config_.terms.temporality_s <= 0) throw std::invalid_argument("temporality must be positive");
  if (config_.beta_initial != BetaVector{} && !config_.null_ll) {
    throw std::invalid_argument("null_ll must be supplied when beta_initial is not zero");
  }
  latency_.node_id = config_.node_id;
}

ChiefNode::~ChiefNode() { CloseAll(); }

void ChiefNode::CloseAll() {
  for (auto &w : workers_) {
    if (w.channel) w.channel->Close();
  }
}

void ChiefNode::RecordData(const std::string &sender, const std::string &receiver, TxType type) {
  if (data_tx_++ % config_.ledger_sample == 0) ledger_.Append(sender, receiver, type);
}

void ChiefNode::AnnounceDomain() {
  ledger_.Append(config_.node_id, "domain", TxType::kDomainAnnounce);
  ledger_.Append(config_.node_id, "domain", TxType::kSurveyPublish);
}

RegistrationResult ChiefNode::RegisterWorkers(std::vector<std::unique_ptr<Transport>> pending) {
  RegistrationResult result;
  for (auto &transport : pending) {
    const std::string where = transport->Describe();
    auto channel = std::make_unique<SecureChannel>(std::move(transport), config_.node_id, config_.channel);
    std::string node = where;
    try {
      channel->Send(DomainAnnouncePayload{config_.incentive, kSurveySchemaId});
      const Received join = channel->Receive(config_.timeout);
      const auto *payload = std::get_if<DomainJoinPayload>(&join.msg.payload);
      if (payload == nullptr) throw ProtocolError("expected DomainJoin");
      node = join.msg.sender;
      if (std::any_of(workers_.begin(), workers_.end(), [&](const WorkerLink &w) { return w.node_id == node; })) {
        throw ProtocolError("duplicate worker id " + node);
      }
      if (!TermsCompatible(config_.terms, payload->terms, config_.run_estimate_s)) throw TermsRejected(node);

      channel->InitiateHandshake(config_.timeout);
      ledger_.Append(config_.node_id, node, TxType::kChannelOpen);

      channel->Send(SurveyPublishPayload{kSurveySchemaId, kObjective});
      workers_.push_back({node, std::move(channel)});
      result.registered.push_back(node);
    } catch (const std::exception &e) {
      channel->Close();
      result.rejected.emplace_back(node, e.what());
    }
  }
  return result;
}

ChiefResult ChiefNode::Run() {
  if (workers_.empty()) throw NoWorkers();
  Rng rng(config_.seed);
  DistributedEvaluator evaluator(*this);
  ChiefResult result;
  try {
    result.anneal = annealer::Run(config_.schedule, config_.beta_initial, evaluator, rng,
                                  {.record_trajectory = config_.record_trajectory});
  } catch (const EvaluatorFailure &failure) {
    CloseAll();
    std::rethrow_if_nested(failure);
    throw;
  } catch (...) {
    CloseAll();
    throw;
  }

  for (auto &w : workers_) {
    w.channel->Send(ModelFinalPayload{});
  }
  ledger_.Append(config_.node_id, "domain", TxType::kModelPublish);

  result.beta = result.anneal.beta;
  result.ll = result.anneal.ll;
  result.broadcasts = evaluator.broadcasts();
  result.fit.null_ll = config_.null_ll.value_or(evaluator.initial_ll());
  result.fit.final_ll = result.ll;
  result.fit.rho_square = choice_model::RhoSquare(result.fit.null_ll, result.fit.final_ll);
  result.latency = latency_;
  for (const auto &w : workers_) result.worker_traffic.emplace_back(w.node_id, w.channel->traffic());
  return result;
}

}  // namespace fedchoice
