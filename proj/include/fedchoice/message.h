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

#ifndef FEDCHOICE_MESSAGE_H_
#define FEDCHOICE_MESSAGE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedchoice/choice_model.h"

namespace fedchoice {

using Bytes = std::vector<std::uint8_t>;

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxPayloadBytes = 1u << 20;  // 1 MiB
inline constexpr std::size_t kFrameHeaderBytes = 4;

enum class MsgType {
  kDomainAnnounce,
  kDomainJoin,
  kConnectionRequest,
  kConnectionAccept,
  kSurveyPublish,
  kBetaProposal,
  kEvaluation,
  kModelFinal,
};

std::string_view ToString(MsgType type);
std::optional<MsgType> MsgTypeFromString(std::string_view name);

// Smart-contract terms a node brings to the domain.
struct ContractTerms {
  std::int64_t temporality_s = 24 * 3600;  // participation window
  bool idle_only = false;
  bool public_share = true;

  bool operator==(const ContractTerms &) const = default;
};

struct DomainAnnouncePayload {
  std::string incentive;
  std::string schema_id;
  bool operator==(const DomainAnnouncePayload &) const = default;
};

struct DomainJoinPayload {
  ContractTerms terms;
  bool operator==(const DomainJoinPayload &) const = default;
};

struct ConnectionRequestPayload {
  std::string public_key;  // hex
  bool operator==(const ConnectionRequestPayload &) const = default;
};

struct ConnectionAcceptPayload {
  std::string public_key;  // hex
  std::string confirm;     // hex key-confirmation tag
  bool operator==(const ConnectionAcceptPayload &) const = default;
};

struct SurveyPublishPayload {
  std::string schema_id;
  std::string objective;
  bool operator==(const SurveyPublishPayload &) const = default;
};

struct BetaProposalPayload {
  BetaVector beta;
  std::uint64_t round = 0;
  bool operator==(const BetaProposalPayload &) const = default;
};

// Carries the evaluated sum only; no observation count or attributes.
struct EvaluationPayload {
  double ll = 0.0;
  std::uint64_t round = 0;
  bool operator==(const EvaluationPayload &) const = default;
};

struct ModelFinalPayload {
  bool operator==(const ModelFinalPayload &) const = default;
};

using Payload = std::variant<DomainAnnouncePayload, DomainJoinPayload, ConnectionRequestPayload,
                             ConnectionAcceptPayload, SurveyPublishPayload, BetaProposalPayload, EvaluationPayload,
                             ModelFinalPayload>;

struct Message {
  int version = kProtocolVersion;
  std::string sender;
  std::uint64_t nonce = 0;
  Payload payload;

  MsgType type() const;
  bool operator==(const Message &) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string &what) : std::runtime_error(what) {}
};

class FramingError : public ProtocolError {
 public:
  explicit FramingError(const std::string &what) : ProtocolError("framing: " + what) {}
};

class FrameTooLarge : public ProtocolError {
 public:
  explicit FrameTooLarge(std::size_t size)
      : ProtocolError("frame payload of " + std::to_string(size) + " bytes exceeds 1 MiB") {}
};

// Canonical JSON object text: keys v, type, sender, nonce, payload in that
// order, no insignificant whitespace, shortest round-trip numbers.
std::string EncodeJson(const Message &msg);
Message DecodeJson(std::string_view text);

// 4-byte big-endian length followed by the canonical JSON text.
Bytes Encode(const Message &msg);
Message Decode(std::span<const std::uint8_t> frame);

// Prefixes a body with its 4-byte big-endian length. Throws FrameTooLarge.
Bytes Frame(std::span<const std::uint8_t> body);
// Returns the body of a complete frame; the prefix must match exactly.
std::span<const std::uint8_t> Unframe(std::span<const std::uint8_t> frame);
std::uint32_t ReadLengthPrefix(std::span<const std::uint8_t> header);

// True iff the worker's terms admit the chief's planned run.
bool TermsCompatible(const ContractTerms &chief, const ContractTerms &worker, std::int64_t run_estimate_s);

}  // namespace fedchoice

#endif  // FEDCHOICE_MESSAGE_H_
