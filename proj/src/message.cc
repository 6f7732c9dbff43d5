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

#include "fedchoice/message.h"

#include <array>
#include <cmath>

#include <rapidjson/document.h>
#include <rapidjson/stringbuffer.h>
#include <rapidjson/writer.h>

namespace fedchoice {
namespace {

using Writer = rapidjson::Writer<rapidjson::StringBuffer>;
using Value = rapidjson::Value;

constexpr std::array<std::string_view, 8> kTypeNames = {
    "DomainAnnounce", "DomainJoin", "ConnectionRequest", "ConnectionAccept",
    "SurveyPublish",  "BetaProposal", "Evaluation",      "ModelFinal",
};

double FiniteOrThrow(double v, const char *field) {
  if (!std::isfinite(v)) throw ProtocolError(std::string("non-finite value in field ") + field);
  return v;
}

void Key(Writer &w, std::string_view k) { w.Key(k.data(), static_cast<rapidjson::SizeType>(k.size())); }
void Str(Writer &w, std::string_view v) { w.String(v.data(), static_cast<rapidjson::SizeType>(v.size())); }

void WritePayload(Writer &w, const Payload &payload) {
  w.StartObject();
  std::visit(
      [&w](const auto &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DomainAnnouncePayload>) {
          Key(w, "incentive");
          Str(w, p.incentive);
          Key(w, "schema_id");
          Str(w, p.schema_id);
        } else if constexpr (std::is_same_v<T, DomainJoinPayload>) {
          Key(w, "temporality");
          w.Int64(p.terms.temporality_s);
          Key(w, "idle_only");
          w.Bool(p.terms.idle_only);
          Key(w, "public_share");
          w.Bool(p.terms.public_share);
        } else if constexpr (std::is_same_v<T, ConnectionRequestPayload>) {
          Key(w, "public_key");
          Str(w, p.public_key);
        } else if constexpr (std::is_same_v<T, ConnectionAcceptPayload>) {
          Key(w, "public_key");
          Str(w, p.public_key);
          Key(w, "confirm");
          Str(w, p.confirm);
        } else if constexpr (std::is_same_v<T, SurveyPublishPayload>) {
          Key(w, "schema_id");
          Str(w, p.schema_id);
          Key(w, "objective");
          Str(w, p.objective);
        } else if constexpr (std::is_same_v<T, BetaProposalPayload>) {
          Key(w, "beta");
          w.StartArray();
          w.Double(FiniteOrThrow(p.beta.asc, "beta"));
          w.Double(FiniteOrThrow(p.beta.cost, "beta"));
          w.Double(FiniteOrThrow(p.beta.time, "beta"));
          w.EndArray();
          Key(w, "round");
          w.Uint64(p.round);
        } else if constexpr (std::is_same_v<T, EvaluationPayload>) {
          Key(w, "ll");
          w.Double(FiniteOrThrow(p.ll, "ll"));
          Key(w, "round");
          w.Uint64(p.round);
        }
      },
      payload);
  w.EndObject();
}

const Value &Field(const Value &obj, const char *key) {
  const auto it = obj.FindMember(key);
  if (it == obj.MemberEnd()) throw ProtocolError(std::string("missing field ") + key);
  return it->value;
}

void ExpectKeys(const Value &j, std::initializer_list<const char *> keys) {
  if (!j.IsObject()) throw ProtocolError("payload is not an object");
  if (j.MemberCount() != keys.size()) throw ProtocolError("payload has unexpected fields");
  for (const char *key : keys) Field(j, key);
}

std::string GetString(const Value &j, const char *key) {
  const Value &v = Field(j, key);
  if (!v.IsString()) throw ProtocolError(std::string("field ") + key + " is not a string");
  return {v.GetString(), v.GetStringLength()};
}

std::uint64_t GetUnsigned(const Value &j, const char *key) {
  const Value &v = Field(j, key);
  if (!v.IsUint64()) throw ProtocolError(std::string("field ") + key + " is not an unsigned integer");
  return v.GetUint64();
}

double GetReal(const Value &v, const char *key) {
  if (!v.IsNumber()) throw ProtocolError(std::string("field ") + key + " is not a number");
  return FiniteOrThrow(v.GetDouble(), key);
}

bool GetBool(const Value &j, const char *key) {
  const Value &v = Field(j, key);
  if (!v.IsBool()) throw ProtocolError(std::string("field ") + key + " is not a boolean");
  return v.GetBool();
}

Payload PayloadFromJson(MsgType type, const Value &j) {
  switch (type) {
    case MsgType::kDomainAnnounce:
      ExpectKeys(j, {"incentive", "schema_id"});
      return DomainAnnouncePayload{GetString(j, "incentive"), GetString(j, "schema_id")};
    case MsgType::kDomainJoin: {
      ExpectKeys(j, {"temporality", "idle_only", "public_share"});
      const Value &t = Field(j, "temporality");
      if (!t.IsInt64()) throw ProtocolError("field temporality is not an integer");
      return DomainJoinPayload{{t.GetInt64(), GetBool(j, "idle_only"), GetBool(j, "public_share")}};
    }
    case MsgType::kConnectionRequest:
      ExpectKeys(j, {"public_key"});
      return ConnectionRequestPayload{GetString(j, "public_key")};
    case MsgType::kConnectionAccept:
      ExpectKeys(j, {"public_key", "confirm"});
      return ConnectionAcceptPayload{GetString(j, "public_key"), GetString(j, "confirm")};
    case MsgType::kSurveyPublish:
      ExpectKeys(j, {"schema_id", "objective"});
      return SurveyPublishPayload{GetString(j, "schema_id"), GetString(j, "objective")};
    case MsgType::kBetaProposal: {
      ExpectKeys(j, {"beta", "round"});
      const Value &b = Field(j, "beta");
      if (!b.IsArray() || b.Size() != 3) throw ProtocolError("field beta is not a 3-array");
      return BetaProposalPayload{{GetReal(b[0], "beta"), GetReal(b[1], "beta"), GetReal(b[2], "beta")},
                                 GetUnsigned(j, "round")};
    }
    case MsgType::kEvaluation:
      ExpectKeys(j, {"ll", "round"});
      return EvaluationPayload{GetReal(Field(j, "ll"), "ll"), GetUnsigned(j, "round")};
    case MsgType::kModelFinal:
      ExpectKeys(j, {});
      return ModelFinalPayload{};
  }
  throw ProtocolError("unknown message type");
}

}  // namespace

std::string_view ToString(MsgType type) { return kTypeNames.at(static_cast<std::size_t>(type)); }

std::optional<MsgType> MsgTypeFromString(std::string_view name) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == name) return static_cast<MsgType>(i);
  }
  return std::nullopt;
}

MsgType Message::type() const { return static_cast<MsgType>(payload.index()); }

std::string EncodeJson(const Message &msg) {
  if (msg.version != kProtocolVersion) throw ProtocolError("unsupported protocol version");
  rapidjson::StringBuffer buf;
  Writer w(buf);
  w.StartObject();
  Key(w, "v");
  w.Int(msg.version);
  Key(w, "type");
  Str(w, ToString(msg.type()));
  Key(w, "sender");
  Str(w, msg.sender);
  Key(w, "nonce");
  w.Uint64(msg.nonce);
  Key(w, "payload");
  WritePayload(w, msg.payload);
  w.EndObject();
  return {buf.GetString(), buf.GetSize()};
}

Message DecodeJson(std::string_view text) {
  rapidjson::Document doc;
  doc.Parse<rapidjson::kParseFullPrecisionFlag>(text.data(), text.size());
  if (doc.HasParseError()) throw ProtocolError("malformed message JSON");
  ExpectKeys(doc, {"v", "type", "sender", "nonce", "payload"});
  const Value &v = Field(doc, "v");
  if (!v.IsInt() || v.GetInt() != kProtocolVersion) throw ProtocolError("unsupported protocol version");
  const auto type = MsgTypeFromString(GetString(doc, "type"));
  if (!type) throw ProtocolError("unknown message type");
  Message msg;
  msg.sender = GetString(doc, "sender");
  msg.nonce = GetUnsigned(doc, "nonce");
  msg.payload = PayloadFromJson(*type, Field(doc, "payload"));
  return msg;
}

Bytes Frame(std::span<const std::uint8_t> body) {
  if (body.size() > kMaxPayloadBytes) throw FrameTooLarge(body.size());
  Bytes frame(kFrameHeaderBytes + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  frame[0] = static_cast<std::uint8_t>(n >> 24);
  frame[1] = static_cast<std::uint8_t>(n >> 16);
  frame[2] = static_cast<std::uint8_t>(n >> 8);
  frame[3] = static_cast<std::uint8_t>(n);
  std::copy(body.begin(), body.end(), frame.begin() + kFrameHeaderBytes);
  return frame;
}

std::uint32_t ReadLengthPrefix(std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderBytes) throw FramingError("truncated length prefix");
  return (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) | (std::uint32_t{header[2]} << 8) |
         std::uint32_t{header[3]};
}

std::span<const std::uint8_t> Unframe(std::span<const std::uint8_t> frame) {
  const std::uint32_t n = ReadLengthPrefix(frame);
  if (n > kMaxPayloadBytes) throw FrameTooLarge(n);
  if (frame.size() - kFrameHeaderBytes != n) {
    throw FramingError("length prefix " + std::to_string(n) + " disagrees with body of " +
                       std::to_string(frame.size() - kFrameHeaderBytes) + " bytes");
  }
  return frame.subspan(kFrameHeaderBytes);
}

Bytes Encode(const Message &msg) {
  const std::string text = EncodeJson(msg);
  return Frame({reinterpret_cast<const std::uint8_t *>(text.data()), text.size()});
}

Message Decode(std::span<const std::uint8_t> frame) {
  const auto body = Unframe(frame);
  return DecodeJson({reinterpret_cast<const char *>(body.data()), body.size()});
}

bool TermsCompatible(const ContractTerms &chief, const ContractTerms &worker, std::int64_t run_estimate_s) {
  if (worker.temporality_s <= 0) return false;
  if (run_estimate_s > worker.temporality_s) return false;
  if (chief.public_share && !worker.public_share) return false;
  return true;
}

}  // namespace fedchoice
