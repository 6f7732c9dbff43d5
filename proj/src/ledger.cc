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

#include "fedchoice/ledger.h"

#include <openssl/sha.h>
#include <sodium.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <utility>

#include "fedchoice/secure_channel.h"
#include "json.hpp"

namespace fedchoice {
namespace {

constexpr std::array<std::string_view, 6> kTxNames = {
    "DomainAnnounce", "ChannelOpen", "SurveyPublish", "BetaSent", "EvaluationSent", "ModelPublish",
};

bool ValidNodeId(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '.' || c == ':' || c == '-';
    if (!ok) return false;
  }
  return true;
}

bool IsLowerHex(std::string_view s, std::size_t len) {
  if (s.size() != len) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

void AppendBody(std::string &out, const LedgerEntry &e) {
  out += R"({"index":)";
  out += std::to_string(e.index);
  out += R"(,"timestamp":)";
  out += std::to_string(e.timestamp_ms);
  out += R"(,"sender":")";
  out += e.sender;
  out += R"(","receiver":")";
  out += e.receiver;
  out += R"(","tx_type":")";
  out += ToString(e.tx_type);
  out += R"(","tx_id":")";
  out += e.tx_id;
  out += R"(","prev_hash":")";
  out += e.prev_hash;
  out += '"';
}

std::int64_t NowUtcMillis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

LedgerEntry ParseEntry(const std::string &line, std::uint64_t line_no) {
  using Json = nlohmann::json;
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error &e) {
    throw MalformedEntry(line_no, "unparseable JSON");
  }
  static const std::array<const char *, 8> kKeys = {"index",   "timestamp", "sender",    "receiver",
                                                    "tx_type", "tx_id",     "prev_hash", "entry_hash"};
  if (!j.is_object() || j.size() != kKeys.size()) throw MalformedEntry(line_no, "unexpected field set");
  for (const char *k : kKeys) {
    if (!j.contains(k)) throw MalformedEntry(line_no, std::string("missing field ") + k);
  }
  for (const char *k : {"sender", "receiver", "tx_type", "tx_id", "prev_hash", "entry_hash"}) {
    if (!j.at(k).is_string()) throw MalformedEntry(line_no, std::string("field ") + k + " is not a string");
  }
  if (!j.at("index").is_number_unsigned()) throw MalformedEntry(line_no, "index is not an unsigned integer");
  if (!j.at("timestamp").is_number_integer()) throw MalformedEntry(line_no, "timestamp is not an integer");
  LedgerEntry e;
  e.index = j.at("index").get<std::uint64_t>();
  e.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  e.sender = j.at("sender").get<std::string>();
  e.receiver = j.at("receiver").get<std::string>();
  const auto type = TxTypeFromString(j.at("tx_type").get<std::string>());
  if (!type) throw MalformedEntry(line_no, "unknown tx_type");
  e.tx_type = *type;
  e.tx_id = j.at("tx_id").get<std::string>();
  e.prev_hash = j.at("prev_hash").get<std::string>();
  e.entry_hash = j.at("entry_hash").get<std::string>();
  return e;
}

}  // namespace

std::string_view ToString(TxType type) { return kTxNames.at(static_cast<std::size_t>(type)); }

std::optional<TxType> TxTypeFromString(std::string_view name) {
  for (std::size_t i = 0; i < kTxNames.size(); ++i) {
    if (kTxNames[i] == name) return static_cast<TxType>(i);
  }
  return std::nullopt;
}

std::string Sha256Hex(std::string_view data) {
  std::array<std::uint8_t, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char *>(data.data()), data.size(), digest.data());
  return ToHex(digest);
}

std::string CanonicalBody(const LedgerEntry &entry) {
  std::string out;
  out.reserve(320);
  AppendBody(out, entry);
  out += '}';
  return out;
}

std::string CanonicalLine(const LedgerEntry &entry) {
  std::string out;
  out.reserve(400);
  AppendBody(out, entry);
  out += R"(,"entry_hash":")";
  out += entry.entry_hash;
  out += "\"}";
  return out;
}

Ledger Ledger::Create(const std::filesystem::path &path) {
  EnsureSodium();
  std::FILE *f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw StorageFailure("cannot create " + path.string());
  Ledger ledger(path, f);
  const std::string header = std::string(kLedgerHeader) + "\n";
  if (std::fwrite(header.data(), 1, header.size(), f) != header.size() || std::fflush(f) != 0) {
    throw StorageFailure("cannot write header to " + path.string());
  }
  return ledger;
}

Ledger::~Ledger() {
  if (file_ != nullptr) std::fclose(file_);
}

Ledger::Ledger(Ledger &&other) noexcept
    : path_(std::move(other.path_)),
      file_(std::exchange(other.file_, nullptr)),
      next_index_(other.next_index_),
      last_hash_(std::move(other.last_hash_)),
      counts_(std::move(other.counts_)) {}

Ledger &Ledger::operator=(Ledger &&other) noexcept {
  if (this != &other) {
    if (file_ != nullptr) std::fclose(file_);
    path_ = std::move(other.path_);
    file_ = std::exchange(other.file_, nullptr);
    next_index_ = other.next_index_;
    last_hash_ = std::move(other.last_hash_);
    counts_ = std::move(other.counts_);
  }
  return *this;
}

LedgerEntry Ledger::Append(const std::string &sender, const std::string &receiver, TxType type) {
  if (file_ == nullptr) throw StorageFailure("ledger is not open");
  if (!ValidNodeId(sender) || !ValidNodeId(receiver)) throw std::invalid_argument("invalid ledger node id");
  LedgerEntry e;
  e.index = next_index_;
  e.timestamp_ms = NowUtcMillis();
  e.sender = sender;
  e.receiver = receiver;
  e.tx_type = type;
  std::array<std::uint8_t, 16> id{};
  randombytes_buf(id.data(), id.size());
  e.tx_id = ToHex(id);
  e.prev_hash = last_hash_;
  e.entry_hash = Sha256Hex(CanonicalBody(e));

  std::string line = CanonicalLine(e);
  line += '\n';
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw StorageFailure("write failed on " + path_.string());
  }
  ++next_index_;
  last_hash_ = e.entry_hash;
  ++counts_[type];
  return e;
}

ChainVerdict VerifyChain(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageFailure("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.empty() || content.back() != '\n') {
    throw MalformedEntry(1 + static_cast<std::uint64_t>(std::count(content.begin(), content.end(), '\n')),
                         "file does not end with a newline");
  }

  ChainVerdict verdict;
  std::string prev = kZeroHash;
  std::uint64_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t eol = content.find('\n', pos);
    const std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kLedgerHeader) throw MalformedEntry(1, "unrecognised ledger header");
      continue;
    }
    const std::uint64_t expected_index = line_no - 2;
    const LedgerEntry e = ParseEntry(line, line_no);
    const char *fault = nullptr;
    if (e.index != expected_index) {
      fault = "index out of sequence";
    } else if (!ValidNodeId(e.sender) || !ValidNodeId(e.receiver)) {
      fault = "invalid node id";
    } else if (!IsLowerHex(e.tx_id, 32) || !IsLowerHex(e.prev_hash, 64) || !IsLowerHex(e.entry_hash, 64)) {
      fault = "non-canonical identifier";
    } else if (CanonicalLine(e) != line) {
      fault = "entry is not in canonical form";
    } else if (e.prev_hash != prev) {
      fault = "prev_hash does not link to the previous entry";
    } else if (Sha256Hex(CanonicalBody(e)) != e.entry_hash) {
      fault = "entry_hash does not match contents";
    }
    if (fault != nullptr) {
      verdict.valid = false;
      verdict.first_bad_index = expected_index;
      verdict.reason = fault;
      return verdict;
    }
    prev = e.entry_hash;
    ++verdict.entries;
    ++verdict.counts[e.tx_type];
    verdict.parties.insert(e.sender);
    verdict.parties.insert(e.receiver);
  }
  if (line_no == 0) throw MalformedEntry(1, "missing ledger header");
  verdict.valid = true;
  return verdict;
}

void IdentityRegistry::RegisterIssuer(const std::string &issuer_id) {
  EnsureSodium();
  std::string key(crypto_auth_KEYBYTES, '\0');
  crypto_auth_keygen(reinterpret_cast<unsigned char *>(key.data()));
  issuers_[issuer_id] = std::move(key);
}

namespace {

std::string Attest(const std::string &key, const std::string &node_id, const std::string &attribute) {
  std::string msg = node_id;
  msg.push_back('\0');
  msg += attribute;
  std::array<std::uint8_t, crypto_auth_BYTES> tag{};
  crypto_auth(tag.data(), reinterpret_cast<const unsigned char *>(msg.data()), msg.size(),
              reinterpret_cast<const unsigned char *>(key.data()));
  return ToHex(tag);
}

}  // namespace

IdentityClaim IdentityRegistry::Issue(const std::string &issuer_id, const std::string &node_id,
                                      const std::string &attribute) const {
  const auto it = issuers_.find(issuer_id);
  if (it == issuers_.end()) throw UnknownIssuer(issuer_id);
  return {node_id, attribute, issuer_id, Attest(it->second, node_id, attribute)};
}

bool VerifyClaim(const IdentityClaim &claim, const IdentityRegistry &registry) {
  const auto it = registry.issuers_.find(claim.issuer_id);
  if (it == registry.issuers_.end()) throw UnknownIssuer(claim.issuer_id);
  const std::string expected = Attest(it->second, claim.node_id, claim.attribute);
  return expected.size() == claim.attestation.size() &&
         sodium_memcmp(expected.data(), claim.attestation.data(), expected.size()) == 0;
}

}  // namespace fedchoice
