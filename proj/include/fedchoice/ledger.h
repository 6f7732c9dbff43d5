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

#ifndef FEDCHOICE_LEDGER_H_
#define FEDCHOICE_LEDGER_H_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedchoice {

enum class TxType { kDomainAnnounce, kChannelOpen, kSurveyPublish, kBetaSent, kEvaluationSent, kModelPublish };

std::string_view ToString(TxType type);
std::optional<TxType> TxTypeFromString(std::string_view name);

// Transaction metadata only. Nothing here is derived from a message payload.
struct LedgerEntry {
  std::uint64_t index = 0;
  std::int64_t timestamp_ms = 0;  // UTC
  std::string sender;
  std::string receiver;
  TxType tx_type = TxType::kDomainAnnounce;
  std::string tx_id;       // 128-bit random, lowercase hex
  std::string prev_hash;   // 256-bit, lowercase hex
  std::string entry_hash;  // SHA-256 of CanonicalBody
};

inline constexpr char kLedgerHeader[] = R"({"format":"fedchoice-ledger","version":1,"digest":"sha256"})";
inline const std::string kZeroHash(64, '0');

// Canonical JSON of every field except entry_hash; the hash input.
std::string CanonicalBody(const LedgerEntry &entry);
// Full canonical line (without the trailing newline).
std::string CanonicalLine(const LedgerEntry &entry);
std::string Sha256Hex(std::string_view data);

class StorageFailure : public std::runtime_error {
 public:
  explicit StorageFailure(const std::string &what) : std::runtime_error("ledger storage: " + what) {}
};

class MalformedEntry : public std::runtime_error {
 public:
  MalformedEntry(std::uint64_t line, const std::string &what)
      : std::runtime_error("ledger line " + std::to_string(line) + ": " + what), line_(line) {}
  // 1-based line number in the file; line 1 is the header.
  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

// Append-only, single-writer, hash-chained ledger file. There is no update
// or delete.
class Ledger {
 public:
  // Creates (truncating) the file and writes the header line.
  static Ledger Create(const std::filesystem::path &path);
  ~Ledger();
  Ledger(Ledger &&other) noexcept;
  Ledger &operator=(Ledger &&other) noexcept;
  Ledger(const Ledger &) = delete;
  Ledger &operator=(const Ledger &) = delete;

  // Completes and persists an entry before returning. Node ids must match
  // [A-Za-z0-9_.:-]+.
  LedgerEntry Append(const std::string &sender, const std::string &receiver, TxType type);

  std::uint64_t size() const { return next_index_; }
  const std::map<TxType, std::uint64_t> &counts() const { return counts_; }
  const std::filesystem::path &path() const { return path_; }

 private:
  Ledger(std::filesystem::path path, std::FILE *file) : path_(std::move(path)), file_(file) {}

  std::filesystem::path path_;
  std::FILE *file_ = nullptr;
  std::uint64_t next_index_ = 0;
  std::string last_hash_ = kZeroHash;
  std::map<TxType, std::uint64_t> counts_;
};

struct ChainVerdict {
  bool valid = false;
  std::optional<std::uint64_t> first_bad_index;
  std::string reason;
  std::uint64_t entries = 0;
  std::map<TxType, std::uint64_t> counts;
  std::set<std::string> parties;
};

// Recomputes every hash link. Lines that parse but are not byte-for-byte
// canonical count as tampered. Throws MalformedEntry for a line that does
// not parse as a ledger entry, and StorageFailure if the file is unreadable.
ChainVerdict VerifyChain(const std::filesystem::path &path);

// Stand-in for issuer-attested identity claims: issuers hold a MAC key and
// attest (node, attribute) pairs.
struct IdentityClaim {
  std::string node_id;
  std::string attribute;
  std::string issuer_id;
  std::string attestation;  // hex
};

class UnknownIssuer : public std::runtime_error {
 public:
  explicit UnknownIssuer(const std::string &issuer) : std::runtime_error("unknown issuer: " + issuer) {}
};

class IdentityRegistry {
 public:
  void RegisterIssuer(const std::string &issuer_id);
  bool HasIssuer(const std::string &issuer_id) const { return issuers_.count(issuer_id) != 0; }
  IdentityClaim Issue(const std::string &issuer_id, const std::string &node_id, const std::string &attribute) const;

  friend bool VerifyClaim(const IdentityClaim &claim, const IdentityRegistry &registry);

 private:
  std::map<std::string, std::string> issuers_;  // id -> MAC key bytes
};

// True iff the attestation was issued by claim.issuer_id for exactly this
// (node, attribute). Throws UnknownIssuer.
bool VerifyClaim(const IdentityClaim &claim, const IdentityRegistry &registry);

}  // namespace fedchoice

#endif  // FEDCHOICE_LEDGER_H_
