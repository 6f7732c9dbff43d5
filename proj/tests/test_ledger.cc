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

#include <sodium.h>

#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fedchoice/ledger.h"
#include "fedchoice/secure_channel.h"
#include "json.hpp"
#include "temp_dir.h"

using namespace fedchoice;
using fedchoice::testing::TempDir;

namespace {

std::string ReadAll(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteAll(const std::filesystem::path &p, const std::string &s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

std::vector<std::string> Lines(const std::string &s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t eol = s.find('\n', pos);
    out.push_back(s.substr(pos, eol - pos));
    pos = eol + 1;
  }
  return out;
}

std::string Join(const std::vector<std::string> &lines) {
  std::string s;
  for (const auto &l : lines) s += l + "\n";
  return s;
}

// Digest computed with a second SHA-256 implementation.
std::string OracleSha256(const std::string &s) {
  std::array<std::uint8_t, crypto_hash_sha256_BYTES> d{};
  crypto_hash_sha256(d.data(), reinterpret_cast<const unsigned char *>(s.data()), s.size());
  return ToHex(d);
}

const TxType kAllTypes[] = {TxType::kDomainAnnounce, TxType::kChannelOpen,     TxType::kSurveyPublish,
                            TxType::kBetaSent,       TxType::kEvaluationSent, TxType::kModelPublish};

std::filesystem::path Build(const TempDir &dir, int n, std::uint64_t seed = 1) {
  const auto path = dir / "ledger.jsonl";
  auto ledger = Ledger::Create(path);
  std::mt19937_64 gen(seed);
  for (int i = 0; i < n; ++i) {
    ledger.Append("n" + std::to_string(gen() % 5), "n" + std::to_string(gen() % 5), kAllTypes[gen() % 6]);
  }
  return path;
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(Sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(Sha256Hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("first entry and linkage") {
  TempDir dir;
  auto ledger = Ledger::Create(dir / "l.jsonl");
  const LedgerEntry e0 = ledger.Append("chief", "domain", TxType::kDomainAnnounce);
  const LedgerEntry e1 = ledger.Append("chief", "w1", TxType::kChannelOpen);
  CHECK(e0.index == 0);
  CHECK(e0.prev_hash == std::string(64, '0'));
  CHECK(e1.index == 1);
  CHECK(e1.prev_hash == e0.entry_hash);
  CHECK(e0.entry_hash == OracleSha256(CanonicalBody(e0)));
  CHECK(e1.entry_hash == OracleSha256(CanonicalBody(e1)));
  CHECK(e0.tx_id.size() == 32);
  CHECK(ledger.size() == 2);
  CHECK(ledger.counts().at(TxType::kChannelOpen) == 1);

  // Persisted before return.
  const auto lines = Lines(ReadAll(dir / "l.jsonl"));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == kLedgerHeader);
  CHECK(lines[2] == CanonicalLine(e1));
}

TEST_CASE("canonical line layout") {
  TempDir dir;
  auto ledger = Ledger::Create(dir / "l.jsonl");
  const LedgerEntry e = ledger.Append("w2", "chief", TxType::kEvaluationSent);
  const auto j = nlohmann::ordered_json::parse(CanonicalLine(e));
  std::vector<std::string> keys;
  for (const auto &[k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"index", "timestamp", "sender", "receiver", "tx_type", "tx_id", "prev_hash",
                                         "entry_hash"});
  CHECK(j["tx_type"] == "EvaluationSent");
  CHECK(j["sender"] == "w2");
  auto body = j;
  body.erase("entry_hash");
  CHECK(CanonicalBody(e) == body.dump());
  CHECK(j["entry_hash"] == OracleSha256(body.dump()));
}

TEST_CASE("identical appends differ in tx_id and hash") {
  TempDir dir;
  auto ledger = Ledger::Create(dir / "l.jsonl");
  std::set<std::string> ids, hashes;
  for (int i = 0; i < 500; ++i) {
    const auto e = ledger.Append("chief", "w1", TxType::kBetaSent);
    ids.insert(e.tx_id);
    hashes.insert(e.entry_hash);
  }
  CHECK(ids.size() == 500);
  CHECK(hashes.size() == 500);
}

TEST_CASE("invalid node ids are refused") {
  TempDir dir;
  auto ledger = Ledger::Create(dir / "l.jsonl");
  CHECK_THROWS_AS(ledger.Append("", "w1", TxType::kBetaSent), std::invalid_argument);
  CHECK_THROWS_AS(ledger.Append("chief", "w 1", TxType::kBetaSent), std::invalid_argument);
  CHECK_THROWS_AS(ledger.Append("chi\"ef", "w1", TxType::kBetaSent), std::invalid_argument);
  CHECK(ledger.size() == 0);
}

TEST_CASE("chains of any length verify") {
  std::mt19937_64 gen(99);
  for (int n : {1, 2, 3, 10, 57, 256, 999, 1000}) {
    TempDir dir;
    const auto path = Build(dir, n, gen());
    const auto v = VerifyChain(path);
    INFO("n = " << n);
    CHECK(v.valid);
    CHECK(v.entries == static_cast<std::uint64_t>(n));
    std::uint64_t total = 0;
    for (const auto &[t, c] : v.counts) total += c;
    CHECK(total == static_cast<std::uint64_t>(n));
  }
  for (int trial = 0; trial < 20; ++trial) {
    TempDir dir;
    const int n = 1 + static_cast<int>(gen() % 1000);
    CHECK(VerifyChain(Build(dir, n, gen())).valid);
  }
}

TEST_CASE("empty ledger verifies") {
  TempDir dir;
  { auto ledger = Ledger::Create(dir / "l.jsonl"); }
  const auto v = VerifyChain(dir / "l.jsonl");
  CHECK(v.valid);
  CHECK(v.entries == 0);
}

TEST_CASE("tampering with entry 5 is located") {
  TempDir dir;
  const auto path = Build(dir, 10);
  auto lines = Lines(ReadAll(path));
  SUBCASE("sender byte") {
    const std::size_t at = lines[6].find("\"sender\":\"") + 10;
    lines[6][at] = lines[6][at] == 'n' ? 'm' : 'n';
  }
  SUBCASE("timestamp digit") {
    const std::size_t at = lines[6].find("\"timestamp\":") + 12;
    lines[6][at] = lines[6][at] == '1' ? '2' : '1';
  }
  SUBCASE("entry hash digit") {
    const std::size_t at = lines[6].find("\"entry_hash\":\"") + 20;
    lines[6][at] = lines[6][at] == 'a' ? 'b' : 'a';
  }
  WriteAll(path, Join(lines));
  const auto v = VerifyChain(path);
  CHECK_FALSE(v.valid);
  REQUIRE(v.first_bad_index.has_value());
  CHECK(*v.first_bad_index == 5);
}

TEST_CASE("a rehashed entry breaks the next link") {
  TempDir dir;
  const auto path = Build(dir, 10);
  auto lines = Lines(ReadAll(path));
  auto j = nlohmann::ordered_json::parse(lines[6]);
  j["sender"] = "zz";
  j.erase("entry_hash");
  j["entry_hash"] = OracleSha256(j.dump());
  lines[6] = j.dump();
  WriteAll(path, Join(lines));
  const auto v = VerifyChain(path);
  CHECK_FALSE(v.valid);
  CHECK(*v.first_bad_index == 6);
  CHECK(v.reason.find("prev_hash") != std::string::npos);
}

TEST_CASE("removing or reordering entries") {
  TempDir dir;
  const auto path = Build(dir, 10);
  auto lines = Lines(ReadAll(path));
  SUBCASE("dropping the tail stays valid") {
    lines.pop_back();
    WriteAll(path, Join(lines));
    const auto v = VerifyChain(path);
    CHECK(v.valid);
    CHECK(v.entries == 9);
  }
  SUBCASE("dropping a middle entry is detected") {
    lines.erase(lines.begin() + 4);
    WriteAll(path, Join(lines));
    const auto v = VerifyChain(path);
    CHECK_FALSE(v.valid);
    CHECK(*v.first_bad_index == 3);
  }
  SUBCASE("swapping entries is detected") {
    std::swap(lines[3], lines[4]);
    WriteAll(path, Join(lines));
    CHECK(*VerifyChain(path).first_bad_index == 2);
  }
}

TEST_CASE("malformed ledgers") {
  TempDir dir;
  const auto path = Build(dir, 4);
  const std::string good = ReadAll(path);
  auto expect_line = [&](const std::string &content, std::uint64_t line) {
    WriteAll(path, content);
    try {
      VerifyChain(path);
      FAIL("expected MalformedEntry");
    } catch (const MalformedEntry &e) {
      CHECK(e.line() == line);
    }
  };
  auto lines = Lines(good);
  SUBCASE("garbage line") {
    lines[3] = "not json";
    expect_line(Join(lines), 4);
  }
  SUBCASE("missing field") {
    auto j = nlohmann::ordered_json::parse(lines[2]);
    j.erase("tx_id");
    lines[2] = j.dump();
    expect_line(Join(lines), 3);
  }
  SUBCASE("unknown tx type") {
    auto j = nlohmann::ordered_json::parse(lines[2]);
    j["tx_type"] = "Payment";
    lines[2] = j.dump();
    expect_line(Join(lines), 3);
  }
  SUBCASE("no trailing newline") { expect_line(good.substr(0, good.size() - 1), 5); }
  SUBCASE("bad header") {
    lines[0] = R"({"format":"other"})";
    expect_line(Join(lines), 1);
  }
  SUBCASE("empty file") { expect_line("", 1); }
  SUBCASE("missing file") { CHECK_THROWS_AS(VerifyChain(dir / "absent.jsonl"), StorageFailure); }
}

TEST_CASE("single-byte mutations are always detected") {
  TempDir dir;
  const auto path = Build(dir, 20, 5);
  const std::string good = ReadAll(path);
  std::mt19937_64 gen(31337);
  int detected = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    std::string bad = good;
    const std::size_t pos = gen() % bad.size();
    bad[pos] = static_cast<char>(bad[pos] ^ static_cast<char>(1 + gen() % 255));
    WriteAll(path, bad);
    try {
      if (!VerifyChain(path).valid) ++detected;
    } catch (const MalformedEntry &) {
      ++detected;
    }
  }
  CHECK(detected == trials);
}

TEST_CASE("storage failure") {
  CHECK_THROWS_AS(Ledger::Create("/nonexistent-dir/for/ledger.jsonl"), StorageFailure);
}

TEST_CASE("tx type names") {
  for (TxType t : kAllTypes) CHECK(TxTypeFromString(ToString(t)) == t);
  CHECK_FALSE(TxTypeFromString("Evaluation").has_value());
}

TEST_CASE("identity claims") {
  IdentityRegistry registry;
  registry.RegisterIssuer("dmv");
  registry.RegisterIssuer("bank");
  const IdentityClaim claim = registry.Issue("dmv", "nodeA", "age_over_18");
  CHECK(VerifyClaim(claim, registry));

  IdentityClaim stolen = claim;
  stolen.node_id = "nodeB";
  CHECK_FALSE(VerifyClaim(stolen, registry));

  IdentityClaim other_attr = claim;
  other_attr.attribute = "age_over_21";
  CHECK_FALSE(VerifyClaim(other_attr, registry));

  IdentityClaim wrong_issuer = claim;
  wrong_issuer.issuer_id = "bank";
  CHECK_FALSE(VerifyClaim(wrong_issuer, registry));

  // The separator keeps (node, attribute) splits distinct.
  const IdentityClaim split = registry.Issue("dmv", "node", "Aage_over_18");
  CHECK(split.attestation != claim.attestation);

  IdentityClaim forged = claim;
  forged.issuer_id = "nobody";
  CHECK_THROWS_AS(VerifyClaim(forged, registry), UnknownIssuer);
  CHECK_THROWS_AS(registry.Issue("nobody", "nodeA", "x"), UnknownIssuer);
  CHECK(registry.HasIssuer("dmv"));
  CHECK_FALSE(registry.HasIssuer("nobody"));
}
