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

#include "fedchoice/secure_channel.h"

#include <sodium.h>

#include <mutex>

namespace fedchoice {
namespace {

using Clock = std::chrono::steady_clock;

constexpr char kConfirmLabel[] = "fedchoice-key-confirm";

std::array<std::uint8_t, crypto_aead_chacha20poly1305_IETF_NPUBBYTES> NonceBytes(std::uint64_t counter) {
  std::array<std::uint8_t, crypto_aead_chacha20poly1305_IETF_NPUBBYTES> nonce{};
  for (int i = 0; i < 8; ++i) nonce[nonce.size() - 1 - i] = static_cast<std::uint8_t>(counter >> (8 * i));
  return nonce;
}

std::string ConfirmTag(const Key &key, const Bytes &client_pk, const Bytes &server_pk) {
  crypto_generichash_state st;
  crypto_generichash_init(&st, key.data(), key.size(), 32);
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char *>(kConfirmLabel), sizeof(kConfirmLabel) - 1);
  crypto_generichash_update(&st, client_pk.data(), client_pk.size());
  crypto_generichash_update(&st, server_pk.data(), server_pk.size());
  std::array<std::uint8_t, 32> out{};
  crypto_generichash_final(&st, out.data(), out.size());
  return ToHex(out);
}

void Count(TrafficCounters &c, MsgType type, std::size_t bytes, bool sent) {
  const bool data = type == MsgType::kBetaProposal || type == MsgType::kEvaluation;
  if (sent) {
    ++c.messages_sent;
    c.bytes_sent += bytes;
    if (data) ++c.data_messages_sent;
  } else {
    ++c.messages_received;
    c.bytes_received += bytes;
    if (data) ++c.data_messages_received;
  }
  if (data && bytes > c.max_data_frame_bytes) c.max_data_frame_bytes = bytes;
}

double Seconds(Clock::time_point a, Clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }

}  // namespace

void EnsureSodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  });
}

std::string ToHex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(bytes.size() * 2, '0');
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out[2 * i] = kDigits[bytes[i] >> 4];
    out[2 * i + 1] = kDigits[bytes[i] & 0xF];
  }
  return out;
}

Bytes FromHex(const std::string &hex) {
  if (hex.size() % 2 != 0) throw ProtocolError("odd-length hex string");
  Bytes out(hex.size() / 2);
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw ProtocolError("invalid hex digit");
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

Bytes Seal(const Key &key, std::uint64_t counter, std::span<const std::uint8_t> plaintext) {
  EnsureSodium();
  Bytes out(plaintext.size() + crypto_aead_chacha20poly1305_IETF_ABYTES);
  unsigned long long len = 0;
  const auto nonce = NonceBytes(counter);
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &len, plaintext.data(), plaintext.size(), nullptr, 0, nullptr,
                                            nonce.data(), key.data());
  out.resize(len);
  return out;
}

Bytes Open(const Key &key, std::uint64_t counter, std::span<const std::uint8_t> ciphertext) {
  EnsureSodium();
  if (ciphertext.size() < crypto_aead_chacha20poly1305_IETF_ABYTES) throw AuthenticationError();
  Bytes out(ciphertext.size() - crypto_aead_chacha20poly1305_IETF_ABYTES);
  unsigned long long len = 0;
  const auto nonce = NonceBytes(counter);
  if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &len, nullptr, ciphertext.data(), ciphertext.size(),
                                                nullptr, 0, nonce.data(), key.data()) != 0) {
    throw AuthenticationError();
  }
  out.resize(len);
  return out;
}

SecureChannel::SecureChannel(std::unique_ptr<Transport> transport, std::string self_id, ChannelOptions options)
    : transport_(std::move(transport)), self_id_(std::move(self_id)), options_(std::move(options)) {
  EnsureSodium();
}

SecureChannel::~SecureChannel() {
  sodium_memzero(keys_.rx.data(), keys_.rx.size());
  sodium_memzero(keys_.tx.data(), keys_.tx.size());
}

void SecureChannel::Close() { transport_->Close(); }

Bytes SecureChannel::Wrap(const std::string &json, std::uint64_t nonce) {
  const std::span<const std::uint8_t> body{reinterpret_cast<const std::uint8_t *>(json.data()), json.size()};
  if (body.size() > kMaxPayloadBytes) throw FrameTooLarge(body.size());
  if (!encrypted()) return Frame(body);
  const Bytes sealed = Seal(keys_.tx, nonce, body);
  Bytes frame(kFrameHeaderBytes + sealed.size());
  const auto n = static_cast<std::uint32_t>(sealed.size());
  frame[0] = static_cast<std::uint8_t>(n >> 24);
  frame[1] = static_cast<std::uint8_t>(n >> 16);
  frame[2] = static_cast<std::uint8_t>(n >> 8);
  frame[3] = static_cast<std::uint8_t>(n);
  std::copy(sealed.begin(), sealed.end(), frame.begin() + kFrameHeaderBytes);
  return frame;
}

std::string SecureChannel::Unwrap(std::span<const std::uint8_t> frame, std::uint64_t nonce) {
  const std::uint32_t n = ReadLengthPrefix(frame);
  if (frame.size() - kFrameHeaderBytes != n) throw FramingError("length prefix disagrees with frame size");
  const auto body = frame.subspan(kFrameHeaderBytes);
  if (!encrypted()) {
    if (body.size() > kMaxPayloadBytes) throw FrameTooLarge(body.size());
    return {reinterpret_cast<const char *>(body.data()), body.size()};
  }
  const Bytes plain = Open(keys_.rx, nonce, body);
  return {reinterpret_cast<const char *>(plain.data()), plain.size()};
}

SendInfo SecureChannel::Send(Payload payload) {
  const auto start = Clock::now();
  Message msg;
  msg.sender = self_id_;
  msg.nonce = send_nonce_;
  msg.payload = std::move(payload);
  const std::string json = EncodeJson(msg);
  const Bytes frame = Wrap(json, msg.nonce);
  if (options_.tap) options_.tap(Direction::kSend, peer_id_, json);
  transport_->SendFrame(frame);
  ++send_nonce_;
  Count(traffic_, msg.type(), frame.size(), true);
  return {frame.size(), Seconds(start, Clock::now())};
}

Received SecureChannel::Receive(std::chrono::milliseconds timeout) {
  const Bytes frame = transport_->ReceiveFrame(timeout);
  const auto start = Clock::now();
  const std::string json = Unwrap(frame, recv_nonce_);
  Received out;
  out.msg = DecodeJson(json);
  if (out.msg.nonce != recv_nonce_) throw NonceError(recv_nonce_, out.msg.nonce);
  if (peer_id_.empty()) {
    peer_id_ = out.msg.sender;
  } else if (out.msg.sender != peer_id_) {
    throw ProtocolError("sender changed mid-channel from " + peer_id_ + " to " + out.msg.sender);
  }
  ++recv_nonce_;
  if (options_.tap) options_.tap(Direction::kReceive, peer_id_, json);
  out.wire_bytes = frame.size();
  Count(traffic_, out.msg.type(), frame.size(), false);
  out.latency_s = Seconds(start, Clock::now());
  return out;
}

void SecureChannel::InitiateHandshake(std::chrono::milliseconds timeout) {
  if (established_) throw HandshakeFailure("channel already established");
  Bytes pk(crypto_kx_PUBLICKEYBYTES);
  Bytes sk(crypto_kx_SECRETKEYBYTES);
  crypto_kx_keypair(pk.data(), sk.data());
  Send(ConnectionRequestPayload{options_.insecure ? std::string() : ToHex(pk)});

  const Received reply = Receive(timeout);
  const auto *accept = std::get_if<ConnectionAcceptPayload>(&reply.msg.payload);
  if (accept == nullptr) {
    sodium_memzero(sk.data(), sk.size());
    throw HandshakeFailure("expected ConnectionAccept, got " + std::string(ToString(reply.msg.type())));
  }
  if (options_.insecure) {
    sodium_memzero(sk.data(), sk.size());
    if (!accept->public_key.empty()) throw HandshakeFailure("peer expects an encrypted session");
    established_ = true;
    return;
  }
  Bytes server_pk;
  try {
    server_pk = FromHex(accept->public_key);
  } catch (const ProtocolError &) {
    server_pk.clear();
  }
  const bool derived = server_pk.size() == crypto_kx_PUBLICKEYBYTES &&
                       crypto_kx_client_session_keys(keys_.rx.data(), keys_.tx.data(), pk.data(), sk.data(),
                                                     server_pk.data()) == 0;
  sodium_memzero(sk.data(), sk.size());
  if (!derived) throw HandshakeFailure("key exchange with peer failed");
  const std::string expected = ConfirmTag(keys_.rx, pk, server_pk);
  if (expected.size() != accept->confirm.size() ||
      sodium_memcmp(expected.data(), accept->confirm.data(), expected.size()) != 0) {
    throw HandshakeFailure("key confirmation mismatch");
  }
  established_ = true;
}

void SecureChannel::AcceptHandshake(const Message &request) {
  if (established_) throw HandshakeFailure("channel already established");
  const auto *req = std::get_if<ConnectionRequestPayload>(&request.payload);
  if (req == nullptr) throw HandshakeFailure("expected ConnectionRequest");
  if (options_.insecure) {
    if (!req->public_key.empty()) throw HandshakeFailure("peer expects an encrypted session");
    Send(ConnectionAcceptPayload{});
    established_ = true;
    return;
  }
  Bytes client_pk;
  try {
    client_pk = FromHex(req->public_key);
  } catch (const ProtocolError &) {
    throw HandshakeFailure("malformed initiator key");
  }
  if (client_pk.size() != crypto_kx_PUBLICKEYBYTES) throw HandshakeFailure("initiator key has the wrong length");
  Bytes pk(crypto_kx_PUBLICKEYBYTES);
  Bytes sk(crypto_kx_SECRETKEYBYTES);
  crypto_kx_keypair(pk.data(), sk.data());
  const int rc = crypto_kx_server_session_keys(keys_.rx.data(), keys_.tx.data(), pk.data(), sk.data(),
                                               client_pk.data());
  sodium_memzero(sk.data(), sk.size());
  if (rc != 0) throw HandshakeFailure("key exchange with initiator failed");
  Send(ConnectionAcceptPayload{ToHex(pk), ConfirmTag(keys_.tx, client_pk, pk)});
  established_ = true;
}

}  // namespace fedchoice
