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

#ifndef FEDCHOICE_SECURE_CHANNEL_H_
#define FEDCHOICE_SECURE_CHANNEL_H_

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "fedchoice/message.h"
#include "fedchoice/metrics.h"
#include "fedchoice/transport.h"

namespace fedchoice {

class HandshakeFailure : public ProtocolError {
 public:
  explicit HandshakeFailure(const std::string &what) : ProtocolError("handshake: " + what) {}
};

class AuthenticationError : public ProtocolError {
 public:
  AuthenticationError() : ProtocolError("frame failed authentication; dropped") {}
};

class NonceError : public ProtocolError {
 public:
  NonceError(std::uint64_t expected, std::uint64_t got)
      : ProtocolError("nonce " + std::to_string(got) + " received, expected " + std::to_string(expected)) {}
};

using Key = std::array<std::uint8_t, 32>;

// Per-direction symmetric keys of one session.
struct SessionKeys {
  Key rx{};
  Key tx{};
};

// ChaCha20-Poly1305 (IETF) with the 64-bit message counter as nonce.
Bytes Seal(const Key &key, std::uint64_t counter, std::span<const std::uint8_t> plaintext);
// Throws AuthenticationError on any mismatch.
Bytes Open(const Key &key, std::uint64_t counter, std::span<const std::uint8_t> ciphertext);

void EnsureSodium();
std::string ToHex(std::span<const std::uint8_t> bytes);
Bytes FromHex(const std::string &hex);

enum class Direction { kSend, kReceive };

// Observes every plaintext message text crossing a channel.
using PlaintextTap = std::function<void(Direction, const std::string &peer, const std::string &json)>;

struct ChannelOptions {
  bool insecure = false;  // skip encryption; debugging only
  PlaintextTap tap;
};

struct SendInfo {
  std::size_t wire_bytes = 0;
  double latency_s = 0.0;  // serialization start to transport accept
};

struct Received {
  Message msg;
  std::size_t wire_bytes = 0;
  double latency_s = 0.0;  // transport delivery to end of decode
};

// Duplex message channel over a Transport. Plaintext until a handshake
// completes, then every frame body is sealed. Nonces run per direction and
// must arrive without gaps or repeats.
class SecureChannel {
 public:
  SecureChannel(std::unique_ptr<Transport> transport, std::string self_id, ChannelOptions options = {});
  ~SecureChannel();
  SecureChannel(const SecureChannel &) = delete;
  SecureChannel &operator=(const SecureChannel &) = delete;

  SendInfo Send(Payload payload);
  Received Receive(std::chrono::milliseconds timeout);

  // Initiator side: sends ConnectionRequest, waits for ConnectionAccept.
  void InitiateHandshake(std::chrono::milliseconds timeout);
  // Responder side, given the ConnectionRequest already received.
  void AcceptHandshake(const Message &request);

  bool established() const { return established_; }
  bool encrypted() const { return established_ && !options_.insecure; }
  const std::string &self_id() const { return self_id_; }
  const std::string &peer_id() const { return peer_id_; }
  Transport &transport() { return *transport_; }
  // Every frame in either direction, handshake included.
  const TrafficCounters &traffic() const { return traffic_; }
  void Close();

  // Test access to session keys.
  const SessionKeys &session_keys() const { return keys_; }

 private:
  Bytes Wrap(const std::string &json, std::uint64_t nonce);
  std::string Unwrap(std::span<const std::uint8_t> frame, std::uint64_t nonce);

  std::unique_ptr<Transport> transport_;
  std::string self_id_;
  std::string peer_id_;
  ChannelOptions options_;
  bool established_ = false;
  SessionKeys keys_;
  std::uint64_t send_nonce_ = 0;
  std::uint64_t recv_nonce_ = 0;
  TrafficCounters traffic_;
};

}  // namespace fedchoice

#endif  // FEDCHOICE_SECURE_CHANNEL_H_
