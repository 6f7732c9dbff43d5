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

#ifndef FEDCHOICE_TRANSPORT_H_
#define FEDCHOICE_TRANSPORT_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "fedchoice/message.h"

namespace fedchoice {

// Largest body a transport accepts: a 1 MiB message plus AEAD overhead.
inline constexpr std::size_t kMaxWireBody = kMaxPayloadBytes + 64;

class TransportError : public ProtocolError {
 public:
  explicit TransportError(const std::string &what) : ProtocolError("transport: " + what) {}
};

class ChannelClosed : public TransportError {
 public:
  ChannelClosed() : TransportError("channel closed by peer") {}
};

class TransportTimeout : public TransportError {
 public:
  TransportTimeout() : TransportError("receive timed out") {}
};

// Moves complete length-prefixed frames between two endpoints. One thread
// may send while another receives; a single direction is not shared.
class Transport {
 public:
  virtual ~Transport() = default;
  // Returns once the transport has taken ownership of the bytes.
  virtual void SendFrame(std::span<const std::uint8_t> frame) = 0;
  // Blocks for the next complete frame. Throws TransportTimeout or ChannelClosed.
  virtual Bytes ReceiveFrame(std::chrono::milliseconds timeout) = 0;
  virtual void Close() = 0;
  virtual std::string Describe() const = 0;
};

// Connected in-process pair (first, second).
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> MakeInProcPair(const std::string &channel_id);

class TcpListener {
 public:
  // Port 0 picks an ephemeral port; see port().
  TcpListener(const std::string &host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener &) = delete;
  TcpListener &operator=(const TcpListener &) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<Transport> Accept(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<Transport> TcpConnect(const std::string &host, std::uint16_t port, std::chrono::milliseconds timeout);

}  // namespace fedchoice

#endif  // FEDCHOICE_TRANSPORT_H_
