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

#include "fedchoice/transport.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace fedchoice {
namespace {

struct Queue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> frames;
  bool closed = false;
};

struct InProcLink {
  Queue to_first;
  Queue to_second;
};

class InProcTransport : public Transport {
 public:
  InProcTransport(std::shared_ptr<InProcLink> link, Queue *inbox, Queue *outbox, std::string name)
      : link_(std::move(link)), inbox_(inbox), outbox_(outbox), name_(std::move(name)) {}
  ~InProcTransport() override { Close(); }

  void SendFrame(std::span<const std::uint8_t> frame) override {
    {
      std::lock_guard<std::mutex> lock(outbox_->mu);
      if (outbox_->closed) throw ChannelClosed();
      outbox_->frames.emplace_back(frame.begin(), frame.end());
    }
    outbox_->cv.notify_one();
  }

  Bytes ReceiveFrame(std::chrono::milliseconds timeout) override {
    std::unique_lock<std::mutex> lock(inbox_->mu);
    if (!inbox_->cv.wait_for(lock, timeout, [&] { return !inbox_->frames.empty() || inbox_->closed; })) {
      throw TransportTimeout();
    }
    if (inbox_->frames.empty()) throw ChannelClosed();
    Bytes frame = std::move(inbox_->frames.front());
    inbox_->frames.pop_front();
    return frame;
  }

  void Close() override {
    for (Queue *q : {inbox_, outbox_}) {
      {
        std::lock_guard<std::mutex> lock(q->mu);
        q->closed = true;
      }
      q->cv.notify_all();
    }
  }

  std::string Describe() const override { return "inproc:" + name_; }

 private:
  std::shared_ptr<InProcLink> link_;
  Queue *inbox_;
  Queue *outbox_;
  std::string name_;
};

std::string Errno(const char *what) { return std::string(what) + ": " + std::strerror(errno); }

// Waits until fd is ready for `events`; false on timeout.
bool PollFor(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw TransportError(Errno("poll"));
  }
}

class TcpTransport : public Transport {
 public:
  TcpTransport(int fd, std::string peer) : fd_(fd), peer_(std::move(peer)) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void SendFrame(std::span<const std::uint8_t> frame) override {
    std::size_t off = 0;
    while (off < frame.size()) {
      const ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EPIPE || errno == ECONNRESET) throw ChannelClosed();
        throw TransportError(Errno("send"));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  Bytes ReceiveFrame(std::chrono::milliseconds timeout) override {
    std::uint8_t header[kFrameHeaderBytes];
    ReadExact(header, sizeof(header), timeout);
    const std::uint32_t n = ReadLengthPrefix(header);
    if (n > kMaxWireBody) throw FrameTooLarge(n);
    Bytes frame(kFrameHeaderBytes + n);
    std::memcpy(frame.data(), header, kFrameHeaderBytes);
    ReadExact(frame.data() + kFrameHeaderBytes, n, timeout);
    return frame;
  }

  void Close() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

  std::string Describe() const override { return "tcp:" + peer_; }

 private:
  void ReadExact(std::uint8_t *out, std::size_t len, std::chrono::milliseconds timeout) {
    std::size_t off = 0;
    while (off < len) {
      if (!PollFor(fd_, POLLIN, timeout)) throw TransportTimeout();
      const ssize_t n = ::recv(fd_, out + off, len - off, 0);
      if (n == 0) throw ChannelClosed();
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) throw ChannelClosed();
        throw TransportError(Errno("recv"));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  int fd_;
  std::string peer_;
};

sockaddr_in Resolve(const std::string &host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in *>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> MakeInProcPair(const std::string &channel_id) {
  auto link = std::make_shared<InProcLink>();
  auto first = std::make_unique<InProcTransport>(link, &link->to_first, &link->to_second, channel_id + "/a");
  auto second = std::make_unique<InProcTransport>(link, &link->to_second, &link->to_first, channel_id + "/b");
  return {std::move(first), std::move(second)};
}

TcpListener::TcpListener(const std::string &host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError(Errno("socket"));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = Resolve(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 64) != 0) {
    const std::string err = Errno("bind/listen");
    ::close(fd_);
    throw TransportError(err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Transport> TcpListener::Accept(std::chrono::milliseconds timeout) {
  if (!PollFor(fd_, POLLIN, timeout)) throw TransportTimeout();
  sockaddr_in peer{};
  socklen_t len = sizeof(peer);
  const int fd = ::accept(fd_, reinterpret_cast<sockaddr *>(&peer), &len);
  if (fd < 0) throw TransportError(Errno("accept"));
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &peer.sin_addr, buf, sizeof(buf));
  return std::make_unique<TcpTransport>(fd, std::string(buf) + ":" + std::to_string(ntohs(peer.sin_port)));
}

std::unique_ptr<Transport> TcpConnect(const std::string &host, std::uint16_t port, std::chrono::milliseconds timeout) {
  sockaddr_in addr = Resolve(host, port);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(Errno("socket"));
    if (::connect(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) == 0) {
      return std::make_unique<TcpTransport>(fd, host + ":" + std::to_string(port));
    }
    const int err = errno;
    ::close(fd);
    if (err != ECONNREFUSED || std::chrono::steady_clock::now() >= deadline) {
      errno = err;
      throw TransportError(Errno("connect"));
    }
    ::usleep(10000);
  }
}

}  // namespace fedchoice
