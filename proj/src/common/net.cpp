// Copyright 2026 The DLaaS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dlaas/common/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <memory>

#include "dlaas/common/error.hpp"

namespace dlaas::net {
namespace {

constexpr int kPollSliceMs = 50;

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(Errc::kIoFailure, what + ": " + std::strerror(errno));
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  auto pos = text.rfind(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == text.size()) {
    throw Error(Errc::kInvalidArgument, "endpoint must be host:port: " + text);
  }
  Endpoint ep;
  ep.host = text.substr(0, pos);
  int port = 0;
  try {
    port = std::stoi(text.substr(pos + 1));
  } catch (const std::exception&) {
    throw Error(Errc::kInvalidArgument, "bad port in " + text);
  }
  if (port < 0 || port > 65535) {
    throw Error(Errc::kInvalidArgument, "port out of range in " + text);
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    o.fd_ = -1;
    line_buf_ = std::move(o.line_buf_);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket Socket::connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::kIoFailure, "resolve " + ep.host + ": " + gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(res, freeaddrinfo);

  Socket s(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw_errno("socket");
  const int flags = ::fcntl(s.fd_, F_GETFL);
  ::fcntl(s.fd_, F_SETFL, flags | O_NONBLOCK);
  if (::connect(s.fd_, res->ai_addr, res->ai_addrlen) != 0) {
    if (errno != EINPROGRESS) throw_errno("connect " + ep.str());
    pollfd pfd{s.fd_, POLLOUT, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc <= 0) throw Error(Errc::kIoFailure, "connect timeout " + ep.str());
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(s.fd_, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      errno = err;
      throw_errno("connect " + ep.str());
    }
  }
  ::fcntl(s.fd_, F_SETFL, flags);
  int one = 1;
  ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

void Socket::write_all(std::span<const std::uint8_t> data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    off += static_cast<std::size_t>(n);
  }
}

void Socket::write_all(const std::string& s) {
  write_all(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

bool Socket::wait_readable(const CancelFn& cancel) {
  while (true) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, kPollSliceMs);
    if (rc > 0) return true;
    if (rc < 0 && errno != EINTR) throw_errno("poll");
    if (cancel && cancel()) return false;
  }
}

void Socket::read_exact(std::span<std::uint8_t> data, const CancelFn& cancel) {
  std::size_t off = 0;
  // Drain bytes buffered by read_line first.
  if (!line_buf_.empty()) {
    std::size_t n = std::min(line_buf_.size(), data.size());
    std::memcpy(data.data(), line_buf_.data(), n);
    line_buf_.erase(0, n);
    off = n;
  }
  while (off < data.size()) {
    if (!wait_readable(cancel)) throw Error(Errc::kCancelled, "read cancelled");
    ssize_t n = ::recv(fd_, data.data() + off, data.size() - off, 0);
    if (n == 0) throw Error(Errc::kIoFailure, "peer closed connection");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw_errno("recv");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> Socket::read_line(const CancelFn& cancel) {
  while (true) {
    auto pos = line_buf_.find('\n');
    if (pos != std::string::npos) {
      std::string line = line_buf_.substr(0, pos);
      line_buf_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (!wait_readable(cancel)) throw Error(Errc::kCancelled, "read cancelled");
    char buf[4096];
    ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n == 0) {
      if (line_buf_.empty()) return std::nullopt;
      throw Error(Errc::kIoFailure, "peer closed mid-line");
    }
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw_errno("recv");
    }
    line_buf_.append(buf, static_cast<std::size_t>(n));
  }
}

Listener::Listener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw_errno("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw Error(Errc::kInvalidArgument, "bad listen address " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    throw_errno("bind " + host + ":" + std::to_string(port));
  }
  if (::listen(fd_, 128) != 0) {
    ::close(fd_);
    throw_errno("listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  endpoint_ = Endpoint{host, ntohs(addr.sin_port)};
}

Listener::~Listener() { close(); }

void Listener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<Socket> Listener::accept(const CancelFn& cancel) {
  while (fd_ >= 0) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, kPollSliceMs);
    if (rc > 0) {
      int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) {
        if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) continue;
        return std::nullopt;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (cancel && cancel()) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace dlaas::net
