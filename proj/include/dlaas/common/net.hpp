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

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace dlaas::net {

// Return true to abandon a blocking operation (task shutdown, server stop).
using CancelFn = std::function<bool()>;

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
  // Parses "host:port" (port 0 = ephemeral); throws INVALID_ARGUMENT.
  static Endpoint parse(const std::string& text);
};

// Owning TCP stream socket. All reads poll in short slices so that `cancel`
// is honored; a closed peer or a cancellation raises IO_FAILURE / CANCELLED.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_), line_buf_(std::move(o.line_buf_)) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  static Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void close();
  // Gives up ownership of the descriptor.
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  // Unblocks a reader in another thread.
  void shutdown();

  void write_all(std::span<const std::uint8_t> data);
  void write_all(const std::string& s);
  // Reads exactly data.size() bytes.
  void read_exact(std::span<std::uint8_t> data, const CancelFn& cancel = {});
  // Reads up to '\n' (stripped). Returns nullopt on clean EOF before any byte.
  std::optional<std::string> read_line(const CancelFn& cancel = {});

 private:
  // Waits for readability; false on cancellation.
  bool wait_readable(const CancelFn& cancel);

  int fd_ = -1;
  std::string line_buf_;
};

class Listener {
 public:
  // Binds host:port (port 0 = ephemeral) and listens.
  Listener(const std::string& host, std::uint16_t port);
  Listener(Listener&&) = delete;
  ~Listener();

  Endpoint endpoint() const { return endpoint_; }
  // Returns nullopt when `cancel` fires or the listener is closed.
  std::optional<Socket> accept(const CancelFn& cancel);
  void close();

 private:
  int fd_ = -1;
  Endpoint endpoint_;
};

}  // namespace dlaas::net
