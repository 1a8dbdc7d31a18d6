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
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dlaas/common/bytes.hpp"
#include "dlaas/common/net.hpp"
#include "dlaas/coord/store.hpp"

namespace dlaas::coord {

// Session-bound handle used by tasks (learners, PS shards, watchdogs) and the
// LCM. LocalClient talks to an in-process Store; TcpClient speaks the line
// protocol to a CoordServer so tasks in other processes share one store.
class Client {
 public:
  virtual ~Client() = default;

  virtual SessionId session() const = 0;
  virtual void heartbeat() = 0;
  virtual void close() = 0;

  virtual std::int64_t create(const std::string& path, std::string_view data,
                              NodeMode mode = NodeMode::kPersistent) = 0;
  virtual std::optional<std::pair<std::string, std::int64_t>> try_read(
      const std::string& path) = 0;
  virtual std::int64_t write_cas(const std::string& path, std::string_view data,
                                 std::int64_t expected_version) = 0;
  virtual std::pair<std::int64_t, std::int64_t> atomic_increment(const std::string& path,
                                                                 std::int64_t delta) = 0;
  virtual std::vector<std::string> list_children(const std::string& path) = 0;
  virtual void remove(const std::string& path, std::int64_t expected_version) = 0;

  // Blocks until `path` exists, `timeout` elapses, or `cancel` fires.
  virtual bool wait_exists(const std::string& path, std::chrono::milliseconds timeout,
                           const net::CancelFn& cancel) = 0;
  // Blocks until `path`'s data changes from `version`, or timeout/cancel.
  virtual void wait_changed(const std::string& path, std::int64_t version,
                            std::chrono::milliseconds timeout,
                            const net::CancelFn& cancel) = 0;

  std::pair<std::string, std::int64_t> read(const std::string& path);
  bool exists(const std::string& path) { return try_read(path).has_value(); }
  // Unconditional write (CAS retry loop); creates the node if absent.
  std::int64_t put(const std::string& path, std::string_view data);
  // create() that treats ALREADY_EXISTS as success.
  void create_if_absent(const std::string& path, std::string_view data = {});
  void ensure_path(const std::string& path);
};

class LocalClient final : public Client {
 public:
  // Opens a fresh session on `store`.
  explicit LocalClient(Store& store,
                       std::optional<std::chrono::milliseconds> ttl = std::nullopt);
  ~LocalClient() override;

  SessionId session() const override { return session_; }
  void heartbeat() override { store_.heartbeat(session_); }
  void close() override;

  std::int64_t create(const std::string& path, std::string_view data,
                      NodeMode mode = NodeMode::kPersistent) override;
  std::optional<std::pair<std::string, std::int64_t>> try_read(const std::string& path) override;
  std::int64_t write_cas(const std::string& path, std::string_view data,
                         std::int64_t expected_version) override;
  std::pair<std::int64_t, std::int64_t> atomic_increment(const std::string& path,
                                                         std::int64_t delta) override;
  std::vector<std::string> list_children(const std::string& path) override;
  void remove(const std::string& path, std::int64_t expected_version) override;
  bool wait_exists(const std::string& path, std::chrono::milliseconds timeout,
                   const net::CancelFn& cancel) override;
  void wait_changed(const std::string& path, std::int64_t version,
                    std::chrono::milliseconds timeout, const net::CancelFn& cancel) override;

  // Drops the handle without closing the session, as a crashed process would;
  // ephemeral nodes then linger until the TTL lapses.
  void abandon() { abandoned_ = true; }

 private:
  Store& store_;
  SessionId session_;
  bool closed_ = false;
  bool abandoned_ = false;
};

// Client for the line-oriented TCP protocol (see docs/coord-protocol.md).
// Calls are serialized over one connection. Transport failures surface as
// COORDSTORE_UNAVAILABLE.
class TcpClient final : public Client {
 public:
  TcpClient(const net::Endpoint& server, std::chrono::milliseconds ttl);
  ~TcpClient() override;

  SessionId session() const override { return session_; }
  void heartbeat() override;
  void close() override;

  std::int64_t create(const std::string& path, std::string_view data,
                      NodeMode mode = NodeMode::kPersistent) override;
  std::optional<std::pair<std::string, std::int64_t>> try_read(const std::string& path) override;
  std::int64_t write_cas(const std::string& path, std::string_view data,
                         std::int64_t expected_version) override;
  std::pair<std::int64_t, std::int64_t> atomic_increment(const std::string& path,
                                                         std::int64_t delta) override;
  std::vector<std::string> list_children(const std::string& path) override;
  void remove(const std::string& path, std::int64_t expected_version) override;
  bool wait_exists(const std::string& path, std::chrono::milliseconds timeout,
                   const net::CancelFn& cancel) override;
  void wait_changed(const std::string& path, std::int64_t version,
                    std::chrono::milliseconds timeout, const net::CancelFn& cancel) override;

  void abandon();

 private:
  // Sends one command line and returns the tokens after "OK".
  std::vector<std::string> call(const std::string& line);

  std::mutex mu_;
  net::Socket sock_;
  SessionId session_ = kNoSession;
};

}  // namespace dlaas::coord
