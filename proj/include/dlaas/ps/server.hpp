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

#include <array>
#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "dlaas/common/net.hpp"
#include "dlaas/ps/shard.hpp"
#include "dlaas/ps/wire.hpp"

namespace dlaas::ps {

// Frame counts observed by a shard server. "Data" frames are the ones that
// carry model values: PUSH with payload from learners, PULL_RESP and
// PUSH_ACK with payload from the server.
struct CounterSnapshot {
  std::array<std::uint64_t, 8> received{};  // indexed by msg_type
  std::array<std::uint64_t, 8> sent{};
  std::uint64_t data_messages = 0;
  std::uint64_t control_messages = 0;
};

// TCP front end for one ShardCore; thread per connection.
class ShardServer {
 public:
  ShardServer(ShardCore& core, JobId job, const std::string& host = "127.0.0.1",
              std::uint16_t port = 0);
  ~ShardServer();
  ShardServer(const ShardServer&) = delete;
  ShardServer& operator=(const ShardServer&) = delete;

  net::Endpoint endpoint() const { return listener_.endpoint(); }
  CounterSnapshot counters() const;
  void reset_counters();
  void stop();

 private:
  struct Conn {
    net::Socket sock;
    std::thread thread;
    std::atomic<bool> done{false};
  };
  void accept_loop();
  void serve(Conn& c);
  void send(net::Socket& s, const Message& m);
  void reap();

  ShardCore& core_;
  JobId job_;
  net::Listener listener_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conns_mu_;
  std::list<std::unique_ptr<Conn>> conns_;

  std::array<std::atomic<std::uint64_t>, 8> received_{};
  std::array<std::atomic<std::uint64_t>, 8> sent_{};
  std::atomic<std::uint64_t> data_{0};
  std::atomic<std::uint64_t> control_{0};
};

}  // namespace dlaas::ps
