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

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "dlaas/common/net.hpp"
#include "dlaas/coord/store.hpp"

namespace dlaas::coord {

// Serves a Store over the line protocol in docs/coord-protocol.md. One
// thread per connection; each connection owns at most one session, which is
// left to expire (not closed) when the peer disconnects without CLOSE.
class CoordServer {
 public:
  CoordServer(Store& store, const std::string& host, std::uint16_t port);
  ~CoordServer();
  CoordServer(const CoordServer&) = delete;
  CoordServer& operator=(const CoordServer&) = delete;

  net::Endpoint endpoint() const { return listener_.endpoint(); }
  void stop();

  // Executes one command line for a connection whose session id is
  // `*session`. Exposed for protocol tests.
  static std::string execute(Store& store, const std::string& line, SessionId* session);

 private:
  void accept_loop();
  void serve(net::Socket sock);

  Store& store_;
  net::Listener listener_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::list<std::thread> conns_;
};

}  // namespace dlaas::coord
