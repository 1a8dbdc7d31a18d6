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

#include "dlaas/coord/server.hpp"

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::coord {
namespace {

Bytes decode_arg(const std::string& token) {
  if (token == "-") return {};
  return base64_decode(token);
}

std::string encode_arg(const Bytes& data) {
  if (data.empty()) return "-";
  return base64_encode(data);
}

std::int64_t int_arg(const std::string& s) {
  std::int64_t v = 0;
  if (!parse_int64(s, v)) throw Error(Errc::kProtocolError, "expected integer: " + s);
  return v;
}

void require_args(const std::vector<std::string>& t, std::size_t n) {
  if (t.size() != n + 1) {
    throw Error(Errc::kProtocolError, t[0] + " takes " + std::to_string(n) + " argument(s)");
  }
}

}  // namespace

CoordServer::CoordServer(Store& store, const std::string& host, std::uint16_t port)
    : store_(store), listener_(host, port) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

CoordServer::~CoordServer() { stop(); }

void CoordServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> conns;
  {
    std::lock_guard lock(mu_);
    conns.swap(conns_);
  }
  for (auto& t : conns) t.join();
}

void CoordServer::accept_loop() {
  while (!stopping_) {
    auto sock = listener_.accept([this] { return stopping_.load(); });
    if (!sock) continue;
    std::lock_guard lock(mu_);
    conns_.emplace_back([this, s = std::move(*sock)]() mutable { serve(std::move(s)); });
  }
}

void CoordServer::serve(net::Socket sock) {
  SessionId session = kNoSession;
  auto cancel = [this] { return stopping_.load(); };
  try {
    while (true) {
      auto line = sock.read_line(cancel);
      if (!line) break;
      if (line->empty()) continue;
      sock.write_all(execute(store_, *line, &session) + "\n");
      if (*line == "CLOSE") break;
    }
  } catch (const Error&) {
    // Dropped peer or shutdown; the session, if any, expires by TTL.
  }
}

std::string CoordServer::execute(Store& store, const std::string& line, SessionId* session) {
  std::vector<std::string> t;
  for (auto& tok : split(line, ' ')) {
    if (!tok.empty()) t.push_back(tok);
  }
  try {
    if (t.empty()) throw Error(Errc::kProtocolError, "empty command");
    const std::string& cmd = t[0];
    if (cmd == "SESSION") {
      require_args(t, 1);
      if (*session != kNoSession) throw Error(Errc::kProtocolError, "session already open");
      *session = store.open_session(std::chrono::milliseconds(int_arg(t[1])));
      return "OK " + std::to_string(*session);
    }
    if (cmd == "HEARTBEAT") {
      require_args(t, 0);
      store.heartbeat(*session);
      return "OK";
    }
    if (cmd == "CLOSE") {
      require_args(t, 0);
      if (*session != kNoSession) store.close_session(*session);
      *session = kNoSession;
      return "OK";
    }
    if (cmd == "CREATE") {
      require_args(t, 3);
      NodeMode mode;
      if (t[2] == "PERSISTENT") {
        mode = NodeMode::kPersistent;
      } else if (t[2] == "EPHEMERAL") {
        mode = NodeMode::kEphemeral;
      } else {
        throw Error(Errc::kProtocolError, "mode must be PERSISTENT or EPHEMERAL");
      }
      Bytes data = decode_arg(t[3]);
      return "OK " + std::to_string(store.create(t[1], data, mode, *session));
    }
    if (cmd == "GET") {
      require_args(t, 1);
      auto [data, ver] = store.read(t[1]);
      return "OK " + std::to_string(ver) + " " + encode_arg(data);
    }
    if (cmd == "SET") {
      require_args(t, 3);
      Bytes data = decode_arg(t[3]);
      return "OK " + std::to_string(store.write_cas(t[1], data, int_arg(t[2])));
    }
    if (cmd == "INCR") {
      require_args(t, 2);
      auto [pre, post] = store.atomic_increment(t[1], int_arg(t[2]));
      return "OK " + std::to_string(pre) + " " + std::to_string(post);
    }
    if (cmd == "LS") {
      require_args(t, 1);
      std::string out = "OK";
      for (auto& c : store.list_children(t[1])) out += " " + c;
      return out;
    }
    if (cmd == "DEL") {
      require_args(t, 2);
      store.remove(t[1], int_arg(t[2]));
      return "OK";
    }
    if (cmd == "EXISTS") {
      require_args(t, 1);
      return store.exists(t[1]) ? "OK 1" : "OK 0";
    }
    throw Error(Errc::kProtocolError, "unknown command " + cmd);
  } catch (const Error& e) {
    return "ERR " + std::string(to_string(e.code())) + " " + e.detail();
  }
}

}  // namespace dlaas::coord
