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

#include "dlaas/coord/client.hpp"

#include <algorithm>
#include <thread>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::coord {

std::pair<std::string, std::int64_t> Client::read(const std::string& path) {
  auto r = try_read(path);
  if (!r) throw Error(Errc::kNotFound, path);
  return std::move(*r);
}

std::int64_t Client::put(const std::string& path, std::string_view data) {
  while (true) {
    auto cur = try_read(path);
    try {
      if (!cur) {
        create(path, data, NodeMode::kPersistent);
        return 0;
      }
      return write_cas(path, data, cur->second);
    } catch (const Error& e) {
      if (e.code() != Errc::kVersionConflict && e.code() != Errc::kAlreadyExists &&
          e.code() != Errc::kNotFound) {
        throw;
      }
    }
  }
}

void Client::create_if_absent(const std::string& path, std::string_view data) {
  try {
    create(path, data, NodeMode::kPersistent);
  } catch (const Error& e) {
    if (e.code() != Errc::kAlreadyExists) throw;
  }
}

void Client::ensure_path(const std::string& path) {
  if (path == "/") return;
  ensure_path(parent_path(path));
  create_if_absent(path);
}

// ---------------------------------------------------------------------------

LocalClient::LocalClient(Store& store, std::optional<std::chrono::milliseconds> ttl)
    : store_(store), session_(store.open_session(ttl)) {}

LocalClient::~LocalClient() {
  if (!abandoned_) close();
}

void LocalClient::close() {
  if (!closed_) {
    closed_ = true;
    store_.close_session(session_);
  }
}

std::int64_t LocalClient::create(const std::string& path, std::string_view data,
                                 NodeMode mode) {
  return store_.create(path, data, mode, session_);
}

std::optional<std::pair<std::string, std::int64_t>> LocalClient::try_read(
    const std::string& path) {
  auto r = store_.try_read(path);
  if (!r) return std::nullopt;
  return std::make_pair(dlaas::to_string(r->first), r->second);
}

std::int64_t LocalClient::write_cas(const std::string& path, std::string_view data,
                                    std::int64_t expected_version) {
  return store_.write_cas(path, data, expected_version);
}

std::pair<std::int64_t, std::int64_t> LocalClient::atomic_increment(const std::string& path,
                                                                    std::int64_t delta) {
  return store_.atomic_increment(path, delta);
}

std::vector<std::string> LocalClient::list_children(const std::string& path) {
  return store_.list_children(path);
}

void LocalClient::remove(const std::string& path, std::int64_t expected_version) {
  store_.remove(path, expected_version);
}

bool LocalClient::wait_exists(const std::string& path, std::chrono::milliseconds timeout,
                              const net::CancelFn& cancel) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  std::shared_ptr<WatchQueue> q;
  while (true) {
    if (!q) {
      try {
        q = store_.watch(path, static_cast<unsigned>(EventKind::kCreated));
      } catch (const Error&) {
        // Parent not there yet; fall back to polling until it is.
      }
    }
    if (store_.exists(path)) return true;
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline || (cancel && cancel())) return false;
    auto slice = std::min<std::chrono::steady_clock::duration>(deadline - now,
                                                               std::chrono::milliseconds(50));
    if (q) {
      q->pop(slice);
    } else {
      std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
          slice, std::chrono::milliseconds(10)));
    }
  }
}

void LocalClient::wait_changed(const std::string& path, std::int64_t version,
                               std::chrono::milliseconds timeout,
                               const net::CancelFn& cancel) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  std::shared_ptr<WatchQueue> q;
  try {
    q = store_.watch(path, static_cast<unsigned>(EventKind::kDataChanged) |
                               static_cast<unsigned>(EventKind::kDeleted));
  } catch (const Error&) {
    return;
  }
  while (true) {
    auto st = store_.stat(path);
    if (!st || st->version != version) return;
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline || (cancel && cancel())) return;
    q->pop(std::min<std::chrono::steady_clock::duration>(deadline - now,
                                                         std::chrono::milliseconds(50)));
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string encode_data(std::string_view data) {
  if (data.empty()) return "-";
  return base64_encode(
      std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string decode_data(const std::string& token) {
  if (token == "-") return {};
  return dlaas::to_string(base64_decode(token));
}

std::int64_t to_i64(const std::string& s) {
  std::int64_t v = 0;
  if (!parse_int64(s, v)) throw Error(Errc::kProtocolError, "expected integer: " + s);
  return v;
}

}  // namespace

TcpClient::TcpClient(const net::Endpoint& server, std::chrono::milliseconds ttl) {
  try {
    sock_ = net::Socket::connect(server, std::chrono::milliseconds(2000));
  } catch (const Error& e) {
    throw Error(Errc::kCoordUnavailable, e.detail());
  }
  auto r = call("SESSION " + std::to_string(ttl.count()));
  session_ = static_cast<SessionId>(to_i64(r.at(0)));
}

TcpClient::~TcpClient() {
  try {
    close();
  } catch (const Error&) {
  }
}

void TcpClient::abandon() {
  std::lock_guard lock(mu_);
  sock_.close();
}

std::vector<std::string> TcpClient::call(const std::string& line) {
  std::lock_guard lock(mu_);
  if (!sock_.valid()) throw Error(Errc::kCoordUnavailable, "connection closed");
  std::optional<std::string> reply;
  try {
    sock_.write_all(line + "\n");
    reply = sock_.read_line();
  } catch (const Error& e) {
    sock_.close();
    throw Error(Errc::kCoordUnavailable, e.detail());
  }
  if (!reply) {
    sock_.close();
    throw Error(Errc::kCoordUnavailable, "server closed connection");
  }
  auto tokens = split(*reply, ' ');
  if (tokens.at(0) == "OK") {
    tokens.erase(tokens.begin());
    return tokens;
  }
  if (tokens.at(0) == "ERR" && tokens.size() >= 2) {
    std::string msg;
    for (std::size_t i = 2; i < tokens.size(); ++i) {
      if (i > 2) msg += ' ';
      msg += tokens[i];
    }
    throw Error(errc_from_string(tokens[1]), msg);
  }
  throw Error(Errc::kProtocolError, "unexpected reply: " + *reply);
}

void TcpClient::heartbeat() { call("HEARTBEAT"); }

void TcpClient::close() {
  {
    std::lock_guard lock(mu_);
    if (!sock_.valid()) return;
  }
  call("CLOSE");
  std::lock_guard lock(mu_);
  sock_.close();
}

std::int64_t TcpClient::create(const std::string& path, std::string_view data,
                               NodeMode mode) {
  auto r = call("CREATE " + path + " " +
                (mode == NodeMode::kEphemeral ? "EPHEMERAL" : "PERSISTENT") + " " +
                encode_data(data));
  return to_i64(r.at(0));
}

std::optional<std::pair<std::string, std::int64_t>> TcpClient::try_read(
    const std::string& path) {
  try {
    auto r = call("GET " + path);
    return std::make_pair(decode_data(r.at(1)), to_i64(r.at(0)));
  } catch (const Error& e) {
    if (e.code() == Errc::kNotFound) return std::nullopt;
    throw;
  }
}

std::int64_t TcpClient::write_cas(const std::string& path, std::string_view data,
                                  std::int64_t expected_version) {
  auto r = call("SET " + path + " " + std::to_string(expected_version) + " " +
                encode_data(data));
  return to_i64(r.at(0));
}

std::pair<std::int64_t, std::int64_t> TcpClient::atomic_increment(const std::string& path,
                                                                  std::int64_t delta) {
  auto r = call("INCR " + path + " " + std::to_string(delta));
  return {to_i64(r.at(0)), to_i64(r.at(1))};
}

std::vector<std::string> TcpClient::list_children(const std::string& path) {
  auto r = call("LS " + path);
  return r;
}

void TcpClient::remove(const std::string& path, std::int64_t expected_version) {
  call("DEL " + path + " " + std::to_string(expected_version));
}

bool TcpClient::wait_exists(const std::string& path, std::chrono::milliseconds timeout,
                            const net::CancelFn& cancel) {
  // No watches over TCP; poll.
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto r = call("EXISTS " + path);
    if (r.at(0) == "1") return true;
    if (std::chrono::steady_clock::now() >= deadline || (cancel && cancel())) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void TcpClient::wait_changed(const std::string& path, std::int64_t version,
                             std::chrono::milliseconds timeout, const net::CancelFn& cancel) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto cur = try_read(path);
    if (!cur || cur->second != version) return;
    if (std::chrono::steady_clock::now() >= deadline || (cancel && cancel())) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace dlaas::coord
