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

#include "dlaas/coord/store.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::coord {

using Clock = std::chrono::steady_clock;

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kCreated: return "CREATED";
    case EventKind::kDataChanged: return "DATA_CHANGED";
    case EventKind::kDeleted: return "DELETED";
    case EventKind::kChildrenChanged: return "CHILDREN_CHANGED";
  }
  return "?";
}

std::string parent_path(const std::string& path) {
  auto pos = path.rfind('/');
  if (pos == 0 || pos == std::string::npos) return "/";
  return path.substr(0, pos);
}

std::string join_path(const std::string& parent, const std::string& child) {
  if (parent == "/") return "/" + child;
  return parent + "/" + child;
}

namespace {

std::string basename(const std::string& path) {
  return path.substr(path.rfind('/') + 1);
}

}  // namespace

Store::Store(StoreOptions options) : options_(options) {
  nodes_.emplace("/", Node{});
  if (options_.run_reaper) {
    reaper_ = std::thread([this] { reaper_loop(); });
  }
}

Store::~Store() {
  {
    std::lock_guard lock(reaper_mu_);
    stopping_ = true;
  }
  reaper_cv_.notify_all();
  if (reaper_.joinable()) reaper_.join();
}

void Store::reaper_loop() {
  auto interval = options_.reap_interval.count() > 0
                      ? options_.reap_interval
                      : std::max(std::chrono::milliseconds(5), options_.default_ttl / 4);
  std::unique_lock lock(reaper_mu_);
  while (!stopping_) {
    reaper_cv_.wait_for(lock, interval, [&] { return stopping_; });
    if (stopping_) break;
    lock.unlock();
    expire_due_sessions();
    lock.lock();
  }
}

void Store::check_path(const std::string& path) const {
  if (path.empty() || path.front() != '/') {
    throw Error(Errc::kInvalidArgument, "path must be absolute: '" + path + "'");
  }
  if (path == "/") return;
  if (path.back() == '/' || path.find("//") != std::string::npos) {
    throw Error(Errc::kInvalidArgument, "malformed path: '" + path + "'");
  }
  for (char c : path) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
      throw Error(Errc::kInvalidArgument, "whitespace in path: '" + path + "'");
    }
  }
}

SessionId Store::open_session(std::optional<std::chrono::milliseconds> ttl) {
  std::unique_lock lock(mu_);
  SessionId id = next_session_++;
  sessions_.emplace(id, Session{ttl.value_or(options_.default_ttl), Clock::now(), {}});
  return id;
}

void Store::heartbeat(SessionId session) {
  std::unique_lock lock(mu_);
  auto it = sessions_.find(session);
  if (it == sessions_.end()) {
    throw Error(Errc::kSessionExpired, "session " + std::to_string(session));
  }
  auto now = Clock::now();
  if (now - it->second.last_heartbeat > it->second.ttl) {
    drop_session_locked(session);
    throw Error(Errc::kSessionExpired, "session " + std::to_string(session));
  }
  it->second.last_heartbeat = now;
}

void Store::close_session(SessionId session) {
  std::unique_lock lock(mu_);
  if (sessions_.count(session)) drop_session_locked(session);
}

void Store::expire_session(SessionId session) { close_session(session); }

bool Store::session_alive(SessionId session) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(session);
  return it != sessions_.end() && Clock::now() - it->second.last_heartbeat <= it->second.ttl;
}

std::size_t Store::expire_due_sessions() {
  std::unique_lock lock(mu_);
  auto now = Clock::now();
  std::vector<SessionId> due;
  for (const auto& [id, s] : sessions_) {
    if (now - s.last_heartbeat > s.ttl) due.push_back(id);
  }
  for (SessionId id : due) drop_session_locked(id);
  return due.size();
}

void Store::drop_session_locked(SessionId id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return;
  std::set<std::string> owned = std::move(it->second.owned);
  sessions_.erase(it);
  if (owned.empty()) return;
  // One batch: every owned node disappears under a single zxid, and each
  // affected parent gets exactly one coalesced CHILDREN_CHANGED.
  const std::uint64_t zxid = ++zxid_;
  std::set<std::string> parents;
  for (const auto& path : owned) {
    if (!nodes_.count(path)) continue;
    parents.insert(parent_path(path));
    remove_node_locked(path, zxid, /*fire_parent_children_event=*/false);
  }
  for (const auto& p : parents) {
    auto pit = nodes_.find(p);
    if (pit != nodes_.end()) {
      fire_locked(p, EventKind::kChildrenChanged, pit->second.cversion, zxid);
    }
  }
}

void Store::fire_locked(const std::string& path, EventKind kind, std::int64_t version,
                        std::uint64_t zxid) {
  auto [b, e] = watchers_.equal_range(path);
  for (auto it = b; it != e;) {
    auto q = it->second.queue.lock();
    if (!q || q->closed()) {
      it = watchers_.erase(it);
      continue;
    }
    if (it->second.kinds & static_cast<unsigned>(kind)) {
      q->push(WatchEvent{path, kind, version, zxid});
    }
    ++it;
  }
}

void Store::remove_node_locked(const std::string& path, std::uint64_t zxid,
                               bool fire_parent_children_event) {
  auto it = nodes_.find(path);
  const std::int64_t version = it->second.version;
  if (it->second.mode == NodeMode::kEphemeral) {
    auto sit = sessions_.find(it->second.owner);
    if (sit != sessions_.end()) sit->second.owned.erase(path);
  }
  nodes_.erase(it);
  auto& parent = nodes_.at(parent_path(path));
  parent.children.erase(basename(path));
  ++parent.cversion;
  fire_locked(path, EventKind::kDeleted, version, zxid);
  if (fire_parent_children_event) {
    fire_locked(parent_path(path), EventKind::kChildrenChanged, parent.cversion, zxid);
  }
}

std::int64_t Store::create(const std::string& path, std::span<const std::uint8_t> data,
                           NodeMode mode, SessionId session) {
  check_path(path);
  if (path == "/") throw Error(Errc::kAlreadyExists, "/");
  std::unique_lock lock(mu_);
  const std::string parent = parent_path(path);
  auto pit = nodes_.find(parent);
  if (pit == nodes_.end()) throw Error(Errc::kParentMissing, parent);
  if (pit->second.mode == NodeMode::kEphemeral) {
    throw Error(Errc::kEphemeralParent, parent);
  }
  if (nodes_.count(path)) throw Error(Errc::kAlreadyExists, path);
  if (mode == NodeMode::kEphemeral) {
    auto sit = sessions_.find(session);
    if (sit == sessions_.end()) {
      throw Error(Errc::kSessionExpired, "session " + std::to_string(session));
    }
    if (Clock::now() - sit->second.last_heartbeat > sit->second.ttl) {
      drop_session_locked(session);
      throw Error(Errc::kSessionExpired, "session " + std::to_string(session));
    }
    sit->second.owned.insert(path);
  }
  Node node;
  node.data.assign(data.begin(), data.end());
  node.mode = mode;
  node.owner = mode == NodeMode::kEphemeral ? session : kNoSession;
  nodes_.emplace(path, std::move(node));
  pit->second.children.insert(basename(path));
  ++pit->second.cversion;
  const std::uint64_t zxid = ++zxid_;
  fire_locked(path, EventKind::kCreated, 0, zxid);
  fire_locked(parent, EventKind::kChildrenChanged, pit->second.cversion, zxid);
  return 0;
}

bool Store::ensure_path(const std::string& path) {
  check_path(path);
  if (path == "/") return false;
  std::vector<std::string> chain;
  for (std::string p = path; p != "/"; p = parent_path(p)) chain.push_back(p);
  bool created = false;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    try {
      create(*it, std::string_view{});
      created = (*it == path);
    } catch (const Error& e) {
      if (e.code() != Errc::kAlreadyExists) throw;
    }
  }
  return created;
}

std::pair<Bytes, std::int64_t> Store::read(const std::string& path) const {
  auto r = try_read(path);
  if (!r) throw Error(Errc::kNotFound, path);
  return std::move(*r);
}

std::optional<std::pair<Bytes, std::int64_t>> Store::try_read(const std::string& path) const {
  check_path(path);
  std::shared_lock lock(mu_);
  auto it = nodes_.find(path);
  if (it == nodes_.end()) return std::nullopt;
  return std::make_pair(it->second.data, it->second.version);
}

bool Store::exists(const std::string& path) const {
  check_path(path);
  std::shared_lock lock(mu_);
  return nodes_.count(path) > 0;
}

std::optional<NodeStat> Store::stat(const std::string& path) const {
  check_path(path);
  std::shared_lock lock(mu_);
  auto it = nodes_.find(path);
  if (it == nodes_.end()) return std::nullopt;
  return NodeStat{it->second.version, it->second.mode, it->second.owner};
}

std::vector<std::string> Store::list_children(const std::string& path) const {
  check_path(path);
  std::shared_lock lock(mu_);
  auto it = nodes_.find(path);
  if (it == nodes_.end()) throw Error(Errc::kNotFound, path);
  return {it->second.children.begin(), it->second.children.end()};
}

std::int64_t Store::write_cas(const std::string& path, std::span<const std::uint8_t> data,
                              std::int64_t expected_version) {
  check_path(path);
  std::unique_lock lock(mu_);
  auto it = nodes_.find(path);
  if (it == nodes_.end()) throw Error(Errc::kNotFound, path);
  if (expected_version != kAnyVersion && expected_version != it->second.version) {
    throw Error(Errc::kVersionConflict,
                path + " expected " + std::to_string(expected_version) + " have " +
                    std::to_string(it->second.version));
  }
  it->second.data.assign(data.begin(), data.end());
  const std::int64_t v = ++it->second.version;
  fire_locked(path, EventKind::kDataChanged, v, ++zxid_);
  return v;
}

std::pair<std::int64_t, std::int64_t> Store::atomic_increment(const std::string& path,
                                                              std::int64_t delta) {
  check_path(path);
  std::unique_lock lock(mu_);
  auto it = nodes_.find(path);
  if (it == nodes_.end()) throw Error(Errc::kNotFound, path);
  std::int64_t pre = 0;
  const std::string text = dlaas::to_string(it->second.data);
  if (!parse_int64(text, pre) || pre < 0) {
    throw Error(Errc::kMalformedCounter, path + " holds '" + text + "'");
  }
  const std::int64_t post = pre + delta;
  it->second.data = to_bytes(std::to_string(post));
  const std::int64_t v = ++it->second.version;
  fire_locked(path, EventKind::kDataChanged, v, ++zxid_);
  return {pre, post};
}

void Store::remove(const std::string& path, std::int64_t expected_version) {
  check_path(path);
  if (path == "/") throw Error(Errc::kInvalidArgument, "cannot delete root");
  std::unique_lock lock(mu_);
  auto it = nodes_.find(path);
  if (it == nodes_.end()) throw Error(Errc::kNotFound, path);
  if (expected_version != kAnyVersion && expected_version != it->second.version) {
    throw Error(Errc::kVersionConflict, path);
  }
  if (!it->second.children.empty()) throw Error(Errc::kHasChildren, path);
  remove_node_locked(path, ++zxid_, /*fire_parent_children_event=*/true);
}

void Store::remove_recursive(const std::string& path) {
  check_path(path);
  std::unique_lock lock(mu_);
  if (!nodes_.count(path) || path == "/") return;
  // Post-order over the subtree: deepest paths sort after their ancestors.
  std::vector<std::string> subtree{path};
  const std::string prefix = path + "/";
  for (auto it = nodes_.lower_bound(prefix); it != nodes_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    subtree.push_back(it->first);
  }
  std::sort(subtree.begin(), subtree.end(), [](const auto& a, const auto& b) {
    return std::count(a.begin(), a.end(), '/') > std::count(b.begin(), b.end(), '/');
  });
  const std::uint64_t zxid = ++zxid_;
  for (const auto& p : subtree) remove_node_locked(p, zxid, true);
}

std::shared_ptr<WatchQueue> Store::watch(const std::string& path, unsigned kinds) {
  auto q = std::make_shared<WatchQueue>();
  watch(path, kinds, q);
  return q;
}

void Store::watch(const std::string& path, unsigned kinds,
                  const std::shared_ptr<WatchQueue>& queue) {
  check_path(path);
  std::unique_lock lock(mu_);
  if (path != "/" && !nodes_.count(path) && !nodes_.count(parent_path(path))) {
    throw Error(Errc::kParentMissing, parent_path(path));
  }
  watchers_.emplace(path, Watcher{queue, kinds});
}

Bytes Store::snapshot() const {
  std::shared_lock lock(mu_);
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [path, node] : nodes_) {
    if (path == "/" || node.mode == NodeMode::kEphemeral) continue;
    nodes.push_back({{"path", path},
                     {"data", base64_encode(node.data)},
                     {"version", node.version}});
  }
  nlohmann::json doc = {{"format", "dlaas-coord-snapshot/1"},
                        {"zxid", zxid_.load()},
                        {"nodes", nodes}};
  return to_bytes(doc.dump());
}

void Store::restore(std::span<const std::uint8_t> snapshot) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(snapshot.begin(), snapshot.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("bad snapshot: ") + e.what());
  }
  std::unique_lock lock(mu_);
  nodes_.clear();
  sessions_.clear();
  nodes_.emplace("/", Node{});
  // Snapshot nodes are sorted by path, so parents precede children.
  for (const auto& n : doc.at("nodes")) {
    const std::string path = n.at("path");
    Node node;
    node.data = base64_decode(n.at("data").get<std::string>());
    node.version = n.at("version");
    auto pit = nodes_.find(parent_path(path));
    if (pit == nodes_.end()) continue;
    pit->second.children.insert(basename(path));
    nodes_.emplace(path, std::move(node));
  }
  zxid_ = doc.value("zxid", std::uint64_t{0});
}

std::size_t Store::node_count() const {
  std::shared_lock lock(mu_);
  return nodes_.size();
}

}  // namespace dlaas::coord
