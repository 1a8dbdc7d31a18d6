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
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dlaas/common/blocking_queue.hpp"
#include "dlaas/common/bytes.hpp"

namespace dlaas::coord {

enum class NodeMode { kPersistent, kEphemeral };

using SessionId = std::uint64_t;
inline constexpr SessionId kNoSession = 0;
// write_cas / delete with this expected version skip the version check.
inline constexpr std::int64_t kAnyVersion = -1;

enum class EventKind : unsigned {
  kCreated = 1u << 0,
  kDataChanged = 1u << 1,
  kDeleted = 1u << 2,
  kChildrenChanged = 1u << 3,
};
inline constexpr unsigned kAllEvents = 0xf;

std::string_view to_string(EventKind k);

struct WatchEvent {
  std::string path;
  EventKind kind;
  // Node data version (for CHILDREN_CHANGED: the parent's child version).
  std::int64_t version = 0;
  // Store-wide mutation sequence number; strictly increasing per watcher.
  std::uint64_t zxid = 0;
};

using WatchQueue = BlockingQueue<WatchEvent>;

struct NodeStat {
  std::int64_t version = 0;
  NodeMode mode = NodeMode::kPersistent;
  SessionId owner = kNoSession;
};

struct StoreOptions {
  std::chrono::milliseconds default_ttl{2000};
  // Background reaper that expires silent sessions; tests may disable it
  // and call expire_due_sessions() directly.
  bool run_reaper = true;
  std::chrono::milliseconds reap_interval{0};  // 0 = ttl / 4
};

// In-memory hierarchical coordination store: persistent and ephemeral nodes,
// versioned compare-and-set writes, atomic decimal counters, sessions with
// TTL-based expiry and persistent (multi-shot) watches.
//
// All mutations are serialized under one writer lock; reads take a shared
// lock. Watch events are appended to the subscriber's queue while the writer
// lock is held, so each watcher observes events in mutation order.
class Store {
 public:
  explicit Store(StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Sessions.
  SessionId open_session(std::optional<std::chrono::milliseconds> ttl = std::nullopt);
  void heartbeat(SessionId session);
  // Clean close: ephemeral nodes removed immediately.
  void close_session(SessionId session);
  // Fault injection: same effect as TTL expiry.
  void expire_session(SessionId session);
  bool session_alive(SessionId session) const;
  // Expires every session whose last heartbeat is older than its TTL.
  // Returns the number expired.
  std::size_t expire_due_sessions();

  std::int64_t create(const std::string& path, std::span<const std::uint8_t> data,
                      NodeMode mode = NodeMode::kPersistent,
                      SessionId session = kNoSession);
  std::int64_t create(const std::string& path, std::string_view data,
                      NodeMode mode = NodeMode::kPersistent,
                      SessionId session = kNoSession) {
    return create(path, std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()),
                  mode, session);
  }
  // Creates every missing ancestor (persistent, empty) and then the node if
  // absent. Returns false when the node already existed.
  bool ensure_path(const std::string& path);

  std::pair<Bytes, std::int64_t> read(const std::string& path) const;
  std::optional<std::pair<Bytes, std::int64_t>> try_read(const std::string& path) const;
  bool exists(const std::string& path) const;
  std::optional<NodeStat> stat(const std::string& path) const;
  std::vector<std::string> list_children(const std::string& path) const;

  std::int64_t write_cas(const std::string& path, std::span<const std::uint8_t> data,
                         std::int64_t expected_version);
  std::int64_t write_cas(const std::string& path, std::string_view data,
                         std::int64_t expected_version) {
    return write_cas(path,
                     std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()),
                     expected_version);
  }

  // Returns (pre-increment value, post-increment value).
  std::pair<std::int64_t, std::int64_t> atomic_increment(const std::string& path,
                                                         std::int64_t delta);

  void remove(const std::string& path, std::int64_t expected_version = kAnyVersion);
  // Deletes a subtree bottom-up; missing path is not an error.
  void remove_recursive(const std::string& path);

  // Persistent watch. CREATED watches may target an absent path whose parent
  // exists.
  std::shared_ptr<WatchQueue> watch(const std::string& path, unsigned kinds = kAllEvents);
  void watch(const std::string& path, unsigned kinds, const std::shared_ptr<WatchQueue>& queue);

  // Persistent nodes only, as a JSON document.
  Bytes snapshot() const;
  // Replaces the tree (sessions are not restored).
  void restore(std::span<const std::uint8_t> snapshot);

  std::uint64_t last_zxid() const { return zxid_.load(); }
  std::size_t node_count() const;

 private:
  struct Node {
    Bytes data;
    std::int64_t version = 0;
    std::int64_t cversion = 0;
    NodeMode mode = NodeMode::kPersistent;
    SessionId owner = kNoSession;
    std::set<std::string> children;
  };
  struct Session {
    std::chrono::milliseconds ttl;
    std::chrono::steady_clock::time_point last_heartbeat;
    std::set<std::string> owned;
  };
  struct Watcher {
    std::weak_ptr<WatchQueue> queue;
    unsigned kinds;
  };

  void check_path(const std::string& path) const;
  void fire_locked(const std::string& path, EventKind kind, std::int64_t version,
                   std::uint64_t zxid);
  void remove_node_locked(const std::string& path, std::uint64_t zxid,
                          bool fire_parent_children_event);
  void drop_session_locked(SessionId id);
  void reaper_loop();

  StoreOptions options_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Node> nodes_;
  std::map<SessionId, Session> sessions_;
  std::multimap<std::string, Watcher> watchers_;
  SessionId next_session_ = 1;
  std::atomic<std::uint64_t> zxid_{0};

  std::mutex reaper_mu_;
  std::condition_variable reaper_cv_;
  bool stopping_ = false;
  std::thread reaper_;
};

std::string parent_path(const std::string& path);
std::string join_path(const std::string& parent, const std::string& child);

}  // namespace dlaas::coord
