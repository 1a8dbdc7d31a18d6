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

#include <algorithm>
#include <atomic>
#include <barrier>
#include <map>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_set>

#include <gtest/gtest.h>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"
#include "dlaas/coord/client.hpp"
#include "dlaas/coord/server.hpp"
#include "dlaas/coord/store.hpp"

using namespace dlaas;
using namespace dlaas::coord;
using namespace std::chrono_literals;

namespace {

StoreOptions manual() {
  StoreOptions o;
  o.run_reaper = false;
  return o;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::kInternal;
}

std::vector<WatchEvent> drain(WatchQueue& q) {
  std::vector<WatchEvent> out;
  while (auto e = q.try_pop()) out.push_back(*e);
  return out;
}

}  // namespace

TEST(CoordStore, CreateStartsAtVersionZero) {
  Store s(manual());
  auto sid = s.open_session();
  s.ensure_path("/jobs/t1/live");
  EXPECT_EQ(s.create("/jobs/t1/live/learner-0", "", NodeMode::kEphemeral, sid), 0);
  EXPECT_EQ(s.read("/jobs/t1/live/learner-0").second, 0);
}

TEST(CoordStore, CreateErrors) {
  Store s(manual());
  s.ensure_path("/jobs/t1/live");
  auto sid = s.open_session();
  s.expire_session(sid);
  EXPECT_EQ(code_of([&] { s.create("/jobs/t1/live/x", "", NodeMode::kEphemeral, sid); }),
            Errc::kSessionExpired);
  EXPECT_EQ(code_of([&] { s.create("/nope/x", "a"); }), Errc::kParentMissing);
  s.create("/a", "1");
  EXPECT_EQ(code_of([&] { s.create("/a", "2"); }), Errc::kAlreadyExists);
  auto live = s.open_session();
  s.create("/e", "", NodeMode::kEphemeral, live);
  EXPECT_EQ(code_of([&] { s.create("/e/child", ""); }), Errc::kEphemeralParent);
}

TEST(CoordStore, SessionTtlExpiry) {
  Store s(manual());
  s.ensure_path("/live");
  auto sid = s.open_session(20ms);
  s.create("/live/a", "", NodeMode::kEphemeral, sid);
  std::this_thread::sleep_for(40ms);
  EXPECT_EQ(s.expire_due_sessions(), 1u);
  EXPECT_FALSE(s.exists("/live/a"));
  EXPECT_EQ(code_of([&] { s.heartbeat(sid); }), Errc::kSessionExpired);
}

TEST(CoordStore, EphemeralCleanupMatchesReferenceMap) {
  Store s(manual());
  s.ensure_path("/jobs/t1/live");
  Rng rng(7);
  std::vector<SessionId> sessions;
  for (int i = 0; i < 4; ++i) sessions.push_back(s.open_session());
  // Reference: child name -> owning session (0 = persistent).
  std::map<std::string, SessionId> ref;
  for (int i = 0; i < 40; ++i) {
    std::string name = "n" + std::to_string(i);
    SessionId owner = rng.below(5) == 0 ? kNoSession : sessions[rng.below(4)];
    s.create("/jobs/t1/live/" + name, "", owner ? NodeMode::kEphemeral : NodeMode::kPersistent,
             owner);
    ref[name] = owner;
  }
  for (int k : {2, 0}) {
    s.expire_session(sessions[k]);
    std::erase_if(ref, [&](const auto& kv) { return kv.second == sessions[k]; });
    std::vector<std::string> expect;
    for (auto& [n, _] : ref) expect.push_back(n);
    EXPECT_EQ(s.list_children("/jobs/t1/live"), expect);
  }
}

TEST(CoordStore, FiveChildrenGoneAfterExpiry) {
  Store s(manual());
  s.ensure_path("/jobs/t1/live");
  auto sid = s.open_session();
  for (int i = 0; i < 5; ++i) {
    s.create("/jobs/t1/live/c" + std::to_string(i), "", NodeMode::kEphemeral, sid);
  }
  s.expire_session(sid);
  EXPECT_TRUE(s.list_children("/jobs/t1/live").empty());
}

TEST(CoordStore, WriteCas) {
  Store s(manual());
  s.create("/p", "x");
  EXPECT_EQ(s.write_cas("/p", "RUNNING", 0), 1);
  s.write_cas("/p", "a", 1);
  s.write_cas("/p", "b", 2);
  EXPECT_EQ(code_of([&] { s.write_cas("/p", "x", 7); }), Errc::kVersionConflict);
  EXPECT_EQ(code_of([&] { s.write_cas("/q", "x", 0); }), Errc::kNotFound);
}

TEST(CoordStore, RacingCasPairsExactlyOneWins) {
  Store s(manual());
  s.create("/p", "0");
  int successes = 0;
  for (int round = 0; round < 1000; ++round) {
    const std::int64_t ver = s.read("/p").second;
    std::atomic<int> wins{0};
    std::barrier sync(2);
    auto racer = [&](const char* tag) {
      sync.arrive_and_wait();
      try {
        s.write_cas("/p", tag, ver);
        ++wins;
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::kVersionConflict);
      }
    };
    std::thread a(racer, "a"), b(racer, "b");
    a.join();
    b.join();
    EXPECT_EQ(wins.load(), 1);
    successes += wins.load() == 1;
  }
  EXPECT_EQ(successes, 1000);
}

TEST(CoordStore, AtomicIncrement) {
  Store s(manual());
  s.create("/c", "0");
  auto [pre, post] = s.atomic_increment("/c", 128);
  EXPECT_EQ(pre, 0);
  EXPECT_EQ(post, 128);
  s.create("/bad", "abc");
  EXPECT_EQ(code_of([&] { s.atomic_increment("/bad", 1); }), Errc::kMalformedCounter);
  EXPECT_EQ(code_of([&] { s.atomic_increment("/none", 1); }), Errc::kNotFound);
}

TEST(CoordStore, ConcurrentIncrementsArePermutation) {
  Store s(manual());
  s.create("/c", "0");
  std::vector<std::int64_t> pre(8), post(8);
  std::vector<std::thread> ts;
  std::barrier sync(8);
  for (int i = 0; i < 8; ++i) {
    ts.emplace_back([&, i] {
      sync.arrive_and_wait();
      std::tie(pre[i], post[i]) = s.atomic_increment("/c", 100);
    });
  }
  for (auto& t : ts) t.join();
  std::sort(pre.begin(), pre.end());
  std::sort(post.begin(), post.end());
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(pre[i], 100 * i);
    EXPECT_EQ(post[i], 100 * (i + 1));
  }
  EXPECT_EQ(to_string(s.read("/c").first), "800");
}

TEST(CoordStore, ReadListDelete) {
  Store s(manual());
  s.create("/p", "A");
  EXPECT_EQ(s.read("/p"), std::make_pair(to_bytes("A"), std::int64_t{0}));
  s.create("/jobs", "");
  s.create("/jobs/t2", "");
  s.create("/jobs/t1", "");
  EXPECT_EQ(s.list_children("/jobs"), (std::vector<std::string>{"t1", "t2"}));
  EXPECT_EQ(code_of([&] { s.remove("/p", 3); }), Errc::kVersionConflict);
  EXPECT_EQ(code_of([&] { s.remove("/jobs"); }), Errc::kHasChildren);
  s.remove("/p", 0);
  EXPECT_FALSE(s.exists("/p"));
}

TEST(CoordStore, RemoveRecursiveKeepsSiblingPrefixes) {
  Store s(manual());
  s.ensure_path("/a/b/c");
  s.ensure_path("/a-x/y");
  s.remove_recursive("/a");
  EXPECT_FALSE(s.exists("/a"));
  EXPECT_TRUE(s.exists("/a-x/y"));
}

TEST(CoordWatch, DeleteFiresOnce) {
  Store s(manual());
  s.create("/p", "x");
  auto q = s.watch("/p");
  s.remove("/p");
  auto ev = drain(*q);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::kDeleted);
}

TEST(CoordWatch, CreatedOnAbsentPathNeedsParent) {
  Store s(manual());
  EXPECT_EQ(code_of([&] { s.watch("/a/b"); }), Errc::kParentMissing);
  s.create("/a", "");
  auto q = s.watch("/a/b", static_cast<unsigned>(EventKind::kCreated));
  s.create("/a/b", "");
  auto ev = drain(*q);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::kCreated);
}

TEST(CoordWatch, TwoWatchersBothSeeDataChanged) {
  Store s(manual());
  s.create("/p", "x");
  auto a = s.watch("/p"), b = s.watch("/p");
  s.write_cas("/p", "y", 0);
  for (auto* q : {a.get(), b.get()}) {
    auto ev = drain(*q);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, EventKind::kDataChanged);
    EXPECT_EQ(ev[0].version, 1);
  }
}

TEST(CoordWatch, SessionExpiryCoalescedChildrenEvent) {
  Store s(manual());
  s.ensure_path("/jobs/t1/live");
  s.create("/jobs/t1/live/keep", "");
  auto sid = s.open_session();
  for (int i = 0; i < 3; ++i) {
    s.create("/jobs/t1/live/e" + std::to_string(i), "", NodeMode::kEphemeral, sid);
  }
  auto q = s.watch("/jobs/t1/live", static_cast<unsigned>(EventKind::kChildrenChanged));
  s.expire_session(sid);
  auto ev = drain(*q);
  ASSERT_GE(ev.size(), 1u);
  ASSERT_LE(ev.size(), 3u);
  // Reconcile by re-listing, as consumers must.
  EXPECT_EQ(s.list_children("/jobs/t1/live"), std::vector<std::string>{"keep"});
}

TEST(CoordWatch, ExpiryFiresDeletedForEveryOwnedNode) {
  Store s(manual());
  s.ensure_path("/live");
  auto sid = s.open_session();
  std::vector<std::shared_ptr<WatchQueue>> qs;
  for (int i = 0; i < 4; ++i) {
    std::string p = "/live/n" + std::to_string(i);
    s.create(p, "", NodeMode::kEphemeral, sid);
    qs.push_back(s.watch(p, static_cast<unsigned>(EventKind::kDeleted)));
  }
  s.expire_session(sid);
  for (auto& q : qs) EXPECT_EQ(drain(*q).size(), 1u);
}

TEST(CoordWatch, VersionsStrictlyIncreasePerWatcher) {
  Store s(manual());
  s.create("/p", "0");
  auto q = s.watch("/p", static_cast<unsigned>(EventKind::kDataChanged));
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) {
    ts.emplace_back([&] {
      for (int i = 0; i < 200; ++i) s.atomic_increment("/p", 1);
    });
  }
  for (auto& t : ts) t.join();
  auto ev = drain(*q);
  ASSERT_EQ(ev.size(), 800u);
  for (std::size_t i = 1; i < ev.size(); ++i) {
    EXPECT_GT(ev[i].version, ev[i - 1].version);
    EXPECT_GT(ev[i].zxid, ev[i - 1].zxid);
  }
}

TEST(CoordStore, SnapshotRestoreKeepsPersistentOnly) {
  Store s(manual());
  s.ensure_path("/jobs/t1");
  s.write_cas("/jobs/t1", "state", kAnyVersion);
  auto sid = s.open_session();
  s.create("/jobs/t1/live", "", NodeMode::kEphemeral, sid);
  auto snap = s.snapshot();
  Store r(manual());
  r.restore(snap);
  EXPECT_EQ(to_string(r.read("/jobs/t1").first), "state");
  EXPECT_EQ(r.read("/jobs/t1").second, 1);
  EXPECT_FALSE(r.exists("/jobs/t1/live"));
}

// ---------------------------------------------------------------------------
// Linearizability check over small concurrent histories on one node.

namespace {

enum class OpKind { kCreate, kCas, kIncr, kDelete };

struct Op {
  OpKind kind;
  std::int64_t arg = 0;   // CAS expected version / INCR delta
  std::int64_t value = 0; // CAS / CREATE payload (decimal)
  // Observed outcome.
  bool ok = false;
  Errc err = Errc::kInternal;
  std::int64_t r1 = 0, r2 = 0;
  std::uint64_t invoke = 0, respond = 0;
};

struct Model {
  bool present = false;
  std::int64_t value = 0;
  std::int64_t version = 0;
  bool operator==(const Model&) const = default;
};

// Applies op to the model; returns false if the observed outcome is not what
// a sequential store in state `m` would have produced.
bool step(Model& m, const Op& op) {
  switch (op.kind) {
    case OpKind::kCreate:
      if (m.present) return !op.ok && op.err == Errc::kAlreadyExists;
      if (!op.ok || op.r1 != 0) return false;
      m = {true, op.value, 0};
      return true;
    case OpKind::kCas:
      if (!m.present) return !op.ok && op.err == Errc::kNotFound;
      if (m.version != op.arg) return !op.ok && op.err == Errc::kVersionConflict;
      if (!op.ok || op.r1 != m.version + 1) return false;
      m.value = op.value;
      ++m.version;
      return true;
    case OpKind::kIncr:
      if (!m.present) return !op.ok && op.err == Errc::kNotFound;
      if (!op.ok || op.r1 != m.value || op.r2 != m.value + op.arg) return false;
      m.value += op.arg;
      ++m.version;
      return true;
    case OpKind::kDelete:
      if (!m.present) return !op.ok && op.err == Errc::kNotFound;
      if (!op.ok) return false;
      m = {};
      return true;
  }
  return false;
}

bool linearizable(const std::vector<Op>& ops) {
  const std::size_t n = ops.size();
  std::set<std::tuple<std::uint64_t, bool, std::int64_t, std::int64_t>> dead;
  std::function<bool(std::uint64_t, Model)> search = [&](std::uint64_t done, Model m) {
    if (done == (n == 64 ? ~0ull : (1ull << n) - 1)) return true;
    auto key = std::make_tuple(done, m.present, m.value, m.version);
    if (dead.count(key)) return false;
    // Any pending op invoked before the earliest pending response may go next.
    std::uint64_t min_resp = ~0ull;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(done >> i & 1)) min_resp = std::min(min_resp, ops[i].respond);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (done >> i & 1 || ops[i].invoke > min_resp) continue;
      Model next = m;
      if (step(next, ops[i]) && search(done | (1ull << i), next)) return true;
    }
    dead.insert(key);
    return false;
  };
  return search(0, Model{});
}

}  // namespace

TEST(CoordLinearizability, RandomHistoriesCheck) {
  for (int trial = 0; trial < 60; ++trial) {
    Store s(manual());
    std::atomic<std::uint64_t> tick{0};
    const int threads = 2 + trial % 3;  // 2..4
    const int per_thread = 8;
    std::vector<std::vector<Op>> logs(threads);
    std::barrier sync(threads);
    std::vector<std::thread> ts;
    for (int t = 0; t < threads; ++t) {
      ts.emplace_back([&, t] {
        Rng rng(1000 * trial + t);
        sync.arrive_and_wait();
        for (int i = 0; i < per_thread; ++i) {
          Op op;
          op.kind = static_cast<OpKind>(rng.below(4));
          op.arg = op.kind == OpKind::kIncr ? 1 + static_cast<std::int64_t>(rng.below(5))
                                            : static_cast<std::int64_t>(rng.below(4));
          op.value = static_cast<std::int64_t>(rng.below(100));
          op.invoke = tick.fetch_add(1);
          try {
            switch (op.kind) {
              case OpKind::kCreate:
                op.r1 = s.create("/k", std::to_string(op.value));
                break;
              case OpKind::kCas:
                op.r1 = s.write_cas("/k", std::to_string(op.value), op.arg);
                break;
              case OpKind::kIncr:
                std::tie(op.r1, op.r2) = s.atomic_increment("/k", op.arg);
                break;
              case OpKind::kDelete:
                s.remove("/k");
                break;
            }
            op.ok = true;
          } catch (const Error& e) {
            op.err = e.code();
          }
          op.respond = tick.fetch_add(1);
          logs[t].push_back(op);
        }
      });
    }
    for (auto& t : ts) t.join();
    std::vector<Op> all;
    for (auto& l : logs) all.insert(all.end(), l.begin(), l.end());
    ASSERT_TRUE(linearizable(all)) << "trial " << trial;
  }
}

TEST(CoordLinearizability, CheckerRejectsImpossibleHistory) {
  // Two sequential creates that both claim success cannot be linearized.
  std::vector<Op> h(2);
  h[0] = Op{OpKind::kCreate, 0, 1, true, Errc::kInternal, 0, 0, 0, 1};
  h[1] = Op{OpKind::kCreate, 0, 2, true, Errc::kInternal, 0, 0, 2, 3};
  EXPECT_FALSE(linearizable(h));
}

// ---------------------------------------------------------------------------

TEST(CoordClient, LocalClientHelpers) {
  Store s(manual());
  LocalClient c(s);
  c.ensure_path("/jobs/t1/learners/0");
  EXPECT_EQ(c.put("/jobs/t1/status", "A"), 0);
  EXPECT_EQ(c.put("/jobs/t1/status", "B"), 1);
  EXPECT_EQ(c.read("/jobs/t1/status").first, "B");
  c.create_if_absent("/jobs/t1/status", "C");
  EXPECT_EQ(c.read("/jobs/t1/status").first, "B");
}

TEST(CoordClient, LocalWaitExists) {
  Store s(manual());
  LocalClient c(s);
  s.create("/a", "");
  std::thread t([&] {
    std::this_thread::sleep_for(30ms);
    s.create("/a/b", "");
  });
  EXPECT_TRUE(c.wait_exists("/a/b", 2s, {}));
  t.join();
  EXPECT_FALSE(c.wait_exists("/a/zz", 20ms, {}));
}

TEST(CoordClient, AbandonLeavesEphemeralUntilTtl) {
  Store s(manual());
  s.create("/live", "");
  {
    LocalClient c(s, 20ms);
    c.create("/live/x", "", NodeMode::kEphemeral);
    c.abandon();
  }
  EXPECT_TRUE(s.exists("/live/x"));
  std::this_thread::sleep_for(40ms);
  s.expire_due_sessions();
  EXPECT_FALSE(s.exists("/live/x"));
}

TEST(CoordServer, ExecuteGrammar) {
  Store s(manual());
  SessionId sid = kNoSession;
  EXPECT_EQ(CoordServer::execute(s, "CREATE /a PERSISTENT QQ==", &sid), "OK 0");
  EXPECT_EQ(CoordServer::execute(s, "GET /a", &sid), "OK 0 QQ==");
  EXPECT_EQ(CoordServer::execute(s, "SET /a 0 -", &sid), "OK 1");
  EXPECT_EQ(CoordServer::execute(s, "GET /a", &sid), "OK 1 -");
  EXPECT_EQ(CoordServer::execute(s, "CREATE /a/e EPHEMERAL -", &sid).rfind("ERR SESSION_EXPIRED", 0),
            0u);
  EXPECT_EQ(CoordServer::execute(s, "SESSION 1000", &sid).rfind("OK ", 0), 0u);
  EXPECT_EQ(CoordServer::execute(s, "CREATE /a/e EPHEMERAL -", &sid), "OK 0");
  EXPECT_EQ(CoordServer::execute(s, "LS /a", &sid), "OK e");
  EXPECT_EQ(CoordServer::execute(s, "CREATE /c PERSISTENT MA==", &sid), "OK 0");
  EXPECT_EQ(CoordServer::execute(s, "INCR /c 5", &sid), "OK 0 5");
  EXPECT_EQ(CoordServer::execute(s, "EXISTS /c", &sid), "OK 1");
  EXPECT_EQ(CoordServer::execute(s, "DEL /c 9", &sid).rfind("ERR VERSION_CONFLICT", 0), 0u);
  EXPECT_EQ(CoordServer::execute(s, "DEL /c -1", &sid), "OK");
  EXPECT_EQ(CoordServer::execute(s, "FROB", &sid).rfind("ERR PROTOCOL_ERROR", 0), 0u);
  EXPECT_EQ(CoordServer::execute(s, "CLOSE", &sid), "OK");
  EXPECT_FALSE(s.exists("/a/e"));
}

TEST(CoordServer, TcpClientRoundTrip) {
  Store s;
  CoordServer server(s, "127.0.0.1", 0);
  {
    TcpClient c(server.endpoint(), 500ms);
    c.ensure_path("/jobs/t1/live");
    c.create("/jobs/t1/live/x", "payload", NodeMode::kEphemeral);
    EXPECT_EQ(c.read("/jobs/t1/live/x").first, "payload");
    c.create("/cnt", "0");
    EXPECT_EQ(c.atomic_increment("/cnt", 7).second, 7);
    EXPECT_EQ(c.list_children("/jobs/t1/live"), std::vector<std::string>{"x"});
    try {
      c.write_cas("/cnt", "1", 5);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kVersionConflict);
    }
  }
  // Clean close removed the ephemeral node.
  EXPECT_FALSE(s.exists("/jobs/t1/live/x"));
}

TEST(CoordServer, DroppedConnectionExpiresByTtl) {
  StoreOptions o;
  o.reap_interval = 10ms;
  Store s(o);
  CoordServer server(s, "127.0.0.1", 0);
  s.create("/live", "");
  {
    TcpClient c(server.endpoint(), 100ms);
    c.create("/live/x", "", NodeMode::kEphemeral);
    c.abandon();
  }
  EXPECT_TRUE(s.exists("/live/x"));
  auto deadline = std::chrono::steady_clock::now() + 2s;
  while (s.exists("/live/x") && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(10ms);
  }
  EXPECT_FALSE(s.exists("/live/x"));
}

TEST(CoordServer, UnreachableIsCoordUnavailable) {
  Store s(manual());
  net::Endpoint ep;
  {
    CoordServer server(s, "127.0.0.1", 0);
    ep = server.endpoint();
  }
  try {
    TcpClient c(ep, 100ms);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kCoordUnavailable);
  }
}
