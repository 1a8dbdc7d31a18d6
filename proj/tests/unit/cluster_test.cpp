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

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "dlaas/cluster/cluster.hpp"
#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

using namespace dlaas;
using namespace dlaas::cluster;

namespace {

template <typename F>
Errc code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::kInternal;
}

// Bodies park until stopped; "exit" in the config makes them return at once.
ExitStatus parked(TaskContext& ctx) {
  if (ctx.spec().kind == TaskKind::kPsShard) ctx.publish_endpoint({"127.0.0.1", 9000});
  if (ctx.spec().config_blob == "exit") return ExitStatus::kOk;
  if (ctx.spec().config_blob == "fail") return ExitStatus::kCrashed;
  if (ctx.spec().config_blob == "throw") throw std::runtime_error("boom");
  while (!ctx.stopped()) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  return ExitStatus::kOk;
}

TaskSpec spec(const std::string& id, Resources d, std::string cfg = {}) {
  TaskSpec s;
  s.task_id = id;
  s.job_id = "job";
  s.demand = d;
  s.config_blob = std::move(cfg);
  return s;
}

template <typename P>
bool eventually(P pred, std::chrono::milliseconds limit = std::chrono::milliseconds(2000)) {
  const auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return pred();
}

std::vector<TaskState> drain_states(TaskEvents& q, std::size_t n) {
  std::vector<TaskState> out;
  while (out.size() < n) {
    auto e = q.pop(std::chrono::milliseconds(2000));
    if (!e) break;
    out.push_back(e->state);
  }
  return out;
}

}  // namespace

TEST(Cluster, PlacesAndReservesResources) {
  Cluster c({{"n0", {4, 2, 8000}, true}}, parked);
  auto h = c.launch(spec("t1", {1, 1, 1000}));
  EXPECT_EQ(h.node_id, "n0");
  EXPECT_EQ(h.state, TaskState::kRunning);
  EXPECT_EQ(c.free_resources("n0"), (Resources{3, 1, 7000}));
  c.kill("t1");
  EXPECT_EQ(c.task("t1")->state, TaskState::kKilled);
  EXPECT_EQ(c.free_resources("n0"), (Resources{4, 2, 8000}));
  c.check_invariants();
}

TEST(Cluster, UnhealthyGpuNodeGetsNoGpuTasks) {
  Cluster c({{"gpu", {4, 2, 8000}, true}}, parked);
  c.mark_gpu_unhealthy("gpu");
  EXPECT_EQ(code_of([&] { c.launch(spec("g", {1, 1, 100})); }), Errc::kInsufficientResources);
  EXPECT_FALSE(c.can_place_all({{1, 1, 100}}));
  // CPU-only work still lands there.
  EXPECT_EQ(c.launch(spec("cpu", {1, 0, 100})).node_id, "gpu");
  c.mark_gpu_healthy("gpu");
  EXPECT_EQ(c.launch(spec("g", {1, 1, 100})).node_id, "gpu");
  EXPECT_EQ(c.violations(), 0u);
}

TEST(Cluster, ThirdGpuTaskWaitsForAnExit) {
  Cluster c({{"n0", {8, 2, 8000}, true}}, parked);
  c.launch(spec("a", {1, 1, 100}));
  c.launch(spec("b", {1, 1, 100}));
  EXPECT_EQ(code_of([&] { c.launch(spec("c", {1, 1, 100})); }), Errc::kInsufficientResources);
  c.kill("a");
  EXPECT_EQ(c.launch(spec("c", {1, 1, 100})).state, TaskState::kRunning);
}

TEST(Cluster, FirstFitBySortedNodeId) {
  Cluster c({{"b", {4, 0, 1000}, true}, {"a", {1, 0, 1000}, true}}, parked);
  EXPECT_EQ(c.launch(spec("x", {1, 0, 10})).node_id, "a");
  EXPECT_EQ(c.launch(spec("y", {1, 0, 10})).node_id, "b");
  EXPECT_TRUE(c.can_place_all({{2, 0, 10}, {1, 0, 10}}));
  EXPECT_FALSE(c.can_place_all({{2, 0, 10}, {2, 0, 10}}));
}

TEST(Cluster, CrashRestartsOnAnotherNodeUpToPolicy) {
  Cluster c({{"n0", {1, 0, 100}, true}, {"n1", {1, 0, 100}, true}}, parked);
  auto h = c.launch(spec("t", {1, 0, 100}));
  EXPECT_EQ(h.node_id, "n0");
  c.crash("t");
  auto t = *c.task("t");
  EXPECT_EQ(t.restarts, 1u);
  EXPECT_EQ(t.node_id, "n1");
  EXPECT_EQ(t.state, TaskState::kRunning);
  c.crash("t");
  c.crash("t");
  EXPECT_EQ(c.task("t")->restarts, 3u);
  c.crash("t");
  t = *c.task("t");
  EXPECT_EQ(t.state, TaskState::kCrashed);
  EXPECT_TRUE(t.restarts_exhausted);
  EXPECT_EQ(t.restarts, 3u);
  EXPECT_EQ(c.free_resources("n0"), (Resources{1, 0, 100}));
  EXPECT_EQ(c.free_resources("n1"), (Resources{1, 0, 100}));
  c.check_invariants();
}

TEST(Cluster, RestartKeepsTheSameNodeWhenNothingElseFits) {
  Cluster c({{"n0", {1, 0, 100}, true}}, parked);
  c.launch(spec("t", {1, 0, 100}));
  c.crash("t");
  EXPECT_EQ(c.task("t")->node_id, "n0");
  EXPECT_EQ(c.task("t")->state, TaskState::kRunning);
}

TEST(Cluster, BodyOutcomesMapToStates) {
  Cluster c({{"n0", {8, 0, 1000}, true}}, parked);
  TaskSpec ok = spec("ok", {1, 0, 10}, "exit");
  c.launch(ok);
  EXPECT_TRUE(eventually([&] { return c.task("ok")->state == TaskState::kExitedOk; }));
  TaskSpec bad = spec("bad", {1, 0, 10}, "throw");
  bad.restart_policy.max_restarts = 2;
  c.launch(bad);
  EXPECT_TRUE(eventually([&] { return c.task("bad")->restarts_exhausted; }));
  EXPECT_EQ(c.task("bad")->restarts, 2u);
  EXPECT_EQ(c.free_resources("n0"), (Resources{8, 0, 1000}));
}

TEST(Cluster, EventsAreOrderedAndBroadcast) {
  Cluster c({{"n0", {2, 0, 100}, true}, {"n1", {2, 0, 100}, true}}, parked);
  auto s1 = c.subscribe("job");
  auto s2 = c.subscribe("job");
  auto other = c.subscribe("other");
  c.launch(spec("t", {1, 0, 10}));
  c.crash("t");
  c.kill("t");
  const std::vector<TaskState> want = {TaskState::kStaging, TaskState::kRunning,
                                       TaskState::kCrashed, TaskState::kStaging,
                                       TaskState::kRunning, TaskState::kKilled};
  EXPECT_EQ(drain_states(*s1, want.size()), want);
  EXPECT_EQ(drain_states(*s2, want.size()), want);
  EXPECT_EQ(other->size(), 0u);
}

TEST(Cluster, PsShardRunsOnceItPublishes) {
  Cluster c({{"n0", {2, 0, 100}, true}}, parked);
  TaskSpec s = spec("ps", {1, 0, 10});
  s.kind = TaskKind::kPsShard;
  auto q = c.subscribe();
  c.launch(s);
  auto e1 = q->pop(std::chrono::milliseconds(1000));
  auto e2 = q->pop(std::chrono::milliseconds(1000));
  ASSERT_TRUE(e1 && e2);
  EXPECT_EQ(e1->state, TaskState::kStaging);
  EXPECT_TRUE(e1->endpoint.empty());
  EXPECT_EQ(e2->state, TaskState::kRunning);
  EXPECT_EQ(e2->endpoint, "127.0.0.1:9000");
}

TEST(Cluster, CrashNodeTakesItsTasks) {
  Cluster c({{"n0", {2, 0, 100}, true}, {"n1", {2, 0, 100}, true}}, parked);
  c.launch(spec("a", {1, 0, 10}));
  c.launch(spec("b", {1, 0, 10}));
  c.crash_node("n0");
  EXPECT_EQ(c.task("a")->node_id, "n1");
  EXPECT_EQ(c.task("b")->node_id, "n1");
  EXPECT_EQ(c.task("a")->restarts, 1u);
  EXPECT_EQ(code_of([&] { c.crash_node("zz"); }), Errc::kNotFound);
}

TEST(Cluster, Errors) {
  Cluster c({{"n0", {2, 0, 100}, true}}, parked);
  c.launch(spec("a", {1, 0, 10}));
  EXPECT_EQ(code_of([&] { c.launch(spec("a", {1, 0, 10})); }), Errc::kAlreadyExists);
  EXPECT_EQ(code_of([&] { c.launch(spec("n", {-1, 0, 10})); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([&] { c.kill("nope"); }), Errc::kNotFound);
  EXPECT_EQ(code_of([&] { c.crash("nope"); }), Errc::kNotFound);
  EXPECT_EQ(code_of([&] { c.mark_gpu_unhealthy("nope"); }), Errc::kNotFound);
}

TEST(Cluster, RandomChurnKeepsAccountingExact) {
  Cluster c({{"n0", {4, 2, 4000}, true}, {"n1", {4, 1, 4000}, true}, {"n2", {2, 0, 2000}, true}},
            parked);
  Rng rng(42);
  std::vector<std::string> ids;
  for (int i = 0; i < 400; ++i) {
    const auto op = rng.below(5);
    if (op <= 1 || ids.empty()) {
      auto id = "t" + std::to_string(i);
      try {
        c.launch(spec(id, {static_cast<std::int64_t>(rng.below(3)),
                           static_cast<std::int64_t>(rng.below(2)),
                           static_cast<std::int64_t>(rng.below(2000))}));
        ids.push_back(id);
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), Errc::kInsufficientResources);
      }
    } else if (op == 2) {
      c.kill(ids[rng.below(ids.size())]);
    } else if (op == 3) {
      c.crash(ids[rng.below(ids.size())]);
    } else {
      c.mark_gpu_unhealthy(rng.below(2) ? "n0" : "n1");
      if (rng.below(2)) c.mark_gpu_healthy(rng.below(2) ? "n0" : "n1");
    }
    c.check_invariants();
  }
  EXPECT_EQ(c.violations(), 0u);
}

TEST(Topology, ParsesDefaultsAndNamedNodes) {
  auto nodes = parse_topology(
      "# desk cluster\ncontainer-count = 2\ncpus = 4\nmemory-mib = 8000\n"
      "node gpu-0 gpus=2 cpus=8 gpu-healthy=false  # flaky\n");
  ASSERT_EQ(nodes.size(), 3u);
  EXPECT_EQ(nodes[0], (NodeSpec{"node-0", {4, 0, 8000}, true}));
  EXPECT_EQ(nodes[1].node_id, "node-1");
  EXPECT_EQ(nodes[2], (NodeSpec{"gpu-0", {8, 2, 8000}, false}));
}

TEST(Topology, RejectsBadInput) {
  EXPECT_EQ(code_of([] { parse_topology(""); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_topology("container-count = x"); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_topology("container-count = 1\nfoo = 2"); }),
            Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_topology("node a gpus"); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_topology("node a gpu-healthy=maybe"); }), Errc::kInvalidArgument);
}
