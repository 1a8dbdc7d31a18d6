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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dlaas/common/blocking_queue.hpp"
#include "dlaas/common/net.hpp"

namespace dlaas::cluster {

struct Resources {
  std::int64_t cpus = 0;
  std::int64_t gpus = 0;
  std::int64_t memory_mib = 0;

  bool fits_in(const Resources& free) const {
    return cpus <= free.cpus && gpus <= free.gpus && memory_mib <= free.memory_mib;
  }
  bool nonnegative() const { return cpus >= 0 && gpus >= 0 && memory_mib >= 0; }
  Resources& operator+=(const Resources& o);
  Resources& operator-=(const Resources& o);
  bool operator==(const Resources&) const = default;
};

struct NodeSpec {
  std::string node_id;
  Resources capacity;
  bool gpu_healthy = true;
  bool operator==(const NodeSpec&) const = default;
};

enum class TaskKind { kPsShard, kLearner };
enum class TaskState { kStaging, kRunning, kExitedOk, kCrashed, kKilled };

std::string_view to_string(TaskKind k);
std::string_view to_string(TaskState s);
// Staging and running tasks hold resources.
inline bool holds_resources(TaskState s) {
  return s == TaskState::kStaging || s == TaskState::kRunning;
}

struct RestartPolicy {
  std::uint32_t max_restarts = 3;
};

struct TaskSpec {
  std::string task_id;
  std::string job_id;
  TaskKind kind = TaskKind::kLearner;
  Resources demand;
  std::string config_blob;
  RestartPolicy restart_policy;
};

struct TaskHandle {
  std::string task_id;
  std::string job_id;
  TaskKind kind = TaskKind::kLearner;
  std::string node_id;
  std::string endpoint;  // host:port once a PS shard is listening
  TaskState state = TaskState::kStaging;
  std::uint32_t restarts = 0;
  std::int64_t state_since_ms = 0;
  // Set on the final CRASHED event, when no restart follows.
  bool restarts_exhausted = false;
};

enum class StopReason { kNone, kKill, kCrash };

// What a task body sees. One context per incarnation.
class TaskContext {
 public:
  const TaskSpec& spec() const { return spec_; }
  std::uint32_t incarnation() const { return incarnation_; }
  const std::string& node_id() const { return node_id_; }
  // Polled by the body; a crashed task should drop its sessions without
  // closing them, as a dead process would.
  StopReason stop_reason() const { return static_cast<StopReason>(stop_->load()); }
  bool stopped() const { return stop_reason() != StopReason::kNone; }
  net::CancelFn stop_fn() const {
    auto s = stop_;
    return [s] { return s->load() != 0; };
  }
  // PS shards call this once they listen; the task becomes RUNNING.
  void publish_endpoint(const net::Endpoint& ep);

 private:
  friend class Cluster;
  TaskContext(class Cluster& c, TaskSpec spec, std::uint32_t incarnation, std::string node,
              std::shared_ptr<std::atomic<int>> stop)
      : cluster_(c),
        spec_(std::move(spec)),
        incarnation_(incarnation),
        node_id_(std::move(node)),
        stop_(std::move(stop)) {}

  class Cluster& cluster_;
  TaskSpec spec_;
  std::uint32_t incarnation_;
  std::string node_id_;
  std::shared_ptr<std::atomic<int>> stop_;
};

enum class ExitStatus { kOk, kCrashed };
// Task body. Runs on its own thread; an exception counts as a crash.
using TaskRunner = std::function<ExitStatus(TaskContext&)>;

using TaskEvents = BlockingQueue<TaskHandle>;

// Simulated cluster manager. All scheduler state sits behind one mutex, so
// commands are serialized; task bodies run concurrently on their own
// threads. Placement is first-fit over nodes sorted by id; GPU tasks skip
// nodes whose GPUs are marked unhealthy.
class Cluster {
 public:
  Cluster(std::vector<NodeSpec> nodes, TaskRunner runner);
  ~Cluster();
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  // INSUFFICIENT_RESOURCES when no node fits, ALREADY_EXISTS for a live
  // task id, INVALID_ARGUMENT for a negative demand. Learners are RUNNING on
  // return; PS shards stay STAGING until they publish an endpoint.
  TaskHandle launch(const TaskSpec& spec);
  // True when every demand can be placed at once (first-fit, in order).
  bool can_place_all(const std::vector<Resources>& demands) const;

  // NOT_FOUND for unknown ids. Kill is final; crash restarts per policy,
  // preferring a different node.
  void kill(const std::string& task_id);
  void crash(const std::string& task_id);
  // Machine failure: crashes every task on the node.
  void crash_node(const std::string& node_id);
  void mark_gpu_unhealthy(const std::string& node_id);
  void mark_gpu_healthy(const std::string& node_id);

  std::optional<TaskHandle> task(const std::string& task_id) const;
  std::vector<TaskHandle> tasks(const std::string& job_id = {}) const;
  std::vector<NodeSpec> nodes() const;
  Resources free_resources(const std::string& node_id) const;
  // Task bodies of the job still executing, including killed or crashed
  // incarnations that have not returned yet.
  std::size_t running_bodies(const std::string& job_id) const;
  // Drops handles of finished tasks of a job.
  void forget_job(const std::string& job_id);

  // Ordered state changes of one job's tasks ("" = all jobs).
  std::shared_ptr<TaskEvents> subscribe(const std::string& job_id = {});
  void unsubscribe(const std::shared_ptr<TaskEvents>& q);

  // Throws INTERNAL naming the first violated invariant: per-node reserved
  // resources equal the sum of held demands and stay within capacity, no
  // GPU task sits on an unhealthy node placed after the mark, restarts stay
  // within policy.
  void check_invariants() const;
  // Number of invariant violations observed at any mutation so far.
  std::uint64_t violations() const { return violations_.load(); }

 private:
  friend class TaskContext;
  struct Node {
    NodeSpec spec;
    Resources used;
  };
  struct Task {
    TaskSpec spec;
    TaskHandle handle;
    std::shared_ptr<std::atomic<int>> stop;
    bool placed_while_unhealthy = false;
    std::size_t bodies = 0;
  };
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  std::optional<std::size_t> place_locked(const Resources& demand,
                                          const std::string& avoid) const;
  void start_locked(Task& t, std::size_t node);
  void release_locked(Task& t);
  void set_state_locked(Task& t, TaskState s);
  void crash_locked(Task& t);
  void on_exit(const std::string& task_id, std::uint32_t incarnation, ExitStatus st);
  void publish(const std::string& task_id, std::uint32_t incarnation, const net::Endpoint& ep);
  void audit_locked();
  std::string check_locked() const;
  void reap_workers_locked();

  TaskRunner runner_;
  mutable std::mutex mu_;
  std::vector<Node> nodes_;
  std::map<std::string, Task> tasks_;
  std::vector<std::pair<std::string, std::shared_ptr<TaskEvents>>> subs_;
  std::vector<Worker> workers_;
  std::atomic<std::uint64_t> violations_{0};
  bool shutting_down_ = false;
};

// Topology file, one `key = value` per line, '#' comments:
//   container-count = 2      # nodes node-0 .. node-1 with the defaults below
//   cpus = 8
//   gpus = 0
//   memory-mib = 16384
//   node gpu-0 cpus=4 gpus=2 memory-mib=32000 gpu-healthy=true
// INVALID_ARGUMENT with the line number on bad input.
std::vector<NodeSpec> parse_topology(std::string_view text);
std::vector<NodeSpec> load_topology(const std::filesystem::path& path);

}  // namespace dlaas::cluster
