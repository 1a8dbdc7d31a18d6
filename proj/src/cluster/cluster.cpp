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

#include "dlaas/cluster/cluster.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::cluster {

Resources& Resources::operator+=(const Resources& o) {
  cpus += o.cpus;
  gpus += o.gpus;
  memory_mib += o.memory_mib;
  return *this;
}

Resources& Resources::operator-=(const Resources& o) {
  cpus -= o.cpus;
  gpus -= o.gpus;
  memory_mib -= o.memory_mib;
  return *this;
}

std::string_view to_string(TaskKind k) {
  return k == TaskKind::kPsShard ? "PS_SHARD" : "LEARNER";
}

std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::kStaging: return "STAGING";
    case TaskState::kRunning: return "RUNNING";
    case TaskState::kExitedOk: return "EXITED_OK";
    case TaskState::kCrashed: return "CRASHED";
    case TaskState::kKilled: return "KILLED";
  }
  return "?";
}

void TaskContext::publish_endpoint(const net::Endpoint& ep) {
  cluster_.publish(spec_.task_id, incarnation_, ep);
}

Cluster::Cluster(std::vector<NodeSpec> nodes, TaskRunner runner) : runner_(std::move(runner)) {
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.node_id < b.node_id; });
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].node_id == nodes[i - 1].node_id) {
      throw Error(Errc::kInvalidArgument, "duplicate node id " + nodes[i].node_id);
    }
  }
  for (auto& n : nodes) {
    if (!n.capacity.nonnegative()) {
      throw Error(Errc::kInvalidArgument, "negative capacity on " + n.node_id);
    }
    nodes_.push_back(Node{std::move(n), {}});
  }
}

Cluster::~Cluster() {
  std::vector<Worker> workers;
  {
    std::lock_guard lock(mu_);
    shutting_down_ = true;
    for (auto& [id, t] : tasks_) {
      if (!holds_resources(t.handle.state)) continue;
      t.stop->store(static_cast<int>(StopReason::kKill));
      release_locked(t);
      set_state_locked(t, TaskState::kKilled);
    }
    workers = std::move(workers_);
    for (auto& [job, q] : subs_) q->close();
  }
  for (auto& w : workers) {
    if (w.thread.joinable()) w.thread.join();
  }
}

std::optional<std::size_t> Cluster::place_locked(const Resources& demand,
                                                 const std::string& avoid) const {
  std::optional<std::size_t> fallback;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (demand.gpus > 0 && !n.spec.gpu_healthy) continue;
    Resources free = n.spec.capacity;
    free -= n.used;
    if (!demand.fits_in(free)) continue;
    if (n.spec.node_id != avoid) return i;
    if (!fallback) fallback = i;
  }
  return fallback;
}

bool Cluster::can_place_all(const std::vector<Resources>& demands) const {
  std::lock_guard lock(mu_);
  std::vector<Resources> used;
  for (const auto& n : nodes_) used.push_back(n.used);
  for (const auto& d : demands) {
    bool placed = false;
    for (std::size_t i = 0; i < nodes_.size() && !placed; ++i) {
      if (d.gpus > 0 && !nodes_[i].spec.gpu_healthy) continue;
      Resources free = nodes_[i].spec.capacity;
      free -= used[i];
      if (d.fits_in(free)) {
        used[i] += d;
        placed = true;
      }
    }
    if (!placed) return false;
  }
  return true;
}

TaskHandle Cluster::launch(const TaskSpec& spec) {
  std::lock_guard lock(mu_);
  if (shutting_down_) throw Error(Errc::kInvalidState, "cluster is shutting down");
  if (spec.task_id.empty()) throw Error(Errc::kInvalidArgument, "empty task id");
  if (!spec.demand.nonnegative()) {
    throw Error(Errc::kInvalidArgument, "negative demand for " + spec.task_id);
  }
  if (tasks_.count(spec.task_id)) throw Error(Errc::kAlreadyExists, spec.task_id);
  reap_workers_locked();
  auto node = place_locked(spec.demand, {});
  if (!node) {
    throw Error(Errc::kInsufficientResources,
                "no node fits cpus=" + std::to_string(spec.demand.cpus) +
                    " gpus=" + std::to_string(spec.demand.gpus) +
                    " memory_mib=" + std::to_string(spec.demand.memory_mib));
  }
  Task& t = tasks_[spec.task_id];
  t.spec = spec;
  t.handle.task_id = spec.task_id;
  t.handle.job_id = spec.job_id;
  t.handle.kind = spec.kind;
  start_locked(t, *node);
  audit_locked();
  return t.handle;
}

void Cluster::start_locked(Task& t, std::size_t node) {
  Node& n = nodes_[node];
  n.used += t.spec.demand;
  t.handle.node_id = n.spec.node_id;
  t.handle.endpoint.clear();
  t.placed_while_unhealthy = t.spec.demand.gpus > 0 && !n.spec.gpu_healthy;
  t.stop = std::make_shared<std::atomic<int>>(0);
  ++t.bodies;
  set_state_locked(t, TaskState::kStaging);

  std::shared_ptr<TaskContext> ctx(
      new TaskContext(*this, t.spec, t.handle.restarts, n.spec.node_id, t.stop));
  auto done = std::make_shared<std::atomic<bool>>(false);
  workers_.push_back(Worker{std::thread([this, ctx, done] {
                              ExitStatus st = ExitStatus::kCrashed;
                              try {
                                st = runner_(*ctx);
                              } catch (const std::exception& e) {
                                spdlog::warn("task {} threw: {}", ctx->spec().task_id, e.what());
                              } catch (...) {
                              }
                              on_exit(ctx->spec().task_id, ctx->incarnation(), st);
                              done->store(true);
                            }),
                            done});
  if (t.spec.kind == TaskKind::kLearner) set_state_locked(t, TaskState::kRunning);
}

void Cluster::release_locked(Task& t) {
  for (auto& n : nodes_) {
    if (n.spec.node_id == t.handle.node_id) {
      n.used -= t.spec.demand;
      return;
    }
  }
}

void Cluster::set_state_locked(Task& t, TaskState s) {
  t.handle.state = s;
  t.handle.state_since_ms = unix_ms();
  for (auto& [job, q] : subs_) {
    if (job.empty() || job == t.handle.job_id) q->push(t.handle);
  }
}

void Cluster::crash_locked(Task& t) {
  t.stop->store(static_cast<int>(StopReason::kCrash));
  release_locked(t);
  const std::string old_node = t.handle.node_id;
  std::optional<std::size_t> node;
  if (!shutting_down_ && t.handle.restarts < t.spec.restart_policy.max_restarts) {
    node = place_locked(t.spec.demand, old_node);
  }
  t.handle.restarts_exhausted = !node;
  set_state_locked(t, TaskState::kCrashed);
  if (node) {
    ++t.handle.restarts;
    spdlog::info("restarting task {} on {} (restart {})", t.spec.task_id,
                 nodes_[*node].spec.node_id, t.handle.restarts);
    start_locked(t, *node);
  }
}

void Cluster::on_exit(const std::string& task_id, std::uint32_t incarnation, ExitStatus st) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return;
  Task& t = it->second;
  --t.bodies;
  if (t.handle.restarts != incarnation || !holds_resources(t.handle.state)) return;
  if (st == ExitStatus::kOk) {
    release_locked(t);
    set_state_locked(t, TaskState::kExitedOk);
  } else {
    crash_locked(t);
  }
  audit_locked();
}

void Cluster::publish(const std::string& task_id, std::uint32_t incarnation,
                      const net::Endpoint& ep) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return;
  Task& t = it->second;
  if (t.handle.restarts != incarnation || t.handle.state != TaskState::kStaging) return;
  t.handle.endpoint = ep.str();
  set_state_locked(t, TaskState::kRunning);
}

void Cluster::kill(const std::string& task_id) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(Errc::kNotFound, "task " + task_id);
  Task& t = it->second;
  if (!holds_resources(t.handle.state)) return;
  t.stop->store(static_cast<int>(StopReason::kKill));
  release_locked(t);
  set_state_locked(t, TaskState::kKilled);
  audit_locked();
}

void Cluster::crash(const std::string& task_id) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(Errc::kNotFound, "task " + task_id);
  if (!holds_resources(it->second.handle.state)) return;
  crash_locked(it->second);
  audit_locked();
}

void Cluster::crash_node(const std::string& node_id) {
  std::lock_guard lock(mu_);
  if (std::none_of(nodes_.begin(), nodes_.end(),
                   [&](const Node& n) { return n.spec.node_id == node_id; })) {
    throw Error(Errc::kNotFound, "node " + node_id);
  }
  std::vector<Task*> victims;
  for (auto& [id, t] : tasks_) {
    if (t.handle.node_id == node_id && holds_resources(t.handle.state)) victims.push_back(&t);
  }
  for (Task* t : victims) crash_locked(*t);
  audit_locked();
}

void Cluster::mark_gpu_unhealthy(const std::string& node_id) {
  std::lock_guard lock(mu_);
  for (auto& n : nodes_) {
    if (n.spec.node_id == node_id) {
      n.spec.gpu_healthy = false;
      return;
    }
  }
  throw Error(Errc::kNotFound, "node " + node_id);
}

void Cluster::mark_gpu_healthy(const std::string& node_id) {
  std::lock_guard lock(mu_);
  for (auto& n : nodes_) {
    if (n.spec.node_id == node_id) {
      n.spec.gpu_healthy = true;
      return;
    }
  }
  throw Error(Errc::kNotFound, "node " + node_id);
}

std::optional<TaskHandle> Cluster::task(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return std::nullopt;
  return it->second.handle;
}

std::vector<TaskHandle> Cluster::tasks(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  std::vector<TaskHandle> out;
  for (const auto& [id, t] : tasks_) {
    if (job_id.empty() || t.handle.job_id == job_id) out.push_back(t.handle);
  }
  return out;
}

std::vector<NodeSpec> Cluster::nodes() const {
  std::lock_guard lock(mu_);
  std::vector<NodeSpec> out;
  for (const auto& n : nodes_) out.push_back(n.spec);
  return out;
}

Resources Cluster::free_resources(const std::string& node_id) const {
  std::lock_guard lock(mu_);
  for (const auto& n : nodes_) {
    if (n.spec.node_id == node_id) {
      Resources f = n.spec.capacity;
      f -= n.used;
      return f;
    }
  }
  throw Error(Errc::kNotFound, "node " + node_id);
}

std::size_t Cluster::running_bodies(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, t] : tasks_) {
    if (t.handle.job_id == job_id) n += t.bodies;
  }
  return n;
}

void Cluster::forget_job(const std::string& job_id) {
  std::lock_guard lock(mu_);
  for (auto it = tasks_.begin(); it != tasks_.end();) {
    if (it->second.handle.job_id == job_id && !holds_resources(it->second.handle.state) &&
        it->second.bodies == 0) {
      it = tasks_.erase(it);
    } else {
      ++it;
    }
  }
}

std::shared_ptr<TaskEvents> Cluster::subscribe(const std::string& job_id) {
  auto q = std::make_shared<TaskEvents>();
  std::lock_guard lock(mu_);
  subs_.emplace_back(job_id, q);
  return q;
}

void Cluster::unsubscribe(const std::shared_ptr<TaskEvents>& q) {
  std::lock_guard lock(mu_);
  q->close();
  subs_.erase(std::remove_if(subs_.begin(), subs_.end(),
                             [&](const auto& s) { return s.second == q; }),
              subs_.end());
}

std::string Cluster::check_locked() const {
  for (const auto& n : nodes_) {
    Resources sum;
    for (const auto& [id, t] : tasks_) {
      if (t.handle.node_id == n.spec.node_id && holds_resources(t.handle.state)) {
        sum += t.spec.demand;
      }
    }
    if (!(sum == n.used)) return "reserved resources on " + n.spec.node_id + " drifted";
    if (!n.used.fits_in(n.spec.capacity) || !n.used.nonnegative()) {
      return "node " + n.spec.node_id + " over capacity";
    }
  }
  for (const auto& [id, t] : tasks_) {
    if (t.placed_while_unhealthy) return "GPU task " + id + " placed on an unhealthy node";
    if (t.handle.restarts > t.spec.restart_policy.max_restarts) {
      return "task " + id + " restarted past its policy";
    }
  }
  return {};
}

void Cluster::audit_locked() {
  if (auto why = check_locked(); !why.empty()) {
    violations_.fetch_add(1);
    spdlog::error("cluster invariant violated: {}", why);
  }
}

void Cluster::check_invariants() const {
  std::lock_guard lock(mu_);
  if (auto why = check_locked(); !why.empty()) throw Error(Errc::kInternal, why);
}

void Cluster::reap_workers_locked() {
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (it->done->load()) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

// --- topology -----------------------------------------------------------------

namespace {

std::int64_t topo_int(std::string_view v, std::size_t line) {
  std::int64_t out = 0;
  if (!parse_int64(v, out) || out < 0) {
    throw Error(Errc::kInvalidArgument,
                "line " + std::to_string(line) + ": bad number '" + std::string(v) + "'");
  }
  return out;
}

bool topo_bool(std::string_view v, std::size_t line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw Error(Errc::kInvalidArgument,
              "line " + std::to_string(line) + ": expected true or false");
}

void set_field(NodeSpec& n, std::string_view key, std::string_view value, std::size_t line) {
  if (key == "cpus") {
    n.capacity.cpus = topo_int(value, line);
  } else if (key == "gpus") {
    n.capacity.gpus = topo_int(value, line);
  } else if (key == "memory-mib") {
    n.capacity.memory_mib = topo_int(value, line);
  } else if (key == "gpu-healthy") {
    n.gpu_healthy = topo_bool(value, line);
  } else {
    throw Error(Errc::kInvalidArgument,
                "line " + std::to_string(line) + ": unknown key '" + std::string(key) + "'");
  }
}

}  // namespace

std::vector<NodeSpec> parse_topology(std::string_view text) {
  NodeSpec defaults;
  defaults.capacity = Resources{8, 0, 16384};
  std::int64_t count = 0;
  std::vector<NodeSpec> named;
  std::size_t lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string_view line = raw;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("node ", 0) == 0) {
      std::istringstream in{std::string(line.substr(5))};
      NodeSpec n = defaults;
      in >> n.node_id;
      if (n.node_id.empty()) {
        throw Error(Errc::kInvalidArgument, "line " + std::to_string(lineno) + ": node needs a name");
      }
      for (std::string kv; in >> kv;) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
          throw Error(Errc::kInvalidArgument,
                      "line " + std::to_string(lineno) + ": expected key=value, got '" + kv + "'");
        }
        set_field(n, std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1),
                  lineno);
      }
      named.push_back(std::move(n));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::kInvalidArgument, "line " + std::to_string(lineno) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key == "container-count") {
      count = topo_int(value, lineno);
    } else {
      set_field(defaults, key, value, lineno);
    }
  }
  std::vector<NodeSpec> out;
  for (std::int64_t i = 0; i < count; ++i) {
    NodeSpec n = defaults;
    n.node_id = "node-" + std::to_string(i);
    out.push_back(std::move(n));
  }
  for (auto& n : named) out.push_back(std::move(n));
  if (out.empty()) throw Error(Errc::kInvalidArgument, "topology defines no nodes");
  return out;
}

std::vector<NodeSpec> load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kNotFound, "topology file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

}  // namespace dlaas::cluster
