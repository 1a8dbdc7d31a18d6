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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dlaas/cluster/cluster.hpp"
#include "dlaas/coord/store.hpp"
#include "dlaas/learner/learner.hpp"
#include "dlaas/ps/partition.hpp"
#include "dlaas/ps/shard.hpp"
#include "dlaas/storage/object_store.hpp"

namespace dlaas::lcm {

struct PsTaskConfig {
  std::string training_id;
  std::uint32_t shard = 0;
  ps::Range range;
  std::string trainer;
  std::uint32_t dim = 0;
  learner::Hyperparams hyperparams;
  std::uint32_t learners = 2;
  std::optional<std::uint64_t> resume_from;

  std::string to_json() const;
  static PsTaskConfig from_json(std::string_view text);
};

// config_blob of a cluster task: {"kind": "learner"|"ps", "config": {...}}.
std::string learner_task_blob(const learner::LearnerConfig& c);
std::string ps_task_blob(const PsTaskConfig& c);

struct RuntimeOptions {
  std::filesystem::path work_root;  // per-task scratch space
  std::filesystem::path log_root;   // <log_root>/<tid>/training.log
  std::chrono::milliseconds session_ttl{2000};
  std::chrono::milliseconds status_period{200};
};

std::filesystem::path job_log_path(const std::filesystem::path& log_root, const std::string& tid);

// Runs task bodies in-process: each incarnation gets its own coordination
// session on `store`. A crashed incarnation abandons its session, so its
// ephemeral nodes linger until the TTL lapses, as with a dead process.
class TaskRuntime {
 public:
  TaskRuntime(coord::Store& store, storage::ObjectStore& objects, RuntimeOptions opts);

  cluster::ExitStatus operator()(cluster::TaskContext& ctx);
  cluster::TaskRunner runner() {
    return [this](cluster::TaskContext& ctx) { return (*this)(ctx); };
  }

 private:
  cluster::ExitStatus run_learner_task(cluster::TaskContext& ctx, const learner::LearnerConfig& c);
  cluster::ExitStatus run_ps_task(cluster::TaskContext& ctx, const PsTaskConfig& c);

  coord::Store& store_;
  storage::ObjectStore& objects_;
  RuntimeOptions opts_;
};

}  // namespace dlaas::lcm
