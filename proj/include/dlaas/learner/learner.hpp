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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dlaas/common/net.hpp"
#include "dlaas/coord/client.hpp"
#include "dlaas/learner/trainer.hpp"
#include "dlaas/ps/shard.hpp"
#include "dlaas/ps/wire.hpp"
#include "dlaas/storage/object_store.hpp"

namespace dlaas::learner {

// Model definition text for the built-in trainers: one `key: value` per
// line, '#' comments, anything else ignored (so a real solver file still
// yields its scalar settings). `base_lr` is read as learning_rate.
Hyperparams parse_definition(std::string_view text);

// Job-level knobs read from the hyperparameters. Unknown keys are left for
// the trainer plugin.
struct TrainingParams {
  double learning_rate = 0.1;
  std::uint32_t batch_size = 16;
  std::uint32_t epochs = 5;
  std::uint32_t sync_every = 5;          // tau
  std::uint64_t chunk_size = 0;          // 0 = default rule
  std::uint64_t checkpoint_every = 100;  // C, iterations
  std::uint64_t metric_every = 10;       // k, iterations
  ps::Solver solver = ps::Solver::kModelAvgBsp;
  double ps_learning_rate = 0.1;
  double moving_rate = 0.5;
  std::uint64_t shards = 0;  // 0 = one per 4096 weights
  bool ordered_claims = false;
  std::uint64_t seed = 1;
  std::uint64_t step_delay_us = 0;  // throttle for tests and demos
  // Fault injection: the first incarnation of `crash_learner` (-1 = every
  // learner) dies after this iteration; 0 disables.
  std::uint64_t crash_at_iteration = 0;
  std::int64_t crash_learner = -1;

  // Throws INVALID_ARGUMENT naming the offending key.
  static TrainingParams from(const Hyperparams& hp);
};

struct LearnerConfig {
  std::uint32_t learner_id = 0;
  std::uint32_t learners = 1;
  std::string training_id;
  std::string manifest;  // canonical manifest text; names the training store
  std::string trainer;   // plugin name or alias
  Hyperparams hyperparams;
  std::vector<std::string> ps_endpoints;
  std::uint32_t assigned_gpus = 0;
  std::optional<std::uint64_t> resume_from;
  std::uint32_t generation = 0;  // full-job redeploys so far

  std::string to_json() const;
  static LearnerConfig from_json(std::string_view text);
};

// Seed of learner `id`'s shuffling stream, derived from the job seed.
std::uint64_t learner_seed(std::uint64_t job_seed, std::uint32_t id);

// `ITER <n> LOSS <f> ACC <f> LR <f> TS <unix-ms>`, shortest round-trip
// decimals.
std::string format_metric_line(std::uint64_t iteration, double loss, double accuracy, double lr,
                               std::int64_t ts_ms);

struct LearnerEnv {
  coord::Client* coord = nullptr;  // this task's own session
  storage::ObjectStore* store = nullptr;
  std::string task_id;
  std::filesystem::path work_dir;
  std::filesystem::path log_path;
  std::string log_prefix;  // e.g. "[learner-2] " when learners share a file
  net::CancelFn killed;
  std::uint32_t incarnation = 0;
  std::chrono::milliseconds status_period{200};
};

enum class Outcome { kDone, kFailed, kHalted, kCrashed, kKilled };
std::string_view to_string(Outcome o);

// Full load -> train -> store lifecycle of one learner.
Outcome run_learner(const LearnerConfig& cfg, LearnerEnv& env);

// 16-byte PS job id: the hex suffix of `training-<12 hex>`.
ps::JobId training_job_id(std::string_view training_id);

// Objects a learner leaves in the job container.
std::string final_model_key(std::uint32_t learner);

}  // namespace dlaas::learner
