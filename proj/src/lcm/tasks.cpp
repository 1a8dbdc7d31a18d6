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

#include "dlaas/lcm/tasks.hpp"

#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dlaas/common/error.hpp"
#include "dlaas/common/logfile.hpp"
#include "dlaas/coord/client.hpp"
#include "dlaas/learner/checkpoint.hpp"
#include "dlaas/learner/status.hpp"
#include "dlaas/ps/scheduler.hpp"
#include "dlaas/ps/server.hpp"

namespace dlaas::lcm {

std::string PsTaskConfig::to_json() const {
  nlohmann::json j{{"training_id", training_id}, {"shard", shard},
                   {"offset", range.offset},     {"length", range.length},
                   {"trainer", trainer},         {"dim", dim},
                   {"hyperparams", hyperparams}, {"learners", learners}};
  j["resume_from"] = resume_from ? nlohmann::json(*resume_from) : nlohmann::json(nullptr);
  return j.dump();
}

PsTaskConfig PsTaskConfig::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    PsTaskConfig c;
    c.training_id = j.at("training_id").get<std::string>();
    c.shard = j.at("shard").get<std::uint32_t>();
    c.range.offset = j.at("offset").get<std::uint64_t>();
    c.range.length = j.at("length").get<std::uint64_t>();
    c.trainer = j.at("trainer").get<std::string>();
    c.dim = j.at("dim").get<std::uint32_t>();
    c.hyperparams = j.value("hyperparams", learner::Hyperparams{});
    c.learners = j.at("learners").get<std::uint32_t>();
    if (j.contains("resume_from") && !j["resume_from"].is_null()) {
      c.resume_from = j["resume_from"].get<std::uint64_t>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("ps config: ") + e.what());
  }
}

std::string learner_task_blob(const learner::LearnerConfig& c) {
  return nlohmann::json{{"kind", "learner"}, {"config", nlohmann::json::parse(c.to_json())}}
      .dump();
}

std::string ps_task_blob(const PsTaskConfig& c) {
  return nlohmann::json{{"kind", "ps"}, {"config", nlohmann::json::parse(c.to_json())}}.dump();
}

std::filesystem::path job_log_path(const std::filesystem::path& log_root, const std::string& tid) {
  return log_root / tid / "training.log";
}

TaskRuntime::TaskRuntime(coord::Store& store, storage::ObjectStore& objects, RuntimeOptions opts)
    : store_(store), objects_(objects), opts_(std::move(opts)) {}

cluster::ExitStatus TaskRuntime::operator()(cluster::TaskContext& ctx) {
  auto j = nlohmann::json::parse(ctx.spec().config_blob);
  const auto kind = j.at("kind").get<std::string>();
  const auto cfg = j.at("config").dump();
  if (kind == "learner") return run_learner_task(ctx, learner::LearnerConfig::from_json(cfg));
  if (kind == "ps") return run_ps_task(ctx, PsTaskConfig::from_json(cfg));
  throw Error(Errc::kInvalidArgument, "unknown task kind " + kind);
}

cluster::ExitStatus TaskRuntime::run_learner_task(cluster::TaskContext& ctx,
                                                  const learner::LearnerConfig& c) {
  coord::LocalClient session(store_, opts_.session_ttl);
  learner::LearnerEnv env;
  env.coord = &session;
  env.store = &objects_;
  env.task_id = ctx.spec().task_id;
  env.work_dir =
      opts_.work_root / c.training_id / (ctx.spec().task_id + "-i" + std::to_string(ctx.incarnation()));
  env.log_path = job_log_path(opts_.log_root, c.training_id);
  env.log_prefix = "[learner-" + std::to_string(c.learner_id) + "] ";
  env.killed = ctx.stop_fn();
  env.incarnation = ctx.incarnation();
  env.status_period = opts_.status_period;
  const auto outcome = learner::run_learner(c, env);
  std::error_code ec;
  std::filesystem::remove_all(env.work_dir, ec);
  if (outcome == learner::Outcome::kCrashed ||
      ctx.stop_reason() == cluster::StopReason::kCrash) {
    session.abandon();
    return cluster::ExitStatus::kCrashed;
  }
  return cluster::ExitStatus::kOk;
}

cluster::ExitStatus TaskRuntime::run_ps_task(cluster::TaskContext& ctx, const PsTaskConfig& c) {
  coord::LocalClient session(store_, opts_.session_ttl);
  LogFile log(job_log_path(opts_.log_root, c.training_id),
              "[ps-" + std::to_string(c.shard) + "] ");
  const auto params = learner::TrainingParams::from(c.hyperparams);

  std::vector<double> initial;
  std::uint64_t clock = 0;
  if (c.resume_from) {
    auto blob = objects_.get(c.training_id, learner::shard_checkpoint_key(*c.resume_from, c.shard));
    auto ck = learner::ShardCheckpoint::decode(blob);
    if (ck.offset != c.range.offset || ck.weights.size() != c.range.length) {
      throw Error(Errc::kPartitionMismatch, "shard checkpoint does not match partition");
    }
    initial = std::move(ck.weights);
    clock = ck.clock;
    log.line("RESUME clock=" + std::to_string(clock));
  } else {
    auto tr = learner::make_trainer(c.trainer, c.dim, c.hyperparams);
    auto w = tr->init_weights(params.seed);
    if (c.range.offset + c.range.length > w.size()) {
      throw Error(Errc::kPartitionMismatch, "partition outside the model");
    }
    initial.assign(w.begin() + static_cast<std::ptrdiff_t>(c.range.offset),
                   w.begin() + static_cast<std::ptrdiff_t>(c.range.offset + c.range.length));
  }

  ps::AggregationPolicy policy;
  policy.kind = params.solver;
  policy.learning_rate = params.ps_learning_rate;
  policy.moving_rate = params.moving_rate;
  policy.expected_learners = c.learners;
  policy.validate();

  ps::AggregationScheduler scheduler;
  ps::ShardCore core(c.shard, c.range, std::move(initial), policy, &scheduler, clock);
  const auto every = learner::checkpoint_interval_rounds(params.checkpoint_every, params.sync_every);
  core.set_round_hook([&, every](std::uint64_t round, const std::vector<double>& slice) {
    if (round == 0 || round % every != 0) return;
    try {
      learner::ShardCheckpoint ck{round, c.range.offset, slice};
      objects_.put(c.training_id, learner::shard_checkpoint_key(round, c.shard), ck.encode());
    } catch (const Error& e) {
      spdlog::warn("shard {} checkpoint {} failed: {}", c.shard, round, e.what());
    }
  });
  ps::ShardServer server(core, learner::training_job_id(c.training_id));
  try {
    session.create(learner::live_path(c.training_id, ctx.spec().task_id),
                   std::to_string(ctx.incarnation()), coord::NodeMode::kEphemeral);
  } catch (const Error&) {
  }
  log.line("listening on " + server.endpoint().str() + " range [" +
           std::to_string(c.range.offset) + ", " +
           std::to_string(c.range.offset + c.range.length) + ")");
  ctx.publish_endpoint(server.endpoint());

  auto last_beat = std::chrono::steady_clock::now();
  while (!ctx.stopped()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    if (std::chrono::steady_clock::now() - last_beat >= opts_.status_period) {
      try {
        session.heartbeat();
      } catch (const Error&) {
      }
      last_beat = std::chrono::steady_clock::now();
    }
  }
  core.close();
  server.stop();
  if (ctx.stop_reason() == cluster::StopReason::kCrash) {
    session.abandon();
    return cluster::ExitStatus::kCrashed;
  }
  return cluster::ExitStatus::kOk;
}

}  // namespace dlaas::lcm
