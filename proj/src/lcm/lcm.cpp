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

#include "dlaas/lcm/lcm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dlaas/common/error.hpp"
#include "dlaas/common/logfile.hpp"
#include "dlaas/common/util.hpp"
#include "dlaas/lcm/tasks.hpp"
#include "dlaas/learner/checkpoint.hpp"
#include "dlaas/learner/cursor.hpp"
#include "dlaas/learner/learner.hpp"
#include "dlaas/ps/partition.hpp"
#include "dlaas/storage/dataset.hpp"

namespace dlaas::lcm {

namespace {

constexpr const char* kJobsRoot = "/jobs";
constexpr std::int64_t kMaxLearners = 256;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Clock of a "ckpt/<clock>/..." key.
std::optional<std::uint64_t> ckpt_clock(const std::string& key) {
  auto parts = split(key, '/');
  std::int64_t c = 0;
  if (parts.size() < 2 || parts[0] != "ckpt" || !parse_int64(parts[1], c) || c < 0) {
    return std::nullopt;
  }
  return static_cast<std::uint64_t>(c);
}

}  // namespace

Lcm::Lcm(coord::Client& coord, cluster::Cluster& cluster, storage::ObjectStore& objects,
         registry::Registry& registry, LcmOptions opts)
    : coord_(coord),
      cluster_(cluster),
      objects_(objects),
      registry_(registry),
      opts_(std::move(opts)) {
  coord_.ensure_path(kJobsRoot);
}

Lcm::~Lcm() { stop(); }

std::filesystem::path Lcm::log_path(const std::string& tid) const {
  return job_log_path(opts_.log_root, tid);
}

void Lcm::lcm_log(const std::string& tid, const std::string& text) {
  if (!opts_.log_root.empty()) append_log_line(log_path(tid), "[lcm] " + text);
}

std::string Lcm::submit(const std::string& model_id, const Overrides& ov) {
  registry::ModelRecord model;
  try {
    model = registry_.get_model(model_id);
  } catch (const Error& e) {
    if (e.code() == Errc::kNotFound) throw Error(Errc::kModelNotFound, model_id);
    throw;
  }
  if (ov.learners && (*ov.learners < 1 || *ov.learners > kMaxLearners)) {
    throw Error(Errc::kInvalidOverride, "learners must be in [1, " +
                                            std::to_string(kMaxLearners) + "]");
  }
  if (ov.gpus && *ov.gpus < 0) throw Error(Errc::kInvalidOverride, "gpus must be >= 0");
  if (ov.memory_mib && *ov.memory_mib < 1) {
    throw Error(Errc::kInvalidOverride, "memory must be positive");
  }

  TrainingJob job;
  job.training_id = random_id("training-");
  job.model_id = model_id;
  job.learners = ov.learners.value_or(model.manifest.learners);
  job.gpus = ov.gpus.value_or(model.manifest.gpus);
  job.memory_mib = ov.memory_mib.value_or(model.manifest.memory_mib);
  job.manifest = registry::serialize_manifest(model.manifest);
  job.hyperparams = learner::parse_definition(
      std::string_view(reinterpret_cast<const char*>(model.definition.data()),
                       model.definition.size()));
  for (const auto& [k, v] : model.manifest.framework.arguments) job.hyperparams[k] = v;
  auto it = job.hyperparams.find("trainer");
  job.trainer = it != job.hyperparams.end() ? it->second : model.manifest.framework.name;
  job.created_at = job.updated_at = unix_ms();

  coord_.ensure_path(job_root(job.training_id));
  coord_.create(job_record_path(job.training_id), job.to_json());
  lcm_log(job.training_id, "SUBMIT model=" + model_id + " learners=" +
                               std::to_string(job.learners) + " trainer=" + job.trainer);
  kick();
  return job.training_id;
}

std::optional<Lcm::Loaded> Lcm::load(const std::string& tid) {
  auto r = coord_.try_read(job_record_path(tid));
  if (!r) return std::nullopt;
  return Loaded{TrainingJob::from_json(r->first), r->second};
}

bool Lcm::save(const Loaded& l, const TrainingJob& next) {
  TrainingJob rec = next;
  rec.updated_at = unix_ms();
  try {
    coord_.write_cas(job_record_path(rec.training_id), rec.to_json(), l.version);
    return true;
  } catch (const Error& e) {
    if (e.code() == Errc::kVersionConflict || e.code() == Errc::kNotFound) return false;
    throw;
  }
}

TrainingJob Lcm::get_job(const std::string& tid) {
  auto l = load(tid);
  if (!l) throw Error(Errc::kNotFound, tid);
  return l->job;
}

std::vector<TrainingJob> Lcm::list_jobs() {
  std::vector<TrainingJob> out;
  for (const auto& tid : coord_.list_children(kJobsRoot)) {
    if (auto l = load(tid)) out.push_back(std::move(l->job));
  }
  std::sort(out.begin(), out.end(), [](const TrainingJob& a, const TrainingJob& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at
                                        : a.training_id < b.training_id;
  });
  return out;
}

std::vector<learner::LearnerStatus> Lcm::learner_statuses(const std::string& tid) {
  auto job = get_job(tid);
  std::vector<learner::LearnerStatus> out;
  for (std::int64_t i = 0; i < job.learners; ++i) {
    learner::LearnerStatus s;
    s.learner_id = static_cast<std::uint32_t>(i);
    s.generation = job.generation;
    if (auto r = coord_.try_read(learner::learner_status_path(tid, s.learner_id))) {
      try {
        auto parsed = learner::LearnerStatus::from_json(r->first);
        if (parsed.generation == job.generation) s = parsed;
      } catch (const Error&) {
      }
    }
    out.push_back(s);
  }
  return out;
}

void Lcm::halt(const std::string& tid) {
  for (;;) {
    auto l = load(tid);
    if (!l) throw Error(Errc::kNotFound, tid);
    if (l->job.state != JobState::kRunning) {
      throw Error(Errc::kInvalidState,
                  "cannot halt a job in state " + std::string(to_string(l->job.state)));
    }
    if (l->job.halt_requested) return;
    TrainingJob next = l->job;
    next.halt_requested = true;
    next.halt_at_ms = unix_ms();
    if (save(*l, next)) break;
  }
  coord_.put(learner::control_path(tid), "HALT");
  lcm_log(tid, "HALT requested");
  kick();
}

void Lcm::delete_job(const std::string& tid) {
  auto l = load(tid);
  if (!l) throw Error(Errc::kNotFound, tid);
  if (!is_terminal(l->job.state)) {
    throw Error(Errc::kInvalidState,
                "cannot delete a job in state " + std::string(to_string(l->job.state)));
  }
  remove_tree(job_root(tid));
  cluster_.forget_job(tid);
}

bool Lcm::model_in_use(const std::string& model_id) {
  for (const auto& j : list_jobs()) {
    if (j.model_id == model_id && !is_terminal(j.state)) return true;
  }
  return false;
}

void Lcm::remove_tree(const std::string& path) {
  std::vector<std::string> kids;
  try {
    kids = coord_.list_children(path);
  } catch (const Error& e) {
    if (e.code() == Errc::kNotFound) return;
    throw;
  }
  for (const auto& k : kids) remove_tree(path + "/" + k);
  try {
    coord_.remove(path, coord::kAnyVersion);
  } catch (const Error& e) {
    if (e.code() != Errc::kNotFound) throw;
  }
}

void Lcm::tick() {
  std::lock_guard lock(tick_mu_);
  std::vector<std::string> ids;
  try {
    ids = coord_.list_children(kJobsRoot);
  } catch (const Error& e) {
    spdlog::warn("lcm: cannot list jobs: {}", e.what());
    return;
  }
  for (const auto& tid : ids) {
    try {
      for (int i = 0; i < 8 && step(tid); ++i) {
      }
    } catch (const std::exception& e) {
      spdlog::warn("lcm: job {}: {}", tid, e.what());
    }
  }
}

bool Lcm::step(const std::string& tid) {
  auto l = load(tid);
  if (!l) return false;
  switch (l->job.state) {
    case JobState::kPending: return step_pending(*l);
    case JobState::kDeploying: return step_deploying(*l);
    case JobState::kRunning: return step_running(*l);
    default: return false;
  }
}

bool Lcm::transition(Loaded& l, TrainingJob next, JobEvent e, const std::string& why) {
  const JobState to = next_state(l.job.state, e);
  if (to == l.job.state) return false;
  if (!legal_transition(l.job.state, to)) {
    throw Error(Errc::kInternal, "illegal transition " + std::string(to_string(l.job.state)) +
                                     " -> " + std::string(to_string(to)));
  }
  next.state = to;
  if (!why.empty()) next.message = why;
  lcm_log(next.training_id, "STATE " + std::string(to_string(to)) +
                                (why.empty() ? std::string() : " (" + why + ")"));
  if (is_terminal(to)) finalize(next);
  if (!save(l, next)) return false;
  spdlog::info("job {} {} -> {}", next.training_id, to_string(l.job.state), to_string(to));
  return true;
}

std::vector<cluster::Resources> Lcm::demands(const TrainingJob& job) const {
  std::vector<cluster::Resources> d;
  if (job.learners >= 2) {
    for (std::uint32_t s = 0; s < job.shards; ++s) d.push_back(opts_.ps_demand);
  }
  for (std::int64_t i = 0; i < job.learners; ++i) d.push_back({1, job.gpus, job.memory_mib});
  return d;
}

void Lcm::size_parameter_server(TrainingJob& job) {
  try {
    const auto params = learner::TrainingParams::from(job.hyperparams);
    if (!learner::resolve_trainer(job.trainer)) {
      throw Error(Errc::kUnknownFramework, "no trainer plugin named '" + job.trainer + "'");
    }
    auto manifest = registry::parse_manifest(job.manifest);
    auto header = storage::peek_training_data(objects_, manifest, opts_.backoff);
    auto tr = learner::make_trainer(job.trainer, header.dim, job.hyperparams);
    job.dim = header.dim;
    job.model_size = tr->model_size();
    std::uint64_t s = params.shards ? params.shards : ps::default_shard_count(job.model_size);
    job.shards = static_cast<std::uint32_t>(std::min<std::uint64_t>(s, job.model_size));
  } catch (const Error& e) {
    job.deploy_error = e.what();
  }
}

bool Lcm::step_pending(Loaded& l) {
  TrainingJob next = l.job;
  if (next.learners >= 2 && next.shards == 0 && next.deploy_error.empty()) {
    size_parameter_server(next);
  }
  if (next.deploy_error.empty() && !cluster_.can_place_all(demands(next))) {
    const std::string msg = "waiting for resources";
    if (next.message != msg || next.shards != l.job.shards) {
      next.message = msg;
      if (save(l, next)) lcm_log(next.training_id, "PENDING " + msg);
    }
    return false;
  }
  return transition(l, next, JobEvent::kAdmitted, "");
}

void Lcm::kill_tasks(const std::string& tid) {
  for (const auto& t : cluster_.tasks(tid)) {
    if (!cluster::holds_resources(t.state)) continue;
    try {
      cluster_.kill(t.task_id);
    } catch (const Error&) {
    }
  }
}

void Lcm::prepare_tree(const TrainingJob& job) {
  const auto& tid = job.training_id;
  const auto L = static_cast<std::uint32_t>(job.learners);
  learner::ensure_job_tree(coord_, tid, L);
  const std::string cursors = job_root(tid) + "/cursor";
  for (const auto& c : coord_.list_children(cursors)) remove_tree(cursors + "/" + c);
  for (std::uint32_t i = 0; i < L; ++i) {
    try {
      coord_.remove(learner::learner_status_path(tid, i), coord::kAnyVersion);
    } catch (const Error& e) {
      if (e.code() != Errc::kNotFound) throw;
    }
  }
  remove_tree(job_root(tid) + "/ps");
  coord_.put(learner::control_path(tid), "");

  // Blobs newer than the resume point belong to the abandoned generation and
  // could pair up with new ones into a bogus complete set.
  if (objects_.container_exists(tid)) {
    for (const auto& key : objects_.list(tid, "ckpt/")) {
      auto c = ckpt_clock(key);
      if (c && (!job.resume_from || *c > *job.resume_from)) objects_.remove(tid, key);
    }
    for (const auto& key : objects_.list(tid, "final/")) objects_.remove(tid, key);
  }

  std::uint32_t epoch = 0;
  std::uint64_t start = 0;
  if (job.resume_from) {
    std::optional<std::uint32_t> min_epoch;
    for (std::uint32_t i = 0; i < L; ++i) {
      auto blob = objects_.try_get(tid, learner::learner_checkpoint_key(*job.resume_from, i));
      if (!blob) continue;
      auto ck = learner::Checkpoint::decode(*blob);
      if (!min_epoch || ck.epoch < *min_epoch) {
        min_epoch = ck.epoch;
        start = ck.cursor_hint;
      } else if (ck.epoch == *min_epoch) {
        start = std::min(start, ck.cursor_hint);
      }
    }
    epoch = min_epoch.value_or(0);
    if (!min_epoch) start = 0;
  }
  coord_.put(learner::cursor_path(tid, epoch), std::to_string(start));
}

bool Lcm::step_deploying(Loaded& l) {
  TrainingJob next = l.job;
  const auto& tid = next.training_id;
  if (!next.deploy_error.empty()) {
    lcm_log(tid, "JOB_FAILED: " + next.deploy_error);
    return transition(l, next, JobEvent::kDeployFailed, next.deploy_error);
  }
  if (!next.prepared) {
    kill_tasks(tid);
    if (cluster_.running_bodies(tid) > 0) return false;
    prepare_tree(next);
    next.prepared = true;
    next.ps_endpoints.clear();
    if (next.resume_from) {
      lcm_log(tid, "DEPLOY generation=" + std::to_string(next.generation) +
                       " resume_from=" + std::to_string(*next.resume_from));
    } else {
      lcm_log(tid, "DEPLOY generation=" + std::to_string(next.generation));
    }
    return save(l, next);
  }

  const auto gen = next.generation;
  const auto L = static_cast<std::uint32_t>(next.learners);
  try {
    if (L >= 2) {
      auto parts = ps::partition_model(next.model_size, next.shards);
      bool ready = true;
      std::vector<std::string> eps(next.shards);
      for (std::uint32_t s = 0; s < next.shards; ++s) {
        const auto id = ps_task_id(tid, s, gen);
        auto h = cluster_.task(id);
        if (!h) {
          PsTaskConfig pc{tid,  s, parts[s], next.trainer, next.dim, next.hyperparams,
                          L,    next.resume_from};
          cluster::TaskSpec spec{id,
                                 tid,
                                 cluster::TaskKind::kPsShard,
                                 opts_.ps_demand,
                                 ps_task_blob(pc),
                                 {opts_.ps_max_restarts}};
          cluster_.launch(spec);
          ready = false;
          continue;
        }
        if (h->state == cluster::TaskState::kRunning && !h->endpoint.empty()) {
          eps[s] = h->endpoint;
          continue;
        }
        if (h->state == cluster::TaskState::kStaging) {
          ready = false;
          continue;
        }
        // Lost a shard before the learners went out: start over.
        const std::string why = "ps shard " + std::to_string(s) + " " +
                                std::string(cluster::to_string(h->state)) + " during deploy";
        if (next.generation >= opts_.recovery_budget) {
          return transition(l, next, JobEvent::kBudgetExhausted, why);
        }
        lcm_log(tid, why);
        next.generation++;
        next.prepared = false;
        return save(l, next);
      }
      if (!ready) return false;
      if (next.ps_endpoints != eps) {
        for (std::uint32_t s = 0; s < next.shards; ++s) {
          coord_.ensure_path(job_root(tid) + "/ps/" + std::to_string(s));
          coord_.put(ps_endpoint_path(tid, s), eps[s]);
        }
        next.ps_endpoints = eps;
        lcm_log(tid, "PS RUNNING " + [&] {
          std::string s;
          for (const auto& e : eps) s += (s.empty() ? "" : ",") + e;
          return s;
        }());
        if (!save(l, next)) return false;
        l.job = next;
        auto fresh = load(tid);
        if (!fresh) return false;
        l = *fresh;
        next = l.job;
      }
    }
    for (std::uint32_t i = 0; i < L; ++i) {
      const auto id = learner_task_id(tid, i, gen);
      if (cluster_.task(id)) continue;
      learner::LearnerConfig c;
      c.learner_id = i;
      c.learners = L;
      c.training_id = tid;
      c.manifest = next.manifest;
      c.trainer = next.trainer;
      c.hyperparams = next.hyperparams;
      c.ps_endpoints = next.ps_endpoints;
      c.assigned_gpus = static_cast<std::uint32_t>(next.gpus);
      c.resume_from = next.resume_from;
      c.generation = gen;
      cluster::TaskSpec spec{id,
                             tid,
                             cluster::TaskKind::kLearner,
                             {1, next.gpus, next.memory_mib},
                             learner_task_blob(c),
                             {opts_.learner_max_restarts}};
      cluster_.launch(spec);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kInsufficientResources) return false;
    throw;
  }
  return transition(l, next, JobEvent::kDeployed, "");
}

bool Lcm::step_running(Loaded& l) {
  TrainingJob next = l.job;
  const auto& tid = next.training_id;
  const auto L = static_cast<std::uint32_t>(next.learners);
  const auto statuses = learner_statuses(tid);
  const auto now = unix_ms();

  if (next.halt_requested) {
    coord_.put(learner::control_path(tid), "HALT");
    bool stopped = true;
    for (std::uint32_t i = 0; i < L; ++i) {
      if (learner::is_terminal(statuses[i].phase)) continue;
      auto h = cluster_.task(learner_task_id(tid, i, next.generation));
      if (h && cluster::holds_resources(h->state)) stopped = false;
    }
    if (stopped || now - next.halt_at_ms >= opts_.halt_timeout.count()) {
      return transition(l, next, JobEvent::kHaltComplete,
                        stopped ? "halted by user" : "halted by user (timeout)");
    }
    return false;
  }

  for (const auto& s : statuses) {
    if (s.phase == learner::Phase::kJobFailed) {
      return transition(l, next, JobEvent::kLearnerFailed,
                        "learner " + std::to_string(s.learner_id) + ": " + s.message);
    }
  }
  if (std::all_of(statuses.begin(), statuses.end(),
                  [](const auto& s) { return s.phase == learner::Phase::kDone; })) {
    return transition(l, next, JobEvent::kAllDone, "");
  }

  std::string fault;
  if (L >= 2) {
    for (std::uint32_t s = 0; s < next.shards && fault.empty(); ++s) {
      auto h = cluster_.task(ps_task_id(tid, s, next.generation));
      if (!h || h->state != cluster::TaskState::kRunning) {
        fault = "ps shard " + std::to_string(s) + " lost";
      }
    }
  }
  std::uint32_t alive = 0;
  for (std::uint32_t i = 0; i < L && fault.empty(); ++i) {
    const auto id = learner_task_id(tid, i, next.generation);
    auto h = cluster_.task(id);
    if (h && h->restarts_exhausted) {
      fault = "learner " + std::to_string(i) + " out of restarts";
      break;
    }
    if (statuses[i].phase == learner::Phase::kDone || coord_.exists(learner::live_path(tid, id))) {
      ++alive;
    } else if (h && cluster::holds_resources(h->state) &&
               now - h->state_since_ms < opts_.liveness_grace.count()) {
      ++alive;
    }
  }
  if (fault.empty() && alive < (L + 1) / 2) {
    fault = std::to_string(alive) + " of " + std::to_string(L) + " learners alive";
  }
  if (fault.empty()) return false;

  if (next.generation >= opts_.recovery_budget) {
    return transition(l, next, JobEvent::kBudgetExhausted,
                      "RECOVERY_BUDGET_EXHAUSTED: " + fault);
  }
  const std::uint32_t shards = L >= 2 ? next.shards : 0;
  next.resume_from = learner::latest_complete_checkpoint(objects_, tid, L, shards);
  if (!next.resume_from) lcm_log(tid, "NO_CHECKPOINT: restarting from iteration 0");
  next.generation++;
  next.prepared = false;
  next.ps_endpoints.clear();
  kill_tasks(tid);
  return transition(l, next, JobEvent::kFault, "recovering: " + fault);
}

std::optional<std::vector<double>> Lcm::final_weights(const TrainingJob& job) {
  for (std::int64_t i = 0; i < job.learners; ++i) {
    if (auto b = objects_.try_get(job.training_id,
                                  learner::final_model_key(static_cast<std::uint32_t>(i)))) {
      return learner::ModelBlob::decode(*b).weights;
    }
  }
  const std::uint32_t L = static_cast<std::uint32_t>(job.learners);
  if (auto c = learner::latest_complete_checkpoint(objects_, job.training_id, L,
                                                    L >= 2 ? job.shards : 0)) {
    auto b = objects_.get(job.training_id, learner::learner_checkpoint_key(*c, 0));
    return learner::Checkpoint::decode(b).weights;
  }
  return std::nullopt;
}

void Lcm::finalize(TrainingJob& job) {
  const auto& tid = job.training_id;
  kill_tasks(tid);
  job.completed_at = unix_ms();
  try {
    auto manifest = registry::parse_manifest(job.manifest);
    std::optional<Bytes> model;
    if (job.state == JobState::kCompleted) {
      model = objects_.try_get(tid, learner::final_model_key(0));
      if (!model) job.message = "no final model from learner 0";
    } else if (job.state == JobState::kHalted) {
      if (auto w = final_weights(job)) {
        auto name = learner::resolve_trainer(job.trainer).value_or(job.trainer);
        model = learner::ModelBlob{name, *w}.encode();
      }
    }
    lcm_log(tid, model ? "UPLOAD model and log" : "UPLOAD log");
    const std::string log = read_file(log_path(tid));
    if (model) {
      job.results = storage::store_results(objects_, manifest, tid, *model, as_bytes(log),
                                           opts_.backoff);
    } else {
      job.results = storage::store_log(objects_, manifest, tid, as_bytes(log), opts_.backoff);
    }
  } catch (const Error& e) {
    job.message += (job.message.empty() ? "" : "; ") + std::string("upload failed: ") + e.what();
  }
  for (const char* sub : {"/cursor", "/live", "/ps", "/control"}) {
    try {
      remove_tree(job_root(tid) + sub);
    } catch (const Error& e) {
      spdlog::warn("lcm: gc {}{}: {}", tid, sub, e.what());
    }
  }
}

void Lcm::start() {
  if (thread_.joinable()) return;
  stop_ = false;
  thread_ = std::thread([this] { loop(); });
}

void Lcm::stop() {
  stop_ = true;
  kick();
  if (thread_.joinable()) thread_.join();
}

void Lcm::kick() {
  {
    std::lock_guard lock(wake_mu_);
    kicked_ = true;
  }
  wake_.notify_all();
}

void Lcm::loop() {
  while (!stop_) {
    tick();
    std::unique_lock lock(wake_mu_);
    wake_.wait_for(lock, opts_.tick, [this] { return kicked_ || stop_.load(); });
    kicked_ = false;
  }
}

}  // namespace dlaas::lcm
