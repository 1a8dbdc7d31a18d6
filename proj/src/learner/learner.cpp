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

#include "dlaas/learner/learner.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dlaas/common/error.hpp"
#include "dlaas/common/logfile.hpp"
#include "dlaas/common/util.hpp"
#include "dlaas/learner/checkpoint.hpp"
#include "dlaas/learner/cursor.hpp"
#include "dlaas/learner/status.hpp"
#include "dlaas/ps/client.hpp"
#include "dlaas/registry/manifest.hpp"
#include "dlaas/storage/dataset.hpp"

namespace dlaas::learner {

Hyperparams parse_definition(std::string_view text) {
  Hyperparams out;
  for (const auto& raw : split(text, '\n')) {
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) continue;
    std::string key(trim(line.substr(0, colon)));
    std::string value(trim(line.substr(colon + 1)));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.find(' ') != std::string::npos) continue;
    if (key == "base_lr") key = "learning_rate";
    out[key] = value;
  }
  return out;
}

namespace {

template <typename T>
void read_uint(const Hyperparams& hp, const char* key, T& out, std::uint64_t min_value) {
  auto it = hp.find(key);
  if (it == hp.end()) return;
  std::int64_t v = 0;
  if (!parse_int64(it->second, v) || v < 0 || static_cast<std::uint64_t>(v) < min_value) {
    throw Error(Errc::kInvalidArgument, std::string(key) + ": bad value '" + it->second + "'");
  }
  out = static_cast<T>(v);
}

void read_positive(const Hyperparams& hp, const char* key, double& out) {
  auto it = hp.find(key);
  if (it == hp.end()) return;
  double v = 0;
  if (!parse_double(it->second, v) || !(v > 0.0) || !std::isfinite(v)) {
    throw Error(Errc::kInvalidArgument, std::string(key) + ": bad value '" + it->second + "'");
  }
  out = v;
}

}  // namespace

TrainingParams TrainingParams::from(const Hyperparams& hp) {
  TrainingParams p;
  read_positive(hp, "learning_rate", p.learning_rate);
  read_uint(hp, "batch_size", p.batch_size, 1);
  read_uint(hp, "epochs", p.epochs, 1);
  read_uint(hp, "sync_every", p.sync_every, 1);
  read_uint(hp, "chunk_size", p.chunk_size, 0);
  read_uint(hp, "checkpoint_every", p.checkpoint_every, 1);
  read_uint(hp, "metric_every", p.metric_every, 1);
  read_positive(hp, "ps_learning_rate", p.ps_learning_rate);
  read_positive(hp, "moving_rate", p.moving_rate);
  read_uint(hp, "shards", p.shards, 0);
  read_uint(hp, "seed", p.seed, 0);
  read_uint(hp, "step_delay_us", p.step_delay_us, 0);
  read_uint(hp, "crash_at_iteration", p.crash_at_iteration, 0);
  if (auto it = hp.find("solver"); it != hp.end()) p.solver = ps::solver_from_string(it->second);
  if (auto it = hp.find("ordered_claims"); it != hp.end()) {
    if (it->second != "true" && it->second != "false") {
      throw Error(Errc::kInvalidArgument, "ordered_claims: expected true or false");
    }
    p.ordered_claims = it->second == "true";
  }
  if (auto it = hp.find("crash_learner"); it != hp.end()) {
    if (!parse_int64(it->second, p.crash_learner)) {
      throw Error(Errc::kInvalidArgument, "crash_learner: bad value");
    }
  }
  if (p.chunk_size != 0 && p.chunk_size < p.batch_size) {
    throw Error(Errc::kInvalidArgument, "chunk_size must be >= batch_size");
  }
  if (p.solver == ps::Solver::kEasgd && !(p.moving_rate < 1.0)) {
    throw Error(Errc::kInvalidArgument, "moving_rate must be in (0, 1)");
  }
  return p;
}

std::string LearnerConfig::to_json() const {
  nlohmann::json j{{"learner_id", learner_id},       {"learners", learners},
                   {"training_id", training_id},     {"manifest", manifest},
                   {"trainer", trainer},             {"hyperparams", hyperparams},
                   {"ps_endpoints", ps_endpoints},   {"assigned_gpus", assigned_gpus},
                   {"generation", generation}};
  if (resume_from) j["resume_from"] = *resume_from;
  return j.dump();
}

LearnerConfig LearnerConfig::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    LearnerConfig c;
    c.learner_id = j.at("learner_id").get<std::uint32_t>();
    c.learners = j.at("learners").get<std::uint32_t>();
    c.training_id = j.at("training_id").get<std::string>();
    c.manifest = j.at("manifest").get<std::string>();
    c.trainer = j.at("trainer").get<std::string>();
    c.hyperparams = j.value("hyperparams", Hyperparams{});
    c.ps_endpoints = j.value("ps_endpoints", std::vector<std::string>{});
    c.assigned_gpus = j.value("assigned_gpus", 0u);
    c.generation = j.value("generation", 0u);
    if (j.contains("resume_from")) c.resume_from = j["resume_from"].get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("learner config: ") + e.what());
  }
}

std::uint64_t learner_seed(std::uint64_t job_seed, std::uint32_t id) {
  return job_seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(id) + 1));
}

std::string format_metric_line(std::uint64_t iteration, double loss, double accuracy, double lr,
                               std::int64_t ts_ms) {
  return "ITER " + std::to_string(iteration) + " LOSS " + format_double(loss) + " ACC " +
         format_double(accuracy) + " LR " + format_double(lr) + " TS " + std::to_string(ts_ms);
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kDone: return "DONE";
    case Outcome::kFailed: return "FAILED";
    case Outcome::kHalted: return "HALTED";
    case Outcome::kCrashed: return "CRASHED";
    case Outcome::kKilled: return "KILLED";
  }
  return "?";
}

ps::JobId training_job_id(std::string_view training_id) {
  auto dash = training_id.rfind('-');
  return ps::make_job_id(dash == std::string_view::npos ? training_id
                                                        : training_id.substr(dash + 1));
}

std::string final_model_key(std::uint32_t learner) {
  return "final/learner-" + std::to_string(learner) + ".bin";
}

namespace {

struct CrashNow {};
struct HaltNow {};
struct KilledNow {};

bool is_user_error(Errc c) {
  switch (c) {
    case Errc::kInvalidArgument:
    case Errc::kUnknownFramework:
    case Errc::kDatasetMalformed:
    case Errc::kAuthFailed:
    case Errc::kNotFound:
    case Errc::kSyntaxError:
    case Errc::kSchemaError:
    case Errc::kPartitionMismatch:
      return true;
    default:
      return false;
  }
}

class Run {
 public:
  Run(const LearnerConfig& cfg, LearnerEnv& env, Watchdog& wd, LogFile& log)
      : cfg_(cfg), env_(env), wd_(wd), log_(log) {}

  Outcome go();
  // Uploads the current weights as the final model; false before any exist.
  bool upload_partial() {
    if (x_.empty()) return false;
    upload_final();
    return true;
  }

 private:
  void download();
  void resume();
  void train();
  void train_epoch();
  void run_batch(const std::vector<std::uint64_t>& idx, std::size_t from, std::size_t to);
  void sync();
  void drain();
  void maybe_checkpoint();
  void emit_metrics();
  void upload_final();
  void check_interrupts();
  net::CancelFn cancel_fn() {
    return [this] { return killed() || wd_.halt_requested(); };
  }
  bool killed() const { return env_.killed && env_.killed(); }
  bool distributed() const { return cfg_.learners >= 2; }

  const LearnerConfig& cfg_;
  LearnerEnv& env_;
  Watchdog& wd_;
  LogFile& log_;

  TrainingParams p_;
  storage::Dataset data_;
  std::unique_ptr<Trainer> trainer_;
  std::unique_ptr<ps::PsClient> ps_;
  Rng rng_{0};
  std::vector<double> x_;
  std::vector<double> grad_;
  std::vector<double> grad_acc_;
  std::vector<double> bx_, by_;
  std::uint64_t iteration_ = 0;
  std::uint32_t epoch_ = 0;
  std::uint64_t clock_ = 0;
  std::uint64_t cursor_hint_ = 0;
  std::uint64_t chunk_ = 0;
  std::uint64_t since_sync_ = 0;
  std::uint64_t ckpt_rounds_ = 1;
  bool first_metric_logged_ = false;
};

Outcome Run::go() {
  wd_.set_phase(Phase::kDownloading);
  log_.line("PHASE DOWNLOADING learner=" + std::to_string(cfg_.learner_id) +
            " incarnation=" + std::to_string(env_.incarnation));
  download();
  resume();
  wd_.set_phase(Phase::kTraining);
  log_.line("PHASE TRAINING");
  train();
  if (distributed()) {
    if (p_.solver != ps::Solver::kModelAvgBsp) {
      auto g = ps_->pull(0);
      x_ = g.weights;
    }
    ps_->leave();
  }
  wd_.set_phase(Phase::kUploading);
  log_.line("PHASE UPLOADING");
  upload_final();
  wd_.set_phase(Phase::kDone);
  log_.line("PHASE DONE iterations=" + std::to_string(iteration_));
  return Outcome::kDone;
}

void Run::download() {
  auto manifest = registry::parse_manifest(cfg_.manifest);
  p_ = TrainingParams::from(cfg_.hyperparams);
  if (!resolve_trainer(cfg_.trainer)) {
    throw Error(Errc::kUnknownFramework, "no trainer plugin named '" + cfg_.trainer + "'");
  }
  auto desc = storage::load_training_data(*env_.store, manifest, env_.work_dir);
  data_ = storage::read_local_dataset(desc.local_path);
  trainer_ = make_trainer(cfg_.trainer, data_.dim, cfg_.hyperparams);
  x_ = trainer_->init_weights(p_.seed);
  grad_.assign(x_.size(), 0.0);
  grad_acc_.assign(x_.size(), 0.0);
  rng_ = Rng(learner_seed(p_.seed, cfg_.learner_id));
  chunk_ = p_.chunk_size ? p_.chunk_size
                         : default_chunk_size(data_.samples, cfg_.learners, p_.batch_size,
                                              cfg_.assigned_gpus);
  ckpt_rounds_ = checkpoint_interval_rounds(p_.checkpoint_every, p_.sync_every);
  log_.line("dataset samples=" + std::to_string(data_.samples) + " dim=" +
            std::to_string(data_.dim) + " trainer=" + trainer_->name() +
            " weights=" + std::to_string(x_.size()) + " chunk=" + std::to_string(chunk_));
}

void Run::resume() {
  const auto shards = static_cast<std::uint32_t>(cfg_.ps_endpoints.size());
  std::optional<std::uint64_t> at = cfg_.resume_from;
  if (!at && env_.incarnation > 0) {
    at = latest_complete_checkpoint(*env_.store, cfg_.training_id, cfg_.learners, shards);
  }
  if (at) {
    auto blob = env_.store->try_get(cfg_.training_id, learner_checkpoint_key(*at, cfg_.learner_id));
    if (!blob) {
      log_.line("NO_CHECKPOINT at clock " + std::to_string(*at) + ", starting from iteration 0");
    } else {
      auto ck = Checkpoint::decode(*blob);
      if (ck.weights.size() != x_.size()) {
        throw Error(Errc::kPartitionMismatch, "checkpoint holds " +
                                                  std::to_string(ck.weights.size()) + " weights");
      }
      x_ = ck.weights;
      rng_ = Rng::from_state(ck.rng_state);
      iteration_ = ck.iteration;
      epoch_ = ck.epoch;
      clock_ = ck.clock;
      cursor_hint_ = ck.cursor_hint;
      log_.line("RESUME clock=" + std::to_string(ck.clock) + " iteration=" +
                std::to_string(ck.iteration) + " epoch=" + std::to_string(ck.epoch));
    }
  }
  if (env_.incarnation > 0 || at) {
    // A restarted learner joins whatever pass the others are in.
    epoch_ = std::max(epoch_, wd_.snapshot().epochs_done);
    const std::string cursors = "/jobs/" + cfg_.training_id + "/cursor";
    for (const auto& name : env_.coord->list_children(cursors)) {
      std::int64_t e = 0;
      if (parse_int64(name, e) && e >= 0) epoch_ = std::max(epoch_, static_cast<std::uint32_t>(e));
    }
  }
  wd_.set_epochs_done(epoch_);
  wd_.set_progress(iteration_, clock_);

  if (distributed()) {
    std::vector<net::Endpoint> eps;
    for (const auto& e : cfg_.ps_endpoints) eps.push_back(net::Endpoint::parse(e));
    ps_ = std::make_unique<ps::PsClient>(std::move(eps), training_job_id(cfg_.training_id),
                                         cfg_.learner_id, x_.size(), cancel_fn());
    ps_->join();
    auto g = ps_->pull(0);
    x_ = g.weights;
    if (p_.solver == ps::Solver::kModelAvgBsp) clock_ = g.clock;
  }
}

void Run::check_interrupts() {
  if (killed()) throw KilledNow{};
  if (wd_.halt_requested()) throw HaltNow{};
}

void Run::train() {
  while (epoch_ < p_.epochs) {
    const std::string cpath = cursor_path(cfg_.training_id, epoch_);
    while (!env_.coord->wait_exists(cpath, std::chrono::milliseconds(200), cancel_fn())) {
      check_interrupts();
    }
    train_epoch();
    if (epoch_ + 1 < p_.epochs) {
      env_.coord->create_if_absent(cursor_path(cfg_.training_id, epoch_ + 1), "0");
    }
    ++epoch_;
    wd_.set_epochs_done(epoch_);
    log_.line("EPOCH " + std::to_string(epoch_) + " done");
  }
}

void Run::train_epoch() {
  since_sync_ = 0;
  std::fill(grad_acc_.begin(), grad_acc_.end(), 0.0);
  for (;;) {
    check_interrupts();
    std::optional<SampleRange> chunk;
    if (p_.ordered_claims) {
      chunk = claim_chunk_ordered(*env_.coord, cfg_.training_id, epoch_, chunk_, data_.samples,
                                  cfg_.learner_id, cfg_.learners, cancel_fn());
    } else {
      chunk = claim_chunk(*env_.coord, cfg_.training_id, epoch_, chunk_, data_.samples);
    }
    if (!chunk) break;
    cursor_hint_ = chunk->first;
    std::vector<std::uint64_t> idx(chunk->second - chunk->first);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = chunk->first + i;
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng_.below(i)]);
    for (std::size_t from = 0; from < idx.size(); from += p_.batch_size) {
      run_batch(idx, from, std::min<std::size_t>(idx.size(), from + p_.batch_size));
    }
  }
  if (since_sync_ > 0) sync();
  if (distributed() && p_.solver == ps::Solver::kModelAvgBsp) drain();
}

void Run::run_batch(const std::vector<std::uint64_t>& idx, std::size_t from, std::size_t to) {
  check_interrupts();
  if (p_.step_delay_us) std::this_thread::sleep_for(std::chrono::microseconds(p_.step_delay_us));
  const std::size_t n = to - from, dim = data_.dim;
  bx_.resize(n * dim);
  by_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t s = idx[from + i];
    std::copy_n(data_.features.begin() + s * dim, dim, bx_.begin() + i * dim);
    by_[i] = data_.labels[s];
  }
  Batch b{bx_.data(), by_.data(), n, dim};
  trainer_->gradient(x_, b, grad_);
  for (std::size_t j = 0; j < x_.size(); ++j) x_[j] -= p_.learning_rate * grad_[j];
  if (p_.solver == ps::Solver::kPsgd) {
    for (std::size_t j = 0; j < x_.size(); ++j) grad_acc_[j] += grad_[j];
  }
  ++iteration_;
  ++since_sync_;
  if (iteration_ % p_.metric_every == 0) emit_metrics();
  wd_.set_progress(iteration_, clock_);
  if (p_.crash_at_iteration && iteration_ == p_.crash_at_iteration && env_.incarnation == 0 &&
      cfg_.generation == 0 &&
      (p_.crash_learner < 0 || p_.crash_learner == static_cast<std::int64_t>(cfg_.learner_id))) {
    throw CrashNow{};
  }
  if (since_sync_ >= p_.sync_every) sync();
}

void Run::emit_metrics() {
  const std::size_t n = std::min<std::uint64_t>(data_.samples, 1000);
  Batch eval{data_.features.data(), data_.labels.data(), n, data_.dim};
  auto m = trainer_->metrics(x_, eval);
  log_.line(format_metric_line(iteration_, m.loss, m.accuracy, p_.learning_rate, unix_ms()));
}

void Run::sync() {
  since_sync_ = 0;
  if (!distributed()) {
    ++clock_;
  } else {
    switch (p_.solver) {
      case ps::Solver::kModelAvgBsp: {
        ps_->push(clock_, x_);
        auto r = ps_->pull(clock_ + 1);
        if (r.drained) throw Error(Errc::kProtocolError, "data round reported as drained");
        x_ = std::move(r.weights);
        clock_ = r.clock;
        break;
      }
      case ps::Solver::kPsgd: {
        ps_->push(clock_, grad_acc_);
        std::fill(grad_acc_.begin(), grad_acc_.end(), 0.0);
        x_ = ps_->pull(0).weights;
        ++clock_;
        break;
      }
      case ps::Solver::kEasgd: {
        auto e = ps_->push(clock_, x_);
        for (std::size_t j = 0; j < x_.size() && j < e.size(); ++j) x_[j] -= e[j];
        ++clock_;
        break;
      }
    }
  }
  wd_.set_progress(iteration_, clock_);
  maybe_checkpoint();
}

void Run::drain() {
  for (;;) {
    check_interrupts();
    ps_->push(clock_, {});
    auto r = ps_->pull(clock_);
    if (r.drained) return;
    x_ = std::move(r.weights);
    clock_ = r.clock;
    wd_.set_progress(iteration_, clock_);
    maybe_checkpoint();
  }
}

void Run::maybe_checkpoint() {
  if (clock_ == 0 || clock_ % ckpt_rounds_ != 0) return;
  Checkpoint ck;
  ck.clock = clock_;
  ck.iteration = iteration_;
  ck.weights = x_;
  ck.rng_state = rng_.state();
  ck.epoch = epoch_;
  ck.cursor_hint = cursor_hint_;
  with_backoff(BackoffPolicy{}, [&] {
    return env_.store->put(cfg_.training_id, learner_checkpoint_key(clock_, cfg_.learner_id),
                           ck.encode());
  });
  log_.line("CHECKPOINT clock=" + std::to_string(clock_) + " iteration=" +
            std::to_string(iteration_));
}

void Run::upload_final() {
  ModelBlob m{trainer_ ? trainer_->name() : cfg_.trainer, x_};
  with_backoff(BackoffPolicy{}, [&] {
    return env_.store->put(cfg_.training_id, final_model_key(cfg_.learner_id), m.encode());
  });
}

}  // namespace

Outcome run_learner(const LearnerConfig& cfg, LearnerEnv& env) {
  LogFile log(env.log_path, env.log_prefix);
  Watchdog wd(*env.coord, cfg.training_id, env.task_id, cfg.learner_id, env.incarnation,
              env.status_period, cfg.generation);
  wd.start();
  Run run(cfg, env, wd, log);
  auto halt = [&](const char* why) {
    log.line(std::string("HALT ") + why);
    try {
      if (run.upload_partial()) log.line("HALT partial model uploaded");
    } catch (const std::exception& e) {
      log.line(std::string("HALT upload failed: ") + e.what());
    }
    wd.set_halted();
    wd.set_phase(Phase::kDone, "halted");
    wd.finish();
    return Outcome::kHalted;
  };
  try {
    Outcome o = run.go();
    wd.finish();
    return o;
  } catch (const CrashNow&) {
    log.line("CRASH injected");
    wd.die();
    return Outcome::kCrashed;
  } catch (const KilledNow&) {
    wd.die();
    return Outcome::kKilled;
  } catch (const HaltNow&) {
    return halt("requested");
  } catch (const Error& e) {
    if (env.killed && env.killed()) {
      wd.die();
      return Outcome::kKilled;
    }
    if (wd.halt_requested()) return halt("requested");
    if (is_user_error(e.code())) {
      log.line(std::string("JOB_FAILED: ") + e.what());
      wd.set_phase(Phase::kJobFailed, e.what());
      wd.finish();
      return Outcome::kFailed;
    }
    log.line(std::string("learner error: ") + e.what());
    spdlog::warn("learner {} of {} crashed: {}", cfg.learner_id, cfg.training_id, e.what());
    wd.die();
    return Outcome::kCrashed;
  } catch (const std::exception& e) {
    log.line(std::string("learner error: ") + e.what());
    wd.die();
    return Outcome::kCrashed;
  }
}

}  // namespace dlaas::learner
