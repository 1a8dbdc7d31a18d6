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

#include "dlaas/learner/status.hpp"

#include <nlohmann/json.hpp>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::learner {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kNotStarted: return "NOT_STARTED";
    case Phase::kDownloading: return "DOWNLOADING";
    case Phase::kTraining: return "TRAINING";
    case Phase::kUploading: return "UPLOADING";
    case Phase::kDone: return "DONE";
    case Phase::kJobFailed: return "JOB_FAILED";
  }
  return "?";
}

Phase phase_from_string(std::string_view s) {
  for (Phase p : {Phase::kNotStarted, Phase::kDownloading, Phase::kTraining, Phase::kUploading,
                  Phase::kDone, Phase::kJobFailed}) {
    if (to_string(p) == s) return p;
  }
  throw Error(Errc::kInvalidArgument, "unknown phase: " + std::string(s));
}

bool is_terminal(Phase p) { return p == Phase::kDone || p == Phase::kJobFailed; }

std::string LearnerStatus::to_json() const {
  nlohmann::json j{{"learner_id", learner_id},   {"phase", std::string(to_string(phase))},
                   {"iteration", iteration},     {"epochs_done", epochs_done},
                   {"clock", clock},             {"incarnation", incarnation},
                   {"generation", generation},
                   {"halted", halted},           {"updated_ms", updated_ms},
                   {"message", message}};
  return j.dump();
}

LearnerStatus LearnerStatus::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    LearnerStatus s;
    s.learner_id = j.value("learner_id", 0u);
    s.phase = phase_from_string(j.value("phase", std::string("NOT_STARTED")));
    s.iteration = j.value("iteration", std::uint64_t{0});
    s.epochs_done = j.value("epochs_done", 0u);
    s.clock = j.value("clock", std::uint64_t{0});
    s.incarnation = j.value("incarnation", 0u);
    s.generation = j.value("generation", 0u);
    s.halted = j.value("halted", false);
    s.updated_ms = j.value("updated_ms", std::int64_t{0});
    s.message = j.value("message", std::string());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("learner status: ") + e.what());
  }
}

std::string learner_status_path(const std::string& tid, std::uint32_t learner) {
  return "/jobs/" + tid + "/learners/" + std::to_string(learner) + "/status";
}

std::string live_path(const std::string& tid, const std::string& task_id) {
  return "/jobs/" + tid + "/live/" + task_id;
}

std::string control_path(const std::string& tid) { return "/jobs/" + tid + "/control"; }

void ensure_job_tree(coord::Client& coord, const std::string& tid, std::uint32_t learners) {
  const std::string root = "/jobs/" + tid;
  coord.ensure_path(root + "/live");
  coord.ensure_path(root + "/cursor");
  coord.create_if_absent(control_path(tid), "");
  for (std::uint32_t i = 0; i < learners; ++i) {
    coord.ensure_path(root + "/learners/" + std::to_string(i));
  }
}

Watchdog::Watchdog(coord::Client& coord, std::string training_id, std::string task_id,
                   std::uint32_t learner_id, std::uint32_t incarnation,
                   std::chrono::milliseconds period, std::uint32_t generation)
    : coord_(coord), tid_(std::move(training_id)), task_id_(std::move(task_id)), period_(period) {
  status_.learner_id = learner_id;
  status_.incarnation = incarnation;
  status_.generation = generation;
  // Carry progress counters over from a previous incarnation so the status
  // never regresses.
  try {
    if (auto prev = coord_.try_read(learner_status_path(tid_, learner_id)); prev && !prev->first.empty()) {
      auto old = LearnerStatus::from_json(prev->first);
      if (old.generation == generation) {
        status_.epochs_done = old.epochs_done;
        status_.iteration = old.iteration;
      }
    }
  } catch (const Error&) {
  }
}

Watchdog::~Watchdog() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void Watchdog::start() {
  tick(true);
  thread_ = std::thread([this] { loop(); });
}

void Watchdog::set_phase(Phase p, std::string message) {
  std::lock_guard lock(mu_);
  status_.phase = p;
  if (!message.empty()) status_.message = std::move(message);
}

void Watchdog::set_progress(std::uint64_t iteration, std::uint64_t clock) {
  std::lock_guard lock(mu_);
  status_.iteration = iteration;
  status_.clock = clock;
}

void Watchdog::set_epochs_done(std::uint32_t n) {
  std::lock_guard lock(mu_);
  status_.epochs_done = n;
}

void Watchdog::set_halted() {
  std::lock_guard lock(mu_);
  status_.halted = true;
}

LearnerStatus Watchdog::snapshot() const {
  std::lock_guard lock(mu_);
  return status_;
}

void Watchdog::loop() {
  while (!stop_.load()) {
    auto next = std::chrono::steady_clock::now() + period_;
    tick(false);
    while (!stop_.load() && std::chrono::steady_clock::now() < next) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
}

void Watchdog::tick(bool force) {
  try {
    coord_.heartbeat();
    if (!live_.load()) {
      try {
        coord_.create(live_path(tid_, task_id_), std::to_string(status_.incarnation),
                      coord::NodeMode::kEphemeral);
        live_ = true;
      } catch (const Error& e) {
        // The previous incarnation's node lingers until its session expires.
        if (e.code() != Errc::kAlreadyExists) throw;
      }
    }
    if (auto ctl = coord_.try_read(control_path(tid_)); ctl && ctl->first == "HALT") {
      halt_ = true;
    }
    std::string text;
    {
      std::lock_guard lock(mu_);
      LearnerStatus s = status_;
      s.updated_ms = 0;
      text = s.to_json();
    }
    const auto now = unix_ms();
    if (force || text != last_written_ || now - last_write_ms_ >= 1000) {
      std::string stamped;
      {
        std::lock_guard lock(mu_);
        status_.updated_ms = now;
        stamped = status_.to_json();
      }
      coord_.put(learner_status_path(tid_, status_.learner_id), stamped);
      last_written_ = text;
      last_write_ms_ = now;
    }
  } catch (const Error&) {
    // Best effort; a dead store shows up as an expired session.
  }
}

void Watchdog::finish() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
  tick(true);
}

void Watchdog::die() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

}  // namespace dlaas::learner
