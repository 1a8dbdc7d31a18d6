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
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "dlaas/coord/client.hpp"

namespace dlaas::learner {

enum class Phase { kNotStarted, kDownloading, kTraining, kUploading, kDone, kJobFailed };

std::string_view to_string(Phase p);
// INVALID_ARGUMENT for unknown names.
Phase phase_from_string(std::string_view s);
bool is_terminal(Phase p);

// What a watchdog mirrors into /jobs/<tid>/learners/<lid>/status (JSON).
struct LearnerStatus {
  std::uint32_t learner_id = 0;
  Phase phase = Phase::kNotStarted;
  std::uint64_t iteration = 0;
  std::uint32_t epochs_done = 0;
  std::uint64_t clock = 0;
  std::uint32_t incarnation = 0;
  std::uint32_t generation = 0;
  bool halted = false;
  std::int64_t updated_ms = 0;
  std::string message;

  std::string to_json() const;
  // Throws INVALID_ARGUMENT on malformed text.
  static LearnerStatus from_json(std::string_view text);
  bool operator==(const LearnerStatus&) const = default;
};

std::string learner_status_path(const std::string& tid, std::uint32_t learner);
std::string live_path(const std::string& tid, const std::string& task_id);
std::string control_path(const std::string& tid);
// Creates /jobs/<tid>/{live,cursor,control,learners/<i>} for i < learners.
void ensure_job_tree(coord::Client& coord, const std::string& tid, std::uint32_t learners);

// Sidecar beside a learner. Owns the ephemeral live node and the session
// heartbeat, mirrors the shared status cell into the status znode at least
// every `period`, and watches the job control node for HALT. Progress is
// carried over from a status of the same generation only.
class Watchdog {
 public:
  Watchdog(coord::Client& coord, std::string training_id, std::string task_id,
           std::uint32_t learner_id, std::uint32_t incarnation,
           std::chrono::milliseconds period = std::chrono::milliseconds(200),
           std::uint32_t generation = 0);
  ~Watchdog();
  Watchdog(const Watchdog&) = delete;
  Watchdog& operator=(const Watchdog&) = delete;

  void start();

  void set_phase(Phase p, std::string message = {});
  void set_progress(std::uint64_t iteration, std::uint64_t clock);
  void set_epochs_done(std::uint32_t n);
  void set_halted();
  LearnerStatus snapshot() const;

  bool halt_requested() const { return halt_.load(); }
  // True once the live node has been created in this incarnation.
  bool live() const { return live_.load(); }

  // Writes the final status synchronously and stops the thread.
  void finish();
  // Stops without writing anything, as if the process died.
  void die();

 private:
  void loop();
  void tick(bool force);

  coord::Client& coord_;
  std::string tid_;
  std::string task_id_;
  std::chrono::milliseconds period_;

  mutable std::mutex mu_;
  LearnerStatus status_;
  std::string last_written_;
  std::int64_t last_write_ms_ = 0;

  std::atomic<bool> halt_{false};
  std::atomic<bool> live_{false};
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace dlaas::learner
