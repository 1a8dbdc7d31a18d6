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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dlaas::lcm {

enum class JobState { kPending, kDeploying, kRunning, kCompleted, kFailed, kHalted };

std::string_view to_string(JobState s);
JobState job_state_from_string(std::string_view s);
inline bool is_terminal(JobState s) {
  return s == JobState::kCompleted || s == JobState::kFailed || s == JobState::kHalted;
}

// Allowed edges: PENDING->DEPLOYING, DEPLOYING->{RUNNING, FAILED},
// RUNNING->{COMPLETED, FAILED, HALTED, DEPLOYING}. Terminal states absorb.
bool legal_transition(JobState from, JobState to);

// Everything that can move a job. The LCM only changes state through
// next_state(), so the transition table is the whole state machine.
enum class JobEvent {
  kAdmitted,          // resources for the whole job are free
  kDeployed,          // PS running (if any) and every learner launched
  kDeployFailed,      // trainer or dataset could not be resolved
  kAllDone,           // every learner status is DONE
  kLearnerFailed,     // some learner reported JOB_FAILED
  kFault,             // too few live learners or a lost PS; budget left
  kBudgetExhausted,   // a fault with no recoveries left
  kHaltComplete,      // learners stopped after a halt request
};
std::string_view to_string(JobEvent e);
inline constexpr JobEvent kAllJobEvents[] = {
    JobEvent::kAdmitted,      JobEvent::kDeployed,       JobEvent::kDeployFailed,
    JobEvent::kAllDone,       JobEvent::kLearnerFailed,  JobEvent::kFault,
    JobEvent::kBudgetExhausted, JobEvent::kHaltComplete};

// State after `e`; events that do not apply leave the state unchanged.
JobState next_state(JobState s, JobEvent e);

struct Overrides {
  std::optional<std::int64_t> learners;
  std::optional<std::int64_t> gpus;
  std::optional<std::int64_t> memory_mib;
};

// The whole job record, stored as JSON at /jobs/<tid>/status. Nothing else
// about a job lives in LCM memory.
struct TrainingJob {
  std::string training_id;
  std::string model_id;
  JobState state = JobState::kPending;
  std::int64_t learners = 1;
  std::int64_t gpus = 0;
  std::int64_t memory_mib = 1024;
  std::string trainer;
  std::map<std::string, std::string> hyperparams;
  std::string manifest;  // canonical text
  std::uint32_t shards = 0;
  std::uint64_t model_size = 0;
  std::uint32_t dim = 0;
  std::vector<std::string> ps_endpoints;
  std::string deploy_error;  // why the PS could not be sized, if it could not
  std::uint32_t generation = 0;  // full recoveries so far
  bool prepared = false;         // coord tree reset for this generation
  std::optional<std::uint64_t> resume_from;
  bool halt_requested = false;
  std::int64_t halt_at_ms = 0;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
  std::int64_t completed_at = 0;
  std::string message;
  std::vector<std::string> results;

  std::string to_json() const;
  static TrainingJob from_json(std::string_view text);
};

std::string job_root(const std::string& tid);
std::string job_record_path(const std::string& tid);
std::string ps_endpoint_path(const std::string& tid, std::uint32_t shard);
std::string learner_task_id(const std::string& tid, std::uint32_t learner, std::uint32_t gen);
std::string ps_task_id(const std::string& tid, std::uint32_t shard, std::uint32_t gen);

}  // namespace dlaas::lcm
