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

#include "dlaas/lcm/job.hpp"

#include <nlohmann/json.hpp>

#include "dlaas/common/error.hpp"

namespace dlaas::lcm {

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::kPending: return "PENDING";
    case JobState::kDeploying: return "DEPLOYING";
    case JobState::kRunning: return "RUNNING";
    case JobState::kCompleted: return "COMPLETED";
    case JobState::kFailed: return "FAILED";
    case JobState::kHalted: return "HALTED";
  }
  return "?";
}

JobState job_state_from_string(std::string_view s) {
  for (JobState j : {JobState::kPending, JobState::kDeploying, JobState::kRunning,
                     JobState::kCompleted, JobState::kFailed, JobState::kHalted}) {
    if (to_string(j) == s) return j;
  }
  throw Error(Errc::kInvalidArgument, "unknown job state: " + std::string(s));
}

bool legal_transition(JobState from, JobState to) {
  switch (from) {
    case JobState::kPending: return to == JobState::kDeploying;
    case JobState::kDeploying: return to == JobState::kRunning || to == JobState::kFailed;
    case JobState::kRunning:
      return to == JobState::kCompleted || to == JobState::kFailed || to == JobState::kHalted ||
             to == JobState::kDeploying;
    default: return false;
  }
}

std::string_view to_string(JobEvent e) {
  switch (e) {
    case JobEvent::kAdmitted: return "admitted";
    case JobEvent::kDeployed: return "deployed";
    case JobEvent::kDeployFailed: return "deploy-failed";
    case JobEvent::kAllDone: return "all-done";
    case JobEvent::kLearnerFailed: return "learner-failed";
    case JobEvent::kFault: return "fault";
    case JobEvent::kBudgetExhausted: return "budget-exhausted";
    case JobEvent::kHaltComplete: return "halt-complete";
  }
  return "?";
}

JobState next_state(JobState s, JobEvent e) {
  switch (s) {
    case JobState::kPending:
      return e == JobEvent::kAdmitted ? JobState::kDeploying : s;
    case JobState::kDeploying:
      if (e == JobEvent::kDeployed) return JobState::kRunning;
      if (e == JobEvent::kDeployFailed || e == JobEvent::kBudgetExhausted) return JobState::kFailed;
      return s;
    case JobState::kRunning:
      switch (e) {
        case JobEvent::kAllDone: return JobState::kCompleted;
        case JobEvent::kLearnerFailed:
        case JobEvent::kBudgetExhausted: return JobState::kFailed;
        case JobEvent::kFault: return JobState::kDeploying;
        case JobEvent::kHaltComplete: return JobState::kHalted;
        default: return s;
      }
    default:
      return s;
  }
}

std::string TrainingJob::to_json() const {
  nlohmann::json j{{"training_id", training_id},
                   {"model_id", model_id},
                   {"state", std::string(to_string(state))},
                   {"learners", learners},
                   {"gpus", gpus},
                   {"memory_mib", memory_mib},
                   {"trainer", trainer},
                   {"hyperparams", hyperparams},
                   {"manifest", manifest},
                   {"shards", shards},
                   {"model_size", model_size},
                   {"dim", dim},
                   {"ps_endpoints", ps_endpoints},
                   {"deploy_error", deploy_error},
                   {"generation", generation},
                   {"prepared", prepared},
                   {"halt_requested", halt_requested},
                   {"halt_at_ms", halt_at_ms},
                   {"created_at", created_at},
                   {"updated_at", updated_at},
                   {"completed_at", completed_at},
                   {"message", message},
                   {"results", results}};
  j["resume_from"] = resume_from ? nlohmann::json(*resume_from) : nlohmann::json(nullptr);
  return j.dump();
}

TrainingJob TrainingJob::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    TrainingJob t;
    t.training_id = j.at("training_id").get<std::string>();
    t.model_id = j.value("model_id", std::string());
    t.state = job_state_from_string(j.at("state").get<std::string>());
    t.learners = j.value("learners", std::int64_t{1});
    t.gpus = j.value("gpus", std::int64_t{0});
    t.memory_mib = j.value("memory_mib", std::int64_t{1024});
    t.trainer = j.value("trainer", std::string());
    t.hyperparams = j.value("hyperparams", std::map<std::string, std::string>{});
    t.manifest = j.value("manifest", std::string());
    t.shards = j.value("shards", 0u);
    t.model_size = j.value("model_size", std::uint64_t{0});
    t.dim = j.value("dim", 0u);
    t.ps_endpoints = j.value("ps_endpoints", std::vector<std::string>{});
    t.deploy_error = j.value("deploy_error", std::string());
    t.generation = j.value("generation", 0u);
    t.prepared = j.value("prepared", false);
    t.halt_requested = j.value("halt_requested", false);
    t.halt_at_ms = j.value("halt_at_ms", std::int64_t{0});
    t.created_at = j.value("created_at", std::int64_t{0});
    t.updated_at = j.value("updated_at", std::int64_t{0});
    t.completed_at = j.value("completed_at", std::int64_t{0});
    t.message = j.value("message", std::string());
    t.results = j.value("results", std::vector<std::string>{});
    if (j.contains("resume_from") && !j["resume_from"].is_null()) {
      t.resume_from = j["resume_from"].get<std::uint64_t>();
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInternal, std::string("job record: ") + e.what());
  }
}

std::string job_root(const std::string& tid) { return "/jobs/" + tid; }
std::string job_record_path(const std::string& tid) { return job_root(tid) + "/status"; }
std::string ps_endpoint_path(const std::string& tid, std::uint32_t shard) {
  return job_root(tid) + "/ps/" + std::to_string(shard) + "/endpoint";
}
std::string learner_task_id(const std::string& tid, std::uint32_t learner, std::uint32_t gen) {
  return tid + "-learner-" + std::to_string(learner) + "-g" + std::to_string(gen);
}
std::string ps_task_id(const std::string& tid, std::uint32_t shard, std::uint32_t gen) {
  return tid + "-ps-" + std::to_string(shard) + "-g" + std::to_string(gen);
}

}  // namespace dlaas::lcm
