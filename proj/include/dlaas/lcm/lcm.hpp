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
#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dlaas/cluster/cluster.hpp"
#include "dlaas/common/retry.hpp"
#include "dlaas/coord/client.hpp"
#include "dlaas/lcm/job.hpp"
#include "dlaas/learner/status.hpp"
#include "dlaas/registry/registry.hpp"
#include "dlaas/storage/object_store.hpp"

namespace dlaas::lcm {

struct LcmOptions {
  std::chrono::milliseconds tick{500};
  // A freshly (re)started learner counts as alive this long before its
  // live node has to show up.
  std::chrono::milliseconds liveness_grace{5000};
  std::uint32_t recovery_budget = 3;
  std::uint32_t learner_max_restarts = 3;
  std::uint32_t ps_max_restarts = 0;
  std::chrono::milliseconds halt_timeout{10000};
  cluster::Resources ps_demand{1, 0, 512};
  std::filesystem::path log_root;
  BackoffPolicy backoff{};
};

// Lifecycle manager. Keeps nothing about a job in memory: every step reads
// the record at /jobs/<tid>/status, acts, and writes it back with a CAS, so
// a fresh instance picks up where a dead one stopped.
class Lcm {
 public:
  Lcm(coord::Client& coord, cluster::Cluster& cluster, storage::ObjectStore& objects,
      registry::Registry& registry, LcmOptions opts);
  ~Lcm();
  Lcm(const Lcm&) = delete;
  Lcm& operator=(const Lcm&) = delete;

  // MODEL_NOT_FOUND, INVALID_OVERRIDE.
  std::string submit(const std::string& model_id, const Overrides& overrides = {});
  // NOT_FOUND.
  TrainingJob get_job(const std::string& training_id);
  std::vector<TrainingJob> list_jobs();
  // Statuses of the current generation, by learner id.
  std::vector<learner::LearnerStatus> learner_statuses(const std::string& training_id);
  // NOT_FOUND; INVALID_STATE unless RUNNING.
  void halt(const std::string& training_id);
  // NOT_FOUND; INVALID_STATE unless terminal. Results stay in the store.
  void delete_job(const std::string& training_id);
  bool model_in_use(const std::string& model_id);
  std::filesystem::path log_path(const std::string& training_id) const;

  // One pass over every live job. The background loop calls this; tests
  // may drive it by hand.
  void tick();
  void start();
  void stop();
  // Wakes the loop early.
  void kick();

 private:
  struct Loaded {
    TrainingJob job;
    std::int64_t version = 0;
  };
  std::optional<Loaded> load(const std::string& tid);
  // CAS write; false when someone else wrote first.
  bool save(const Loaded& l, const TrainingJob& next);
  // Returns true when the record changed.
  bool step(const std::string& tid);
  bool step_pending(Loaded& l);
  bool step_deploying(Loaded& l);
  bool step_running(Loaded& l);
  bool transition(Loaded& l, TrainingJob next, JobEvent e, const std::string& why);

  void size_parameter_server(TrainingJob& job);
  std::vector<cluster::Resources> demands(const TrainingJob& job) const;
  void kill_tasks(const std::string& tid);
  void prepare_tree(const TrainingJob& job);
  void finalize(TrainingJob& job);
  std::optional<std::vector<double>> final_weights(const TrainingJob& job);
  void lcm_log(const std::string& tid, const std::string& text);
  void remove_tree(const std::string& path);
  void loop();

  coord::Client& coord_;
  cluster::Cluster& cluster_;
  storage::ObjectStore& objects_;
  registry::Registry& registry_;
  LcmOptions opts_;

  std::mutex tick_mu_;
  std::mutex wake_mu_;
  std::condition_variable wake_;
  bool kicked_ = false;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace dlaas::lcm
