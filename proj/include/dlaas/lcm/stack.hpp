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

#include <filesystem>
#include <memory>
#include <mutex>
#include <vector>

#include "dlaas/cluster/cluster.hpp"
#include "dlaas/coord/client.hpp"
#include "dlaas/coord/store.hpp"
#include "dlaas/lcm/lcm.hpp"
#include "dlaas/lcm/tasks.hpp"
#include "dlaas/registry/registry.hpp"
#include "dlaas/storage/object_store.hpp"

namespace dlaas::lcm {

struct StackOptions {
  std::filesystem::path data_dir;  // objects/, logs/, work/ go under here
  std::vector<cluster::NodeSpec> nodes;
  coord::StoreOptions coord;
  LcmOptions lcm;  // log_root is filled in from data_dir
  std::chrono::milliseconds session_ttl{2000};
  std::chrono::milliseconds status_period{200};
  bool start_lcm = true;
};

// One local platform: coordination store, object store, model registry,
// simulated cluster running tasks in-process, and the LCM.
class Stack {
 public:
  explicit Stack(StackOptions opts);
  ~Stack();
  Stack(const Stack&) = delete;
  Stack& operator=(const Stack&) = delete;

  coord::Store& coord_store() { return *store_; }
  // A session of its own for tools and tests.
  coord::Client& coord() { return *admin_session_; }
  storage::FsObjectStore& objects() { return *objects_; }
  registry::Registry& registry() { return *registry_; }
  cluster::Cluster& cluster() { return *cluster_; }
  // INVALID_STATE while the LCM is down.
  Lcm& lcm();
  // Null while the LCM is down. Throws nothing.
  std::shared_ptr<Lcm> lcm_shared() const;
  const StackOptions& options() const { return opts_; }

  // Destroys the LCM and its session and builds a fresh one over the same
  // stores, as a crashed and restarted service would be.
  void restart_lcm();
  // Stops the LCM without replacing it.
  void kill_lcm();
  void start_lcm();

 private:
  StackOptions opts_;
  std::unique_ptr<coord::Store> store_;
  std::unique_ptr<storage::FsObjectStore> objects_;
  std::unique_ptr<registry::Registry> registry_;
  std::unique_ptr<TaskRuntime> runtime_;
  std::unique_ptr<cluster::Cluster> cluster_;
  std::shared_ptr<Lcm> make_lcm();

  std::unique_ptr<coord::LocalClient> admin_session_;
  mutable std::mutex lcm_mu_;
  std::shared_ptr<Lcm> lcm_;  // owns its coordination session
};

}  // namespace dlaas::lcm
