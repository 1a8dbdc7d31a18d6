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

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <thread>

#include "dlaas/lcm/stack.hpp"
#include "dlaas/learner/checkpoint.hpp"
#include "dlaas/registry/manifest.hpp"
#include "dlaas/storage/dataset.hpp"
#include "temp_dir.hpp"

namespace dlaas::testing {

inline std::vector<cluster::NodeSpec> cpu_nodes(int n, std::int64_t cpus = 8) {
  std::vector<cluster::NodeSpec> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({"node-" + std::to_string(i), {cpus, 0, 65536}, true});
  }
  return out;
}

inline lcm::StackOptions fast_stack_options(const std::filesystem::path& dir,
                                            std::vector<cluster::NodeSpec> nodes) {
  lcm::StackOptions o;
  o.data_dir = dir;
  o.nodes = std::move(nodes);
  o.coord.default_ttl = std::chrono::milliseconds(400);
  o.session_ttl = std::chrono::milliseconds(400);
  o.status_period = std::chrono::milliseconds(50);
  o.lcm.tick = std::chrono::milliseconds(50);
  o.lcm.liveness_grace = std::chrono::milliseconds(1500);
  o.lcm.backoff.base = std::chrono::milliseconds(5);
  return o;
}

// A stack in a temp dir plus helpers to register datasets and models.
class StackFixture {
 public:
  explicit StackFixture(std::vector<cluster::NodeSpec> nodes = cpu_nodes(2))
      : stack(fast_stack_options(dir.path(), std::move(nodes))) {}
  explicit StackFixture(const std::function<void(lcm::StackOptions&)>& tweak,
                        std::vector<cluster::NodeSpec> nodes = cpu_nodes(2))
      : stack([&] {
          auto o = fast_stack_options(dir.path(), std::move(nodes));
          tweak(o);
          return o;
        }()) {}

  TempDir dir;
  lcm::Stack stack;

  void put_dataset(const std::string& container, const storage::Dataset& d) {
    stack.objects().put(container, storage::kDatasetKey, d.encode());
  }

  static registry::ModelManifest manifest(const std::string& framework,
                                          const std::string& train_container,
                                          std::int64_t learners = 1, std::int64_t gpus = 0) {
    registry::ModelManifest m;
    m.name = "test-model";
    m.version = "1.0";
    m.learners = learners;
    m.gpus = gpus;
    m.memory_mib = 512;
    registry::DataStore ds;
    ds.id = "local";
    ds.type = "local";
    ds.training_container = train_container;
    ds.results_container = "results";
    ds.connection = registry::StoreCredentials{"https://auth.local/v1", "user", "secret"};
    m.data_stores.push_back(ds);
    m.framework.name = framework;
    m.framework.version = "1";
    m.framework.job = "solver.txt";
    return m;
  }

  std::string add_model(const registry::ModelManifest& m,
                        const std::map<std::string, std::string>& definition) {
    std::string text;
    for (const auto& [k, v] : definition) text += k + ": " + v + "\n";
    return stack.registry().create_model(
        m, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  lcm::TrainingJob wait_for(const std::string& tid,
                            const std::function<bool(const lcm::TrainingJob&)>& pred,
                            std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto j = stack.lcm().get_job(tid);
      if (pred(j) || std::chrono::steady_clock::now() >= deadline) return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  lcm::TrainingJob wait_terminal(const std::string& tid,
                                 std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
    return wait_for(tid, [](const lcm::TrainingJob& j) { return lcm::is_terminal(j.state); },
                    timeout);
  }

  std::vector<double> result_weights(const std::string& tid) {
    auto blob = stack.objects().get("results", tid + "/model.bin");
    return learner::ModelBlob::decode(blob).weights;
  }
};

}  // namespace dlaas::testing
