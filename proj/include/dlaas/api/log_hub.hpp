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
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dlaas/common/blocking_queue.hpp"

namespace dlaas::api {

using LineQueue = BlockingQueue<std::string>;

// Per-job broadcast of a job log. One tailing thread per job reads appended
// lines and fans them out; a new subscriber first gets every line seen so
// far. Queues are closed once the job is terminal and the file is drained.
class LogHub {
 public:
  struct JobInfo {
    std::filesystem::path log_path;
    bool terminal = false;
  };
  // nullopt when the job does not exist.
  using Lookup = std::function<std::optional<JobInfo>(const std::string& training_id)>;

  explicit LogHub(Lookup lookup,
                  std::chrono::milliseconds poll = std::chrono::milliseconds(50));
  ~LogHub();
  LogHub(const LogHub&) = delete;
  LogHub& operator=(const LogHub&) = delete;

  // NOT_FOUND for an unknown job.
  std::shared_ptr<LineQueue> subscribe(const std::string& training_id);
  void unsubscribe(const std::string& training_id, const std::shared_ptr<LineQueue>& q);
  // Closes every subscription and joins the tailers.
  void stop();

 private:
  struct Channel {
    std::vector<std::string> lines;
    std::vector<std::shared_ptr<LineQueue>> subs;
    bool done = false;
    std::thread thread;
  };
  void tail(const std::string& tid, std::shared_ptr<Channel> ch);

  Lookup lookup_;
  std::chrono::milliseconds poll_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Channel>> channels_;
  std::vector<std::thread> finished_;
  bool stopping_ = false;
};

}  // namespace dlaas::api
