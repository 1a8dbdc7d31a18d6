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
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <unordered_map>
#include <vector>

namespace dlaas::ps {

// Cost rule: argmin over i of backlog[i] + estimate / speed[i]. Ties go to
// the lower index. Units are whatever the caller uses consistently (ms).
std::size_t pick_queue(std::span<const double> backlog, std::span<const double> speed,
                       double estimate);

// Moving average of aggregation durations, bucketed by floor(log2(size)).
class DurationEstimator {
 public:
  explicit DurationEstimator(double weight = 0.2, double prior_ms = 0.05)
      : weight_(weight), prior_ms_(prior_ms) {}

  double estimate_ms(std::size_t size) const;
  void record(std::size_t size, double ms);

 private:
  static int bucket(std::size_t size);
  double weight_;
  double prior_ms_;
  mutable std::mutex mu_;
  std::unordered_map<int, double> ema_;
};

// Two (by default) worker queues standing in for the CPU/GPU aggregation
// pair. submit() only touches lock-free structures, so network receive
// threads never block on it.
class AggregationScheduler {
 public:
  explicit AggregationScheduler(std::size_t queues = 2, std::vector<double> speed = {});
  ~AggregationScheduler();
  AggregationScheduler(const AggregationScheduler&) = delete;
  AggregationScheduler& operator=(const AggregationScheduler&) = delete;

  // Returns the queue index chosen.
  std::size_t submit(std::size_t size, std::function<void()> fn);
  void stop();

  std::size_t queue_count() const { return queues_.size(); }
  std::uint64_t completed(std::size_t queue) const;
  double backlog_ms(std::size_t queue) const;
  DurationEstimator& estimator() { return estimator_; }

 private:
  struct Task;
  struct Queue;
  void worker(Queue& q);

  std::vector<double> speed_;
  std::vector<std::unique_ptr<Queue>> queues_;
  DurationEstimator estimator_;
  std::atomic<bool> stopping_{false};
};

}  // namespace dlaas::ps
