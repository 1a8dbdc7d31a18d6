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

#include "dlaas/ps/scheduler.hpp"

#include <bit>
#include <chrono>
#include <cmath>

#include <boost/lockfree/queue.hpp>

namespace dlaas::ps {

std::size_t pick_queue(std::span<const double> backlog, std::span<const double> speed,
                       double estimate) {
  std::size_t best = 0;
  double best_cost = 0.0;
  for (std::size_t i = 0; i < backlog.size(); ++i) {
    double s = i < speed.size() && speed[i] > 0.0 ? speed[i] : 1.0;
    double cost = backlog[i] + estimate / s;
    if (i == 0 || cost < best_cost) {
      best = i;
      best_cost = cost;
    }
  }
  return best;
}

int DurationEstimator::bucket(std::size_t size) {
  return size == 0 ? 0 : static_cast<int>(std::bit_width(size));
}

double DurationEstimator::estimate_ms(std::size_t size) const {
  std::lock_guard lock(mu_);
  auto it = ema_.find(bucket(size));
  return it == ema_.end() ? prior_ms_ : it->second;
}

void DurationEstimator::record(std::size_t size, double ms) {
  std::lock_guard lock(mu_);
  auto [it, fresh] = ema_.try_emplace(bucket(size), ms);
  if (!fresh) it->second = weight_ * ms + (1.0 - weight_) * it->second;
}

struct AggregationScheduler::Task {
  std::function<void()> fn;
  std::size_t size = 0;
  std::int64_t charged_us = 0;
};

struct AggregationScheduler::Queue {
  boost::lockfree::queue<Task*> tasks{64};
  std::atomic<std::uint32_t> seq{0};
  std::atomic<std::int64_t> backlog_us{0};
  std::atomic<std::uint64_t> done{0};
  std::thread thread;
};

AggregationScheduler::AggregationScheduler(std::size_t queues, std::vector<double> speed)
    : speed_(std::move(speed)) {
  if (queues == 0) queues = 1;
  speed_.resize(queues, 1.0);
  for (std::size_t i = 0; i < queues; ++i) queues_.push_back(std::make_unique<Queue>());
  for (auto& q : queues_) q->thread = std::thread([this, qp = q.get()] { worker(*qp); });
}

AggregationScheduler::~AggregationScheduler() { stop(); }

void AggregationScheduler::stop() {
  if (stopping_.exchange(true)) return;
  for (auto& q : queues_) {
    q->seq.fetch_add(1);
    q->seq.notify_all();
  }
  for (auto& q : queues_) {
    if (q->thread.joinable()) q->thread.join();
    Task* t = nullptr;
    while (q->tasks.pop(t)) delete t;
  }
}

std::size_t AggregationScheduler::submit(std::size_t size, std::function<void()> fn) {
  std::vector<double> backlog(queues_.size());
  for (std::size_t i = 0; i < queues_.size(); ++i) {
    backlog[i] = static_cast<double>(queues_[i]->backlog_us.load()) / 1000.0;
  }
  const double est = estimator_.estimate_ms(size);
  const std::size_t idx = pick_queue(backlog, speed_, est);
  auto* t = new Task{std::move(fn), size, static_cast<std::int64_t>(est / speed_[idx] * 1000.0)};
  Queue& q = *queues_[idx];
  q.backlog_us.fetch_add(t->charged_us);
  q.tasks.push(t);
  q.seq.fetch_add(1);
  q.seq.notify_one();
  return idx;
}

void AggregationScheduler::worker(Queue& q) {
  for (;;) {
    const std::uint32_t seen = q.seq.load();
    Task* t = nullptr;
    if (!q.tasks.pop(t)) {
      if (stopping_.load()) return;
      q.seq.wait(seen);
      continue;
    }
    auto start = std::chrono::steady_clock::now();
    t->fn();
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
    estimator_.record(t->size, ms);
    q.backlog_us.fetch_sub(t->charged_us);
    q.done.fetch_add(1);
    delete t;
  }
}

std::uint64_t AggregationScheduler::completed(std::size_t queue) const {
  return queues_.at(queue)->done.load();
}

double AggregationScheduler::backlog_ms(std::size_t queue) const {
  return static_cast<double>(queues_.at(queue)->backlog_us.load()) / 1000.0;
}

}  // namespace dlaas::ps
