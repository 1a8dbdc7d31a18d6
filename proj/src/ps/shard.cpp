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

#include "dlaas/ps/shard.hpp"

#include <chrono>
#include <future>

#include "dlaas/common/error.hpp"

namespace dlaas::ps {

std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::kPsgd: return "psgd";
    case Solver::kModelAvgBsp: return "model_avg_bsp";
    case Solver::kEasgd: return "easgd";
  }
  return "?";
}

Solver solver_from_string(std::string_view s) {
  if (s == "psgd") return Solver::kPsgd;
  if (s == "model_avg_bsp" || s == "bsp") return Solver::kModelAvgBsp;
  if (s == "easgd") return Solver::kEasgd;
  throw Error(Errc::kInvalidArgument, "unknown solver: " + std::string(s));
}

void AggregationPolicy::validate() const {
  if (expected_learners < 1) throw Error(Errc::kInvalidArgument, "expected_learners must be >= 1");
  if (kind == Solver::kPsgd && !(learning_rate > 0.0)) {
    throw Error(Errc::kInvalidArgument, "PSGD learning rate must be > 0");
  }
  if (kind == Solver::kEasgd && !(moving_rate > 0.0 && moving_rate < 1.0)) {
    throw Error(Errc::kInvalidArgument, "EASGD moving rate must be in (0, 1)");
  }
}

ShardCore::ShardCore(std::uint32_t partition_id, Range range, std::vector<double> initial,
                     AggregationPolicy policy, AggregationScheduler* scheduler,
                     std::uint64_t initial_clock)
    : partition_id_(partition_id),
      range_(range),
      policy_(policy),
      scheduler_(scheduler),
      weights_(std::move(initial)),
      clock_(initial_clock),
      async_round_(initial_clock) {
  policy_.validate();
  if (weights_.size() != range_.length) {
    throw Error(Errc::kPartitionMismatch, "initial slice length " +
                                              std::to_string(weights_.size()) + " != " +
                                              std::to_string(range_.length));
  }
  for (std::uint32_t i = 0; i < policy_.expected_learners; ++i) synced_[i] = initial_clock;
}

ShardCore::~ShardCore() {
  close();
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return inflight_ == 0; });
}

void ShardCore::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

void ShardCore::set_round_hook(RoundHook hook) {
  std::lock_guard lock(hook_mu_);
  hook_ = std::move(hook);
}

std::uint64_t ShardCore::clock() const {
  std::lock_guard lock(mu_);
  return clock_;
}

std::vector<double> ShardCore::weights() const {
  std::lock_guard lock(mu_);
  return weights_;
}

std::uint64_t ShardCore::aggregations() const {
  std::lock_guard lock(mu_);
  return aggregations_;
}

std::size_t ShardCore::pending() const {
  std::lock_guard lock(mu_);
  return round_.size();
}

void ShardCore::check_member(std::uint32_t learner) const {
  auto it = members_.find(learner);
  if (it == members_.end()) {
    throw Error(Errc::kUnknownLearner, "learner " + std::to_string(learner) + " has not joined");
  }
}

void ShardCore::check_partition(std::uint32_t partition, std::size_t len,
                                bool allow_empty) const {
  if (partition != partition_id_) {
    throw Error(Errc::kPartitionMismatch, "partition " + std::to_string(partition) +
                                              " is not owned by shard " +
                                              std::to_string(partition_id_));
  }
  if (len != range_.length && !(allow_empty && len == 0)) {
    throw Error(Errc::kPartitionMismatch, "payload has " + std::to_string(len) +
                                              " values, partition holds " +
                                              std::to_string(range_.length));
  }
}

void ShardCore::join(std::uint32_t learner) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(Errc::kCancelled, "shard closed");
  auto it = members_.find(learner);
  if (it == members_.end()) {
    members_.emplace(learner, Member{});
    return;
  }
  if (it->second.attached) {
    throw Error(Errc::kDuplicateLearner, "learner " + std::to_string(learner) + " already joined");
  }
  it->second.attached = true;
  round_.erase(learner);
  pushed_gen_.erase(learner);
}

void ShardCore::leave(std::uint32_t learner) {
  std::lock_guard lock(mu_);
  check_member(learner);
  members_.erase(learner);
  pushed_gen_.erase(learner);
}

void ShardCore::detach(std::uint32_t learner) {
  std::lock_guard lock(mu_);
  auto it = members_.find(learner);
  if (it != members_.end()) it->second.attached = false;
}

void ShardCore::run(std::size_t size, std::function<void()> fn) {
  {
    std::lock_guard lock(mu_);
    ++inflight_;
  }
  auto wrapped = [this, fn = std::move(fn)] {
    fn();
    {
      std::lock_guard lock(mu_);
      --inflight_;
    }
    cv_.notify_all();
  };
  if (scheduler_) {
    scheduler_->submit(size, std::move(wrapped));
  } else {
    wrapped();
  }
}

void ShardCore::close_round_locked(std::unique_lock<std::mutex>& lock) {
  auto contributions = std::move(round_);
  round_.clear();
  const std::uint64_t gen = open_gen_++;
  lock.unlock();
  run(range_.length, [this, gen, contributions = std::move(contributions)] {
    std::vector<double> sum(range_.length, 0.0);
    std::size_t n = 0;
    for (const auto& [id, payload] : contributions) {  // ascending learner id
      if (!payload) continue;
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += (*payload)[j];
      ++n;
    }
    std::optional<std::pair<std::uint64_t, std::vector<double>>> report;
    {
      std::lock_guard g(mu_);
      if (n > 0) {
        for (std::size_t j = 0; j < sum.size(); ++j) weights_[j] = sum[j] / static_cast<double>(n);
        ++clock_;
        report.emplace(clock_, weights_);
      }
      last_round_drained_ = n == 0;
      completed_gen_ = gen + 1;
      ++aggregations_;
    }
    cv_.notify_all();
    if (report) {
      std::lock_guard h(hook_mu_);
      if (hook_) hook_(report->first, report->second);
    }
  });
  lock.lock();
}

void ShardCore::note_async_round_locked(
    std::uint32_t learner, std::uint64_t clock,
    std::optional<std::pair<std::uint64_t, std::vector<double>>>& out) {
  auto& s = synced_[learner];
  s = std::max(s, clock + 1);
  std::uint64_t round = ~std::uint64_t{0};
  for (std::uint32_t i = 0; i < policy_.expected_learners; ++i) {
    auto it = synced_.find(i);
    round = std::min(round, it == synced_.end() ? 0 : it->second);
  }
  if (round > async_round_) {
    async_round_ = round;
    out.emplace(round, weights_);
  }
}

ShardCore::PushResult ShardCore::push(std::uint32_t learner, std::uint32_t partition,
                                      std::uint64_t clock, std::span<const double> payload) {
  std::unique_lock lock(mu_);
  if (closed_) throw Error(Errc::kCancelled, "shard closed");
  check_member(learner);
  check_partition(partition, payload.size(), true);

  if (policy_.bsp()) {
    if (clock < clock_) {
      throw Error(Errc::kStaleClock, "push for clock " + std::to_string(clock) +
                                         ", shard is at " + std::to_string(clock_));
    }
    if (clock > clock_) {
      throw Error(Errc::kProtocolError, "push for future clock " + std::to_string(clock));
    }
    if (round_.count(learner) || pushed_gen_.count(learner)) {
      throw Error(Errc::kProtocolError,
                  "learner " + std::to_string(learner) + " already pushed this round");
    }
    if (payload.empty()) {
      round_.emplace(learner, std::nullopt);
    } else {
      round_.emplace(learner, std::vector<double>(payload.begin(), payload.end()));
    }
    pushed_gen_[learner] = open_gen_;
    PushResult r{clock_, {}};
    if (round_.size() >= policy_.expected_learners) close_round_locked(lock);
    return r;
  }

  // Downpour: aggregate each arrival, stale or not.
  if (payload.empty()) return PushResult{clock_, {}};
  lock.unlock();
  auto done = std::make_shared<std::promise<PushResult>>();
  auto fut = done->get_future();
  std::vector<double> data(payload.begin(), payload.end());
  run(range_.length, [this, learner, clock, done, data = std::move(data)] {
    PushResult r;
    std::optional<std::pair<std::uint64_t, std::vector<double>>> report;
    {
      std::lock_guard g(mu_);
      if (policy_.kind == Solver::kPsgd) {
        const double step = policy_.learning_rate / policy_.expected_learners;
        for (std::size_t j = 0; j < weights_.size(); ++j) weights_[j] -= step * data[j];
      } else {
        r.ack.resize(weights_.size());
        for (std::size_t j = 0; j < weights_.size(); ++j) {
          r.ack[j] = policy_.moving_rate * (data[j] - weights_[j]);
          weights_[j] += r.ack[j];
        }
      }
      ++clock_;
      ++aggregations_;
      r.clock = clock_;
      note_async_round_locked(learner, clock, report);
    }
    cv_.notify_all();
    if (report) {
      std::lock_guard h(hook_mu_);
      if (hook_) hook_(report->first, report->second);
    }
    done->set_value(std::move(r));
  });
  return fut.get();
}

std::optional<ShardCore::PullResult> ShardCore::pull(std::uint32_t learner,
                                                     std::uint32_t partition,
                                                     std::uint64_t clock,
                                                     const std::function<bool()>& cancel) {
  std::unique_lock lock(mu_);
  if (closed_) throw Error(Errc::kCancelled, "shard closed");
  check_member(learner);
  check_partition(partition, range_.length, false);

  auto wait = [&](auto ready) {
    while (!ready()) {
      if (closed_ || (cancel && cancel())) return false;
      cv_.wait_for(lock, std::chrono::milliseconds(50));
    }
    return true;
  };

  if (policy_.bsp()) {
    auto it = pushed_gen_.find(learner);
    if (it != pushed_gen_.end()) {
      const std::uint64_t gen = it->second;
      if (!wait([&] { return completed_gen_ > gen; })) return std::nullopt;
      pushed_gen_.erase(learner);
      if (last_round_drained_) return PullResult{clock_, {}, true};
      return PullResult{clock_, weights_, false};
    }
    if (!wait([&] { return clock_ >= clock; })) return std::nullopt;
  }
  return PullResult{clock_, weights_, false};
}

}  // namespace dlaas::ps
