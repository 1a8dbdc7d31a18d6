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

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dlaas/ps/partition.hpp"
#include "dlaas/ps/scheduler.hpp"

namespace dlaas::ps {

enum class Solver { kPsgd, kModelAvgBsp, kEasgd };

std::string_view to_string(Solver s);
// Accepts "psgd", "model_avg_bsp" (alias "bsp"), "easgd"; INVALID_ARGUMENT.
Solver solver_from_string(std::string_view s);

struct AggregationPolicy {
  Solver kind = Solver::kModelAvgBsp;
  double learning_rate = 0.1;  // eta, PSGD server-side rate
  double moving_rate = 0.5;    // alpha, EASGD
  std::uint32_t expected_learners = 1;

  // Throws INVALID_ARGUMENT.
  void validate() const;
  bool bsp() const { return kind == Solver::kModelAvgBsp; }
};

// Global state of one partition plus the aggregation rules.
//
// BSP: a round closes when all L learners have pushed (a push with an empty
// payload is an abstention). The mean over non-abstaining payloads, summed in
// ascending learner id, replaces the slice and the clock advances. A round in
// which everybody abstained leaves weights and clock alone and is reported to
// pullers as drained.
//
// PSGD / EASGD: each push is aggregated on arrival; the clock counts arrivals.
class ShardCore {
 public:
  struct PushResult {
    std::uint64_t clock = 0;
    std::vector<double> ack;  // EASGD elastic term, otherwise empty
  };
  struct PullResult {
    std::uint64_t clock = 0;
    std::vector<double> weights;  // empty when drained
    bool drained = false;
  };
  // (round, slice) after an aggregation moved the checkpoint round forward.
  using RoundHook = std::function<void(std::uint64_t, const std::vector<double>&)>;

  ShardCore(std::uint32_t partition_id, Range range, std::vector<double> initial,
            AggregationPolicy policy, AggregationScheduler* scheduler = nullptr,
            std::uint64_t initial_clock = 0);
  ~ShardCore();

  std::uint32_t partition_id() const { return partition_id_; }
  const Range& range() const { return range_; }
  const AggregationPolicy& policy() const { return policy_; }

  // DUPLICATE_LEARNER if attached; a detached id rejoins and loses any
  // payload it had pending.
  void join(std::uint32_t learner);
  // UNKNOWN_LEARNER if not a member.
  void leave(std::uint32_t learner);
  // Connection gone without LEAVE (crash).
  void detach(std::uint32_t learner);

  PushResult push(std::uint32_t learner, std::uint32_t partition, std::uint64_t clock,
                  std::span<const double> payload);
  // nullopt when cancelled or closed.
  std::optional<PullResult> pull(std::uint32_t learner, std::uint32_t partition,
                                 std::uint64_t clock, const std::function<bool()>& cancel = {});

  std::uint64_t clock() const;
  std::vector<double> weights() const;
  std::uint64_t aggregations() const;
  std::size_t pending() const;
  void set_round_hook(RoundHook hook);
  // Wakes every blocked caller; later calls fail with CANCELLED.
  void close();

 private:
  struct Member {
    bool attached = true;
  };
  void check_member(std::uint32_t learner) const;
  void check_partition(std::uint32_t partition, std::size_t len, bool allow_empty) const;
  void run(std::size_t size, std::function<void()> fn);
  void close_round_locked(std::unique_lock<std::mutex>& lock);
  void note_async_round_locked(std::uint32_t learner, std::uint64_t clock,
                               std::optional<std::pair<std::uint64_t, std::vector<double>>>& out);

  const std::uint32_t partition_id_;
  const Range range_;
  const AggregationPolicy policy_;
  AggregationScheduler* scheduler_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool closed_ = false;
  std::size_t inflight_ = 0;
  std::vector<double> weights_;
  std::uint64_t clock_ = 0;
  std::uint64_t aggregations_ = 0;
  std::map<std::uint32_t, Member> members_;

  // BSP round bookkeeping.
  std::map<std::uint32_t, std::optional<std::vector<double>>> round_;
  std::uint64_t open_gen_ = 0;       // round currently collecting
  std::uint64_t completed_gen_ = 0;  // rounds fully aggregated
  bool last_round_drained_ = false;
  std::map<std::uint32_t, std::uint64_t> pushed_gen_;  // learner -> round awaiting pull

  // Async checkpoint round: min over learners of syncs applied.
  std::map<std::uint32_t, std::uint64_t> synced_;
  std::uint64_t async_round_ = 0;

  RoundHook hook_;
  std::mutex hook_mu_;
};

}  // namespace dlaas::ps
