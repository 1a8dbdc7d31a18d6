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
#include <cstdint>
#include <span>
#include <vector>

#include "dlaas/common/net.hpp"
#include "dlaas/ps/partition.hpp"
#include "dlaas/ps/wire.hpp"

namespace dlaas::ps {

// Learner side. Splits full weight vectors by the shared partition scheme
// and talks to every shard; requests go out to all shards before any
// response is read.
class PsClient {
 public:
  struct Pulled {
    std::uint64_t clock = 0;
    std::vector<double> weights;  // full size, empty when drained
    bool drained = false;
  };

  PsClient(std::vector<net::Endpoint> shards, JobId job, std::uint32_t learner,
           std::uint64_t model_size, net::CancelFn cancel = {});

  // Retries DUPLICATE_LEARNER for `patience` (the server may not have seen
  // the previous incarnation's connection drop yet). Returns the shard clock.
  std::uint64_t join(std::chrono::milliseconds patience = std::chrono::milliseconds(5000));
  void leave();
  // Empty `full` = abstain. Returns the gathered ack payload (EASGD) or empty.
  std::vector<double> push(std::uint64_t clock, std::span<const double> full);
  Pulled pull(std::uint64_t clock);

  const std::vector<Range>& partitions() const { return parts_; }
  std::uint32_t learner_id() const { return learner_; }

 private:
  Message request(MsgType t, std::uint32_t shard, std::uint64_t clock) const;
  Message expect(std::uint32_t shard, MsgType t);

  std::vector<net::Endpoint> endpoints_;
  std::vector<net::Socket> socks_;
  std::vector<Range> parts_;
  JobId job_;
  std::uint32_t learner_;
  net::CancelFn cancel_;
};

// ERROR frame -> Error with the carried code.
[[noreturn]] void throw_error_frame(const Message& m);

}  // namespace dlaas::ps
