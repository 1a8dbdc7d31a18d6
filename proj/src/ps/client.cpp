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

#include "dlaas/ps/client.hpp"

#include <thread>

#include "dlaas/common/error.hpp"
#include "dlaas/common/retry.hpp"

namespace dlaas::ps {

void throw_error_frame(const Message& m) {
  std::string text = dlaas::to_string(m.payload);
  auto sp = text.find(' ');
  std::string code = text.substr(0, sp);
  std::string detail = sp == std::string::npos ? "" : text.substr(sp + 1);
  throw Error(errc_from_string(code), detail);
}

PsClient::PsClient(std::vector<net::Endpoint> shards, JobId job, std::uint32_t learner,
                   std::uint64_t model_size, net::CancelFn cancel)
    : endpoints_(std::move(shards)),
      parts_(partition_model(model_size, endpoints_.size())),
      job_(job),
      learner_(learner),
      cancel_(std::move(cancel)) {
  BackoffPolicy policy;
  for (const auto& ep : endpoints_) {
    socks_.push_back(with_backoff(policy, [&] {
      return net::Socket::connect(ep, std::chrono::milliseconds(2000));
    }));
  }
}

Message PsClient::request(MsgType t, std::uint32_t shard, std::uint64_t clock) const {
  Message m;
  m.type = t;
  m.job_id = job_;
  m.learner_id = learner_;
  m.partition_id = shard;
  m.clock = clock;
  return m;
}

Message PsClient::expect(std::uint32_t shard, MsgType t) {
  Message m = read_message(socks_[shard], cancel_);
  if (m.type == MsgType::kError) throw_error_frame(m);
  if (m.type != t) {
    throw Error(Errc::kProtocolError, "expected " + std::string(to_string(t)) + ", got " +
                                          std::string(to_string(m.type)));
  }
  return m;
}

std::uint64_t PsClient::join(std::chrono::milliseconds patience) {
  std::uint64_t clock = 0;
  for (std::uint32_t s = 0; s < socks_.size(); ++s) {
    auto deadline = std::chrono::steady_clock::now() + patience;
    for (;;) {
      write_message(socks_[s], request(MsgType::kJoin, s, 0));
      try {
        clock = expect(s, MsgType::kJoin).clock;
        break;
      } catch (const Error& e) {
        if (e.code() != Errc::kDuplicateLearner || std::chrono::steady_clock::now() > deadline) {
          throw;
        }
        if (cancel_ && cancel_()) throw Error(Errc::kCancelled, "join cancelled");
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    }
  }
  return clock;
}

void PsClient::leave() {
  for (std::uint32_t s = 0; s < socks_.size(); ++s) {
    write_message(socks_[s], request(MsgType::kLeave, s, 0));
  }
  for (std::uint32_t s = 0; s < socks_.size(); ++s) expect(s, MsgType::kLeave);
}

std::vector<double> PsClient::push(std::uint64_t clock, std::span<const double> full) {
  const bool abstain = full.empty();
  if (!abstain && full.size() != parts_.back().offset + parts_.back().length) {
    throw Error(Errc::kPartitionMismatch, "push vector has wrong size");
  }
  for (std::uint32_t s = 0; s < socks_.size(); ++s) {
    Message m = request(MsgType::kPush, s, clock);
    if (!abstain) m.set_values(full.subspan(parts_[s].offset, parts_[s].length));
    write_message(socks_[s], m);
  }
  std::vector<std::vector<double>> acks(socks_.size());
  bool any = false;
  for (std::uint32_t s = 0; s < socks_.size(); ++s) {
    acks[s] = expect(s, MsgType::kPushAck).values();
    any = any || !acks[s].empty();
  }
  if (!any) return {};
  return gather(acks, parts_);
}

PsClient::Pulled PsClient::pull(std::uint64_t clock) {
  for (std::uint32_t s = 0; s < socks_.size(); ++s) {
    write_message(socks_[s], request(MsgType::kPull, s, clock));
  }
  std::vector<std::vector<double>> slices(socks_.size());
  Pulled out;
  std::size_t empty = 0;
  for (std::uint32_t s = 0; s < socks_.size(); ++s) {
    Message m = expect(s, MsgType::kPullResp);
    out.clock = s == 0 ? m.clock : std::min(out.clock, m.clock);
    slices[s] = m.values();
    if (slices[s].empty()) ++empty;
  }
  if (empty == socks_.size()) {
    out.drained = true;
    return out;
  }
  if (empty != 0) throw Error(Errc::kProtocolError, "shards disagree on a drained round");
  out.weights = gather(slices, parts_);
  return out;
}

}  // namespace dlaas::ps
