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

#include "dlaas/ps/server.hpp"

#include <spdlog/spdlog.h>

#include "dlaas/common/error.hpp"

namespace dlaas::ps {

ShardServer::ShardServer(ShardCore& core, JobId job, const std::string& host, std::uint16_t port)
    : core_(core), job_(job), listener_(host, port) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

ShardServer::~ShardServer() { stop(); }

void ShardServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::unique_ptr<Conn>> conns;
  {
    std::lock_guard lock(conns_mu_);
    conns.swap(conns_);
  }
  for (auto& c : conns) c->sock.shutdown();
  for (auto& c : conns) {
    if (c->thread.joinable()) c->thread.join();
  }
}

CounterSnapshot ShardServer::counters() const {
  CounterSnapshot s;
  for (std::size_t i = 0; i < 8; ++i) {
    s.received[i] = received_[i].load();
    s.sent[i] = sent_[i].load();
  }
  s.data_messages = data_.load();
  s.control_messages = control_.load();
  return s;
}

void ShardServer::reset_counters() {
  for (std::size_t i = 0; i < 8; ++i) {
    received_[i] = 0;
    sent_[i] = 0;
  }
  data_ = 0;
  control_ = 0;
}

void ShardServer::reap() {
  std::lock_guard lock(conns_mu_);
  for (auto it = conns_.begin(); it != conns_.end();) {
    if ((*it)->done.load()) {
      if ((*it)->thread.joinable()) (*it)->thread.join();
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

void ShardServer::accept_loop() {
  while (!stopping_.load()) {
    auto sock = listener_.accept([this] { return stopping_.load(); });
    if (!sock) continue;
    reap();
    auto conn = std::make_unique<Conn>();
    conn->sock = std::move(*sock);
    Conn* raw = conn.get();
    std::lock_guard lock(conns_mu_);
    if (stopping_.load()) break;
    conns_.push_back(std::move(conn));
    raw->thread = std::thread([this, raw] {
      serve(*raw);
      raw->done = true;
    });
  }
}

void ShardServer::send(net::Socket& s, const Message& m) {
  const auto t = static_cast<std::size_t>(m.type);
  sent_[t].fetch_add(1);
  const bool data = (m.type == MsgType::kPullResp || m.type == MsgType::kPushAck) &&
                    !m.payload.empty();
  (data ? data_ : control_).fetch_add(1);
  write_message(s, m);
}

void ShardServer::serve(Conn& c) {
  std::optional<std::uint32_t> bound;
  auto cancel = [this] { return stopping_.load(); };
  for (;;) {
    Message in;
    try {
      in = read_message(c.sock, cancel);
    } catch (const Error& e) {
      if (e.code() == Errc::kProtocolError) {
        spdlog::warn("ps shard {}: dropping connection: {}", core_.partition_id(), e.what());
      }
      break;
    }
    const auto t = static_cast<std::size_t>(in.type);
    received_[t].fetch_add(1);
    const bool data = in.type == MsgType::kPush && !in.payload.empty();
    (data ? data_ : control_).fetch_add(1);

    Message out;
    out.job_id = job_;
    out.learner_id = in.learner_id;
    out.partition_id = core_.partition_id();
    try {
      if (in.job_id != job_) throw Error(Errc::kProtocolError, "frame for another job");
      switch (in.type) {
        case MsgType::kJoin:
          core_.join(in.learner_id);
          bound = in.learner_id;
          out.type = MsgType::kJoin;
          out.clock = core_.clock();
          break;
        case MsgType::kLeave:
          core_.leave(in.learner_id);
          bound.reset();
          out.type = MsgType::kLeave;
          break;
        case MsgType::kPush: {
          auto values = in.values();
          auto r = core_.push(in.learner_id, in.partition_id, in.clock, values);
          out.type = MsgType::kPushAck;
          out.clock = r.clock;
          out.set_values(r.ack);
          break;
        }
        case MsgType::kPull: {
          auto r = core_.pull(in.learner_id, in.partition_id, in.clock, cancel);
          if (!r) throw Error(Errc::kCancelled, "shard stopping");
          out.type = MsgType::kPullResp;
          out.clock = r->clock;
          out.set_values(r->weights);
          break;
        }
        default:
          throw Error(Errc::kProtocolError,
                      std::string(to_string(in.type)) + " is not a request");
      }
    } catch (const Error& e) {
      out.type = MsgType::kError;
      out.clock = 0;
      out.payload = to_bytes(std::string(to_string(e.code())) + " " + e.detail());
    }
    try {
      send(c.sock, out);
    } catch (const Error&) {
      break;
    }
  }
  if (bound) core_.detach(*bound);
}

}  // namespace dlaas::ps
