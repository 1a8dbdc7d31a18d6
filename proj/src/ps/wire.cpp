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

#include "dlaas/ps/wire.hpp"

#include <cstring>

#include "dlaas/common/error.hpp"

namespace dlaas::ps {

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::kJoin: return "JOIN";
    case MsgType::kLeave: return "LEAVE";
    case MsgType::kPush: return "PUSH";
    case MsgType::kPushAck: return "PUSH_ACK";
    case MsgType::kPull: return "PULL";
    case MsgType::kPullResp: return "PULL_RESP";
    case MsgType::kError: return "ERROR";
  }
  return "?";
}

JobId make_job_id(std::string_view id) {
  JobId out{};
  std::memcpy(out.data(), id.data(), std::min(id.size(), out.size()));
  return out;
}

std::vector<double> Message::values() const {
  if (payload.size() % 8 != 0) throw Error(Errc::kProtocolError, "payload not f64-aligned");
  ByteReader r(payload, Errc::kProtocolError);
  return r.f64s(payload.size() / 8);
}

void Message::set_values(std::span<const double> v) {
  payload.clear();
  payload.reserve(v.size_bytes());
  ByteWriter w(payload);
  w.f64s(v);
}

Bytes encode(const Message& m) {
  Bytes out;
  out.reserve(Message::kHeaderSize + m.payload.size());
  ByteWriter w(out);
  w.magic("DLPS");
  w.u32(static_cast<std::uint32_t>(m.type));
  w.raw(m.job_id.data(), m.job_id.size());
  w.u32(m.learner_id);
  w.u32(m.partition_id);
  w.u64(m.clock);
  w.u64(m.payload.size());
  w.raw(m.payload.data(), m.payload.size());
  return out;
}

Header decode_header(std::span<const std::uint8_t, Message::kHeaderSize> h) {
  ByteReader r(h, Errc::kProtocolError);
  r.expect_magic("DLPS");
  Header out{};
  std::uint32_t type = r.u32();
  if (type < 1 || type > 7) {
    throw Error(Errc::kProtocolError, "unknown message type " + std::to_string(type));
  }
  out.type = static_cast<MsgType>(type);
  auto id = r.take(16);
  std::memcpy(out.job_id.data(), id.data(), 16);
  out.learner_id = r.u32();
  out.partition_id = r.u32();
  out.clock = r.u64();
  out.payload_len = r.u64();
  const bool data = out.type == MsgType::kPush || out.type == MsgType::kPullResp ||
                    out.type == MsgType::kPushAck;
  if (data && out.payload_len % 8 != 0) {
    throw Error(Errc::kProtocolError, "data payload not a whole number of f64");
  }
  if (!data && out.type != MsgType::kError && out.payload_len != 0) {
    throw Error(Errc::kProtocolError, std::string(to_string(out.type)) + " carries no payload");
  }
  if (out.payload_len > kMaxPayload) throw Error(Errc::kProtocolError, "payload too large");
  return out;
}

Message decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < Message::kHeaderSize) throw Error(Errc::kProtocolError, "short frame");
  Header h = decode_header(frame.first<Message::kHeaderSize>());
  if (frame.size() - Message::kHeaderSize != h.payload_len) {
    throw Error(Errc::kProtocolError, "payload length does not match frame");
  }
  Message m;
  m.type = h.type;
  m.job_id = h.job_id;
  m.learner_id = h.learner_id;
  m.partition_id = h.partition_id;
  m.clock = h.clock;
  m.payload.assign(frame.begin() + Message::kHeaderSize, frame.end());
  return m;
}

void write_message(net::Socket& sock, const Message& m) { sock.write_all(encode(m)); }

Message read_message(net::Socket& sock, const net::CancelFn& cancel) {
  std::array<std::uint8_t, Message::kHeaderSize> head{};
  sock.read_exact(head, cancel);
  Header h = decode_header(head);
  Message m;
  m.type = h.type;
  m.job_id = h.job_id;
  m.learner_id = h.learner_id;
  m.partition_id = h.partition_id;
  m.clock = h.clock;
  m.payload.resize(h.payload_len);
  if (h.payload_len) sock.read_exact(m.payload, cancel);
  return m;
}

}  // namespace dlaas::ps
