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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlaas/common/bytes.hpp"
#include "dlaas/common/net.hpp"

namespace dlaas::ps {

enum class MsgType : std::uint32_t {
  kJoin = 1,
  kLeave = 2,
  kPush = 3,
  kPushAck = 4,
  kPull = 5,
  kPullResp = 6,
  // Server -> learner: payload is "<ERROR_CODE> <message>" in UTF-8.
  kError = 7,
};

std::string_view to_string(MsgType t);

using JobId = std::array<std::uint8_t, 16>;

// ASCII of `id`, zero-padded (or truncated) to 16 bytes. Training ids pass
// their 12-hex suffix.
JobId make_job_id(std::string_view id);

// Frame layout, little-endian, 48-byte header then payload:
//   "DLPS" | u32 msg_type | 16B job_id | u32 learner_id | u32 partition_id |
//   u64 clock | u64 payload_len (bytes) | payload
// Data payloads are raw f64 arrays; there is no other serialization layer.
struct Message {
  static constexpr std::size_t kHeaderSize = 48;

  MsgType type = MsgType::kJoin;
  JobId job_id{};
  std::uint32_t learner_id = 0;
  std::uint32_t partition_id = 0;
  std::uint64_t clock = 0;
  Bytes payload;

  std::vector<double> values() const;
  void set_values(std::span<const double> v);
  bool operator==(const Message&) const = default;
};

Bytes encode(const Message& m);
// Throws PROTOCOL_ERROR on bad magic, unknown type, length mismatch, or a
// data payload that is not a whole number of f64s.
Message decode(std::span<const std::uint8_t> frame);

struct Header {
  MsgType type;
  JobId job_id;
  std::uint32_t learner_id;
  std::uint32_t partition_id;
  std::uint64_t clock;
  std::uint64_t payload_len;
};
Header decode_header(std::span<const std::uint8_t, Message::kHeaderSize> h);

// Upper bound on a single payload; larger frames are refused.
inline constexpr std::uint64_t kMaxPayload = 1ull << 31;

void write_message(net::Socket& sock, const Message& m);
// Blocking read of one frame. Throws IO_FAILURE / CANCELLED / PROTOCOL_ERROR.
Message read_message(net::Socket& sock, const net::CancelFn& cancel = {});

}  // namespace dlaas::ps
