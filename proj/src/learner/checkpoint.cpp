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

#include "dlaas/learner/checkpoint.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dlaas/common/error.hpp"

namespace dlaas::learner {

namespace {

void check_version(ByteReader& r, std::uint16_t want, const char* what) {
  std::uint16_t v = r.u16();
  if (v != want) {
    throw Error(Errc::kProtocolError,
                std::string(what) + " version " + std::to_string(v) + " unsupported");
  }
}

void check_done(const ByteReader& r, const char* what) {
  if (r.remaining() != 0) throw Error(Errc::kProtocolError, std::string(what) + ": trailing bytes");
}

}  // namespace

Bytes Checkpoint::encode() const {
  Bytes out;
  ByteWriter w(out);
  w.magic("DLCK");
  w.u16(kVersion);
  w.u64(clock);
  w.u64(iteration);
  w.u64(weights.size());
  w.f64s(weights);
  for (auto s : rng_state) w.u64(s);
  w.u32(epoch);
  w.u64(cursor_hint);
  return out;
}

Checkpoint Checkpoint::decode(std::span<const std::uint8_t> blob) {
  ByteReader r(blob, Errc::kProtocolError);
  r.expect_magic("DLCK");
  check_version(r, kVersion, "checkpoint");
  Checkpoint c;
  c.clock = r.u64();
  c.iteration = r.u64();
  c.weights = r.f64s(r.u64());
  for (auto& s : c.rng_state) s = r.u64();
  c.epoch = r.u32();
  c.cursor_hint = r.u64();
  check_done(r, "checkpoint");
  return c;
}

Bytes ShardCheckpoint::encode() const {
  Bytes out;
  ByteWriter w(out);
  w.magic("DLPW");
  w.u16(kVersion);
  w.u64(clock);
  w.u64(offset);
  w.u64(weights.size());
  w.f64s(weights);
  return out;
}

ShardCheckpoint ShardCheckpoint::decode(std::span<const std::uint8_t> blob) {
  ByteReader r(blob, Errc::kProtocolError);
  r.expect_magic("DLPW");
  check_version(r, kVersion, "shard checkpoint");
  ShardCheckpoint c;
  c.clock = r.u64();
  c.offset = r.u64();
  c.weights = r.f64s(r.u64());
  check_done(r, "shard checkpoint");
  return c;
}

Bytes ModelBlob::encode() const {
  Bytes out;
  ByteWriter w(out);
  w.magic("DLMD");
  w.u16(kVersion);
  w.u32(static_cast<std::uint32_t>(trainer.size()));
  w.raw(trainer.data(), trainer.size());
  w.u64(weights.size());
  w.f64s(weights);
  return out;
}

ModelBlob ModelBlob::decode(std::span<const std::uint8_t> blob) {
  ByteReader r(blob, Errc::kProtocolError);
  r.expect_magic("DLMD");
  check_version(r, kVersion, "model");
  ModelBlob m;
  auto name = r.take(r.u32());
  m.trainer.assign(name.begin(), name.end());
  m.weights = r.f64s(r.u64());
  check_done(r, "model");
  return m;
}

std::string learner_checkpoint_key(std::uint64_t clock, std::uint32_t learner) {
  return "ckpt/" + std::to_string(clock) + "/learner-" + std::to_string(learner) + ".bin";
}

std::string shard_checkpoint_key(std::uint64_t clock, std::uint32_t shard) {
  return "ckpt/" + std::to_string(clock) + "/ps-" + std::to_string(shard) + ".bin";
}

std::vector<std::uint64_t> complete_checkpoints(storage::ObjectStore& store,
                                                const std::string& container,
                                                std::uint32_t learners, std::uint32_t shards) {
  if (!store.container_exists(container)) return {};
  std::map<std::uint64_t, std::set<std::string>> by_clock;
  for (const auto& key : store.list(container, "ckpt/")) {
    auto parts = split(key, '/');
    if (parts.size() != 3) continue;
    std::int64_t clock = 0;
    if (!parse_int64(parts[1], clock) || clock < 0) continue;
    by_clock[static_cast<std::uint64_t>(clock)].insert(parts[2]);
  }
  std::vector<std::uint64_t> out;
  for (const auto& [clock, names] : by_clock) {
    bool complete = true;
    for (std::uint32_t i = 0; i < learners && complete; ++i) {
      complete = names.count("learner-" + std::to_string(i) + ".bin") > 0;
    }
    for (std::uint32_t s = 0; s < shards && complete; ++s) {
      complete = names.count("ps-" + std::to_string(s) + ".bin") > 0;
    }
    if (complete) out.push_back(clock);
  }
  return out;
}

std::optional<std::uint64_t> latest_complete_checkpoint(storage::ObjectStore& store,
                                                        const std::string& container,
                                                        std::uint32_t learners,
                                                        std::uint32_t shards) {
  auto all = complete_checkpoints(store, container, learners, shards);
  if (all.empty()) return std::nullopt;
  return all.back();
}

std::uint64_t checkpoint_interval_rounds(std::uint64_t every_iterations, std::uint64_t tau) {
  return std::max<std::uint64_t>(1, every_iterations / std::max<std::uint64_t>(1, tau));
}

}  // namespace dlaas::learner
