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
#include <optional>
#include <string>
#include <vector>

#include "dlaas/common/bytes.hpp"
#include "dlaas/common/util.hpp"
#include "dlaas/storage/object_store.hpp"

namespace dlaas::learner {

// Learner checkpoint blob:
//   "DLCK" | u16 version | u64 clock | u64 iteration | u64 W | W f64 |
//   32B rng state | u32 epoch | u64 cursor_hint
struct Checkpoint {
  static constexpr std::uint16_t kVersion = 1;

  std::uint64_t clock = 0;
  std::uint64_t iteration = 0;
  std::vector<double> weights;
  Rng::State rng_state{};
  std::uint32_t epoch = 0;
  std::uint64_t cursor_hint = 0;

  Bytes encode() const;
  // Throws PROTOCOL_ERROR on a malformed blob.
  static Checkpoint decode(std::span<const std::uint8_t> blob);
  bool operator==(const Checkpoint&) const = default;
};

// PS shard checkpoint: "DLPW" | u16 version | u64 clock | u64 offset |
// u64 length | length f64.
struct ShardCheckpoint {
  static constexpr std::uint16_t kVersion = 1;

  std::uint64_t clock = 0;
  std::uint64_t offset = 0;
  std::vector<double> weights;

  Bytes encode() const;
  static ShardCheckpoint decode(std::span<const std::uint8_t> blob);
  bool operator==(const ShardCheckpoint&) const = default;
};

// Trained model: "DLMD" | u16 version | u32 name_len | trainer name |
// u64 W | W f64.
struct ModelBlob {
  static constexpr std::uint16_t kVersion = 1;

  std::string trainer;
  std::vector<double> weights;

  Bytes encode() const;
  static ModelBlob decode(std::span<const std::uint8_t> blob);
  bool operator==(const ModelBlob&) const = default;
};

std::string learner_checkpoint_key(std::uint64_t clock, std::uint32_t learner);
std::string shard_checkpoint_key(std::uint64_t clock, std::uint32_t shard);

// Clocks at which every learner blob 0..L-1 and every shard blob 0..S-1
// exist under ckpt/ in `container`, ascending. A missing container has none.
std::vector<std::uint64_t> complete_checkpoints(storage::ObjectStore& store,
                                                const std::string& container,
                                                std::uint32_t learners, std::uint32_t shards);
std::optional<std::uint64_t> latest_complete_checkpoint(storage::ObjectStore& store,
                                                        const std::string& container,
                                                        std::uint32_t learners,
                                                        std::uint32_t shards);

// Checkpoint every max(1, C / tau) sync rounds, i.e. every C iterations.
std::uint64_t checkpoint_interval_rounds(std::uint64_t every_iterations, std::uint64_t tau);

}  // namespace dlaas::learner
