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

#include "dlaas/learner/cursor.hpp"

#include <algorithm>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::learner {

std::string cursor_path(const std::string& training_id, std::uint32_t epoch) {
  return "/jobs/" + training_id + "/cursor/" + std::to_string(epoch);
}

std::uint64_t default_chunk_size(std::uint64_t samples, std::uint32_t learners,
                                 std::uint32_t batch_size, std::uint32_t assigned_gpus) {
  const std::uint64_t l4 = 4ull * std::max<std::uint32_t>(1, learners);
  const std::uint64_t b = std::max<std::uint32_t>(1, batch_size);
  std::uint64_t c = (samples + l4 - 1) / l4;
  c = std::max<std::uint64_t>(1, (c + b - 1) / b) * b;
  return c * (1 + assigned_gpus);
}

std::optional<SampleRange> claim_chunk(coord::Client& coord, const std::string& training_id,
                                       std::uint32_t epoch, std::uint64_t chunk,
                                       std::uint64_t samples, const BackoffPolicy& policy,
                                       const Sleeper& sleep) {
  if (chunk == 0) throw Error(Errc::kInvalidArgument, "chunk size must be positive");
  const std::string path = cursor_path(training_id, epoch);
  auto [pre, post] = with_backoff(
      policy, [&] { return coord.atomic_increment(path, static_cast<std::int64_t>(chunk)); },
      sleep);
  (void)post;
  const auto start = static_cast<std::uint64_t>(pre);
  if (start >= samples) return std::nullopt;
  return SampleRange{start, std::min(start + chunk, samples)};
}

std::optional<SampleRange> claim_chunk_ordered(coord::Client& coord,
                                               const std::string& training_id,
                                               std::uint32_t epoch, std::uint64_t chunk,
                                               std::uint64_t samples, std::uint32_t learner,
                                               std::uint32_t learners,
                                               const net::CancelFn& cancel) {
  if (chunk == 0) throw Error(Errc::kInvalidArgument, "chunk size must be positive");
  const std::string path = cursor_path(training_id, epoch);
  for (;;) {
    if (cancel && cancel()) throw Error(Errc::kCancelled, "claim cancelled");
    auto [text, version] = coord.read(path);
    std::int64_t v = 0;
    if (!parse_int64(text, v) || v < 0) throw Error(Errc::kMalformedCounter, path);
    const auto start = static_cast<std::uint64_t>(v);
    if (start >= samples) return std::nullopt;
    if ((start / chunk) % learners == learner) {
      try {
        coord.write_cas(path, std::to_string(start + chunk), version);
        return SampleRange{start, std::min(start + chunk, samples)};
      } catch (const Error& e) {
        if (e.code() != Errc::kVersionConflict) throw;
        continue;
      }
    }
    coord.wait_changed(path, version, std::chrono::milliseconds(200), cancel);
  }
}

}  // namespace dlaas::learner
