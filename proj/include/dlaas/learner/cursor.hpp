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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "dlaas/common/net.hpp"
#include "dlaas/common/retry.hpp"
#include "dlaas/coord/client.hpp"

namespace dlaas::learner {

using SampleRange = std::pair<std::uint64_t, std::uint64_t>;  // [start, end)

std::string cursor_path(const std::string& training_id, std::uint32_t epoch);

// ceil(D / (4L)) rounded up to a multiple of the batch size, scaled by
// (1 + assigned_gpus).
std::uint64_t default_chunk_size(std::uint64_t samples, std::uint32_t learners,
                                 std::uint32_t batch_size, std::uint32_t assigned_gpus);

// Increments the epoch's cursor by c and returns [pre, min(pre + c, D)), or
// nullopt once pre >= D. COORDSTORE_UNAVAILABLE is retried with backoff.
std::optional<SampleRange> claim_chunk(coord::Client& coord, const std::string& training_id,
                                       std::uint32_t epoch, std::uint64_t chunk,
                                       std::uint64_t samples, const BackoffPolicy& policy = {},
                                       const Sleeper& sleep = real_sleep);

// Deterministic variant: chunk k of the epoch goes to learner k mod L. The
// learner waits (watching the cursor) until the preceding chunk has been
// taken, then advances the cursor with a CAS. Used when runs must be
// reproducible bit for bit. Throws CANCELLED if `cancel` fires.
std::optional<SampleRange> claim_chunk_ordered(coord::Client& coord,
                                               const std::string& training_id,
                                               std::uint32_t epoch, std::uint64_t chunk,
                                               std::uint64_t samples, std::uint32_t learner,
                                               std::uint32_t learners,
                                               const net::CancelFn& cancel = {});

}  // namespace dlaas::learner
