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
#include <span>
#include <vector>

namespace dlaas::ps {

struct Range {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  bool operator==(const Range&) const = default;
};

// Splits [0, W) into S contiguous ranges; partition p starts at
// p*floor(W/S) + min(p, W mod S), so lengths differ by at most one.
// Throws INVALID_SHARDS unless W >= 1 and 1 <= S <= W.
std::vector<Range> partition_model(std::uint64_t model_size, std::uint64_t shards);

// One shard per 4096 weights, at least one.
std::uint64_t default_shard_count(std::uint64_t model_size);

std::vector<std::vector<double>> scatter(std::span<const double> full,
                                         const std::vector<Range>& parts);
std::vector<double> gather(const std::vector<std::vector<double>>& slices,
                           const std::vector<Range>& parts);

}  // namespace dlaas::ps
