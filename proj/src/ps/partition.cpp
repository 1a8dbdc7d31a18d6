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

#include "dlaas/ps/partition.hpp"

#include <algorithm>

#include "dlaas/common/error.hpp"

namespace dlaas::ps {

std::vector<Range> partition_model(std::uint64_t model_size, std::uint64_t shards) {
  if (model_size < 1 || shards < 1 || shards > model_size) {
    throw Error(Errc::kInvalidShards, "cannot split " + std::to_string(model_size) +
                                          " weights into " + std::to_string(shards) + " shards");
  }
  const std::uint64_t base = model_size / shards;
  const std::uint64_t extra = model_size % shards;
  std::vector<Range> out;
  out.reserve(shards);
  for (std::uint64_t p = 0; p < shards; ++p) {
    out.push_back(Range{p * base + std::min(p, extra), base + (p < extra ? 1 : 0)});
  }
  return out;
}

std::uint64_t default_shard_count(std::uint64_t model_size) {
  return std::max<std::uint64_t>(1, (model_size + 4095) / 4096);
}

std::vector<std::vector<double>> scatter(std::span<const double> full,
                                         const std::vector<Range>& parts) {
  std::vector<std::vector<double>> out;
  out.reserve(parts.size());
  for (const auto& r : parts) {
    if (r.offset + r.length > full.size()) {
      throw Error(Errc::kPartitionMismatch, "range beyond vector");
    }
    out.emplace_back(full.begin() + r.offset, full.begin() + r.offset + r.length);
  }
  return out;
}

std::vector<double> gather(const std::vector<std::vector<double>>& slices,
                           const std::vector<Range>& parts) {
  if (slices.size() != parts.size()) throw Error(Errc::kPartitionMismatch, "slice count");
  std::uint64_t total = 0;
  for (const auto& r : parts) total = std::max(total, r.offset + r.length);
  std::vector<double> out(total);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (slices[i].size() != parts[i].length) {
      throw Error(Errc::kPartitionMismatch, "slice " + std::to_string(i) + " length");
    }
    std::copy(slices[i].begin(), slices[i].end(), out.begin() + parts[i].offset);
  }
  return out;
}

}  // namespace dlaas::ps
