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
#include <string>
#include <vector>

#include "dlaas/common/util.hpp"
#include "dlaas/learner/trainer.hpp"
#include "dlaas/storage/dataset.hpp"

namespace dlaas::testing {

struct BspOracleSetup {
  std::string trainer = "logreg";
  learner::Hyperparams hp;
  std::uint32_t learners = 2;
  std::uint32_t tau = 5;
  std::uint32_t batch = 16;
  std::uint32_t epochs = 1;
  std::uint64_t chunk = 64;
  std::uint64_t seed = 1;
  double lr = 0.1;
};

// Single-threaded replay of model-averaging BSP with ordered claims: chunk k
// of every pass belongs to learner k mod L, each learner shuffles its chunks
// with its own stream, takes up to tau local steps per round from the global
// weights, and the round result is the plain mean of the contributors in
// ascending id order. A round nobody contributes to ends the pass.
inline std::vector<double> bsp_oracle(const storage::Dataset& data, const BspOracleSetup& s) {
  auto tr = learner::make_trainer(s.trainer, data.dim, s.hp);
  std::vector<double> global = tr->init_weights(s.seed);
  const std::size_t W = global.size(), dim = data.dim;
  std::vector<Rng> rng;
  for (std::uint32_t id = 0; id < s.learners; ++id) {
    rng.emplace_back(s.seed ^ (0x9E3779B97F4A7C15ull * (id + 1ull)));
  }
  std::vector<double> g(W), bx, by;
  for (std::uint32_t e = 0; e < s.epochs; ++e) {
    std::vector<std::vector<std::vector<std::uint64_t>>> batches(s.learners);
    for (std::uint64_t k = 0; k * s.chunk < data.samples; ++k) {
      const auto owner = static_cast<std::uint32_t>(k % s.learners);
      const std::uint64_t lo = k * s.chunk, hi = std::min(lo + s.chunk, data.samples);
      std::vector<std::uint64_t> idx;
      for (std::uint64_t i = lo; i < hi; ++i) idx.push_back(i);
      for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng[owner].below(i)]);
      for (std::size_t f = 0; f < idx.size(); f += s.batch) {
        batches[owner].emplace_back(idx.begin() + f,
                                    idx.begin() + std::min<std::size_t>(idx.size(), f + s.batch));
      }
    }
    std::vector<std::size_t> next(s.learners, 0);
    for (;;) {
      std::vector<double> sum(W, 0.0);
      std::size_t n = 0;
      for (std::uint32_t id = 0; id < s.learners; ++id) {
        if (next[id] >= batches[id].size()) continue;
        std::vector<double> x = global;
        for (std::uint32_t t = 0; t < s.tau && next[id] < batches[id].size(); ++t) {
          const auto& b = batches[id][next[id]++];
          bx.resize(b.size() * dim);
          by.resize(b.size());
          for (std::size_t i = 0; i < b.size(); ++i) {
            for (std::size_t j = 0; j < dim; ++j) bx[i * dim + j] = data.features[b[i] * dim + j];
            by[i] = data.labels[b[i]];
          }
          tr->gradient(x, learner::Batch{bx.data(), by.data(), b.size(), dim}, g);
          for (std::size_t j = 0; j < W; ++j) x[j] -= s.lr * g[j];
        }
        for (std::size_t j = 0; j < W; ++j) sum[j] += x[j];
        ++n;
      }
      if (n == 0) break;
      for (std::size_t j = 0; j < W; ++j) global[j] = sum[j] / static_cast<double>(n);
    }
  }
  return global;
}

}  // namespace dlaas::testing
