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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dlaas::learner {

// Row-major view of `n` samples of `dim` features plus their labels.
struct Batch {
  const double* x = nullptr;
  const double* y = nullptr;
  std::size_t n = 0;
  std::size_t dim = 0;
};

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

using Hyperparams = std::map<std::string, std::string>;

// Plugin contract for a built-in framework. All vectors are the flat weight
// vector of size model_size(). gradient() returns the mean gradient over the
// batch and must be deterministic in (weights, batch).
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual std::string name() const = 0;
  virtual std::size_t model_size() const = 0;
  virtual std::vector<double> init_weights(std::uint64_t seed) const = 0;
  virtual double loss(std::span<const double> w, const Batch& b) const = 0;
  virtual void gradient(std::span<const double> w, const Batch& b, std::span<double> g) const = 0;
  virtual Metrics metrics(std::span<const double> w, const Batch& b) const = 0;
};

using TrainerFactory =
    std::function<std::unique_ptr<Trainer>(std::size_t dim, const Hyperparams& hp)>;

// Maps a framework name (including the caffe / torch / tensorflow aliases) to
// a registered plugin name.
std::optional<std::string> resolve_trainer(std::string_view name);

// Throws UNKNOWN_FRAMEWORK for unregistered names and INVALID_ARGUMENT for
// bad hyperparameters (e.g. hidden_units).
std::unique_ptr<Trainer> make_trainer(std::string_view name, std::size_t dim,
                                      const Hyperparams& hp = {});

// Adds (or replaces) a plugin; the load/train/store hooks of a new framework.
void register_trainer(const std::string& name, TrainerFactory factory);
void register_alias(const std::string& alias, const std::string& target);

std::vector<std::string> trainer_names();

}  // namespace dlaas::learner
