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

#include "dlaas/learner/trainer.hpp"

#include <cmath>
#include <mutex>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::learner {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log p + (1-y) log(1-p)] for p = sigmoid(z), without overflow.
double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

std::vector<double> small_normal(std::size_t n, std::uint64_t seed, double scale) {
  Rng rng(seed);
  std::vector<double> w(n);
  for (auto& v : w) v = scale * rng.normal();
  return w;
}

// w = [coef(dim), bias]
class LinearBase : public Trainer {
 public:
  explicit LinearBase(std::size_t dim) : dim_(dim) {}
  std::size_t model_size() const override { return dim_ + 1; }
  std::vector<double> init_weights(std::uint64_t seed) const override {
    return small_normal(model_size(), seed, 0.01);
  }

 protected:
  double z(std::span<const double> w, const Batch& b, std::size_t i) const {
    return dot(w.data(), b.x + i * b.dim, dim_) + w[dim_];
  }
  std::size_t dim_;
};

class LinReg final : public LinearBase {
 public:
  using LinearBase::LinearBase;
  std::string name() const override { return "linreg"; }

  double loss(std::span<const double> w, const Batch& b) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) {
      double r = z(w, b, i) - b.y[i];
      s += 0.5 * r * r;
    }
    return b.n ? s / static_cast<double>(b.n) : 0.0;
  }

  void gradient(std::span<const double> w, const Batch& b, std::span<double> g) const override {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < b.n; ++i) {
      double r = z(w, b, i) - b.y[i];
      const double* x = b.x + i * b.dim;
      for (std::size_t j = 0; j < dim_; ++j) g[j] += r * x[j];
      g[dim_] += r;
    }
    if (b.n) {
      for (auto& v : g) v /= static_cast<double>(b.n);
    }
  }

  // Accuracy is reported as R^2 for regression.
  Metrics metrics(std::span<const double> w, const Batch& b) const override {
    Metrics m;
    m.loss = loss(w, b);
    double mean = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) mean += b.y[i];
    mean /= std::max<std::size_t>(b.n, 1);
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) {
      double r = z(w, b, i) - b.y[i];
      ss_res += r * r;
      ss_tot += (b.y[i] - mean) * (b.y[i] - mean);
    }
    m.accuracy = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
    return m;
  }
};

class LogReg final : public LinearBase {
 public:
  using LinearBase::LinearBase;
  std::string name() const override { return "logreg"; }

  double loss(std::span<const double> w, const Batch& b) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) s += bce_with_logit(z(w, b, i), b.y[i]);
    return b.n ? s / static_cast<double>(b.n) : 0.0;
  }

  void gradient(std::span<const double> w, const Batch& b, std::span<double> g) const override {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < b.n; ++i) {
      double r = sigmoid(z(w, b, i)) - b.y[i];
      const double* x = b.x + i * b.dim;
      for (std::size_t j = 0; j < dim_; ++j) g[j] += r * x[j];
      g[dim_] += r;
    }
    if (b.n) {
      for (auto& v : g) v /= static_cast<double>(b.n);
    }
  }

  Metrics metrics(std::span<const double> w, const Batch& b) const override {
    Metrics m;
    std::size_t correct = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) {
      double zi = z(w, b, i);
      s += bce_with_logit(zi, b.y[i]);
      correct += (zi >= 0.0) == (b.y[i] >= 0.5);
    }
    if (b.n) {
      m.loss = s / static_cast<double>(b.n);
      m.accuracy = static_cast<double>(correct) / static_cast<double>(b.n);
    }
    return m;
  }
};

// One tanh hidden layer, sigmoid output, binary cross-entropy.
// w = [W1 (h x dim, row-major), b1 (h), w2 (h), b2]
class Mlp final : public Trainer {
 public:
  Mlp(std::size_t dim, std::size_t hidden) : dim_(dim), h_(hidden) {}
  std::string name() const override { return "mlp"; }
  std::size_t model_size() const override { return h_ * dim_ + 2 * h_ + 1; }

  std::vector<double> init_weights(std::uint64_t seed) const override {
    Rng rng(seed);
    std::vector<double> w(model_size(), 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(dim_, 1)));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h_));
    for (std::size_t i = 0; i < h_ * dim_; ++i) w[i] = s1 * rng.normal();
    for (std::size_t i = 0; i < h_; ++i) w[h_ * dim_ + h_ + i] = s2 * rng.normal();
    return w;
  }

  double loss(std::span<const double> w, const Batch& b) const override {
    std::vector<double> a(h_);
    double s = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) s += bce_with_logit(forward(w, b, i, a), b.y[i]);
    return b.n ? s / static_cast<double>(b.n) : 0.0;
  }

  void gradient(std::span<const double> w, const Batch& b, std::span<double> g) const override {
    std::fill(g.begin(), g.end(), 0.0);
    std::vector<double> a(h_);
    const double* w2 = w.data() + h_ * dim_ + h_;
    double* gW1 = g.data();
    double* gb1 = g.data() + h_ * dim_;
    double* gw2 = gb1 + h_;
    double& gb2 = g[model_size() - 1];
    for (std::size_t i = 0; i < b.n; ++i) {
      const double* x = b.x + i * b.dim;
      double dz = sigmoid(forward(w, b, i, a)) - b.y[i];
      gb2 += dz;
      for (std::size_t k = 0; k < h_; ++k) {
        gw2[k] += dz * a[k];
        double dh = dz * w2[k] * (1.0 - a[k] * a[k]);
        gb1[k] += dh;
        double* row = gW1 + k * dim_;
        for (std::size_t j = 0; j < dim_; ++j) row[j] += dh * x[j];
      }
    }
    if (b.n) {
      for (auto& v : g) v /= static_cast<double>(b.n);
    }
  }

  Metrics metrics(std::span<const double> w, const Batch& b) const override {
    Metrics m;
    std::vector<double> a(h_);
    std::size_t correct = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) {
      double zi = forward(w, b, i, a);
      s += bce_with_logit(zi, b.y[i]);
      correct += (zi >= 0.0) == (b.y[i] >= 0.5);
    }
    if (b.n) {
      m.loss = s / static_cast<double>(b.n);
      m.accuracy = static_cast<double>(correct) / static_cast<double>(b.n);
    }
    return m;
  }

 private:
  // Output logit for sample i; fills hidden activations.
  double forward(std::span<const double> w, const Batch& b, std::size_t i,
                 std::vector<double>& a) const {
    const double* x = b.x + i * b.dim;
    const double* b1 = w.data() + h_ * dim_;
    const double* w2 = b1 + h_;
    double out = w[model_size() - 1];
    for (std::size_t k = 0; k < h_; ++k) {
      a[k] = std::tanh(dot(w.data() + k * dim_, x, dim_) + b1[k]);
      out += w2[k] * a[k];
    }
    return out;
  }

  std::size_t dim_;
  std::size_t h_;
};

struct PluginTable {
  std::mutex mu;
  std::map<std::string, TrainerFactory> factories;
  std::map<std::string, std::string> aliases;
};

PluginTable& table() {
  static PluginTable* t = [] {
    auto* t = new PluginTable;
    t->factories["linreg"] = [](std::size_t dim, const Hyperparams&) {
      return std::make_unique<LinReg>(dim);
    };
    t->factories["logreg"] = [](std::size_t dim, const Hyperparams&) {
      return std::make_unique<LogReg>(dim);
    };
    t->factories["mlp"] = [](std::size_t dim, const Hyperparams& hp) {
      std::int64_t h = 16;
      if (auto it = hp.find("hidden_units"); it != hp.end()) {
        if (!parse_int64(it->second, h) || h < 1 || h > 4096) {
          throw Error(Errc::kInvalidArgument, "hidden_units must be in [1, 4096]");
        }
      }
      return std::make_unique<Mlp>(dim, static_cast<std::size_t>(h));
    };
    for (const char* a : {"caffe", "torch", "tensorflow"}) t->aliases[a] = "mlp";
    return t;
  }();
  return *t;
}

}  // namespace

std::optional<std::string> resolve_trainer(std::string_view name) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  std::string n(name);
  if (auto it = t.aliases.find(n); it != t.aliases.end()) n = it->second;
  if (t.factories.count(n)) return n;
  return std::nullopt;
}

std::unique_ptr<Trainer> make_trainer(std::string_view name, std::size_t dim,
                                      const Hyperparams& hp) {
  auto resolved = resolve_trainer(name);
  if (!resolved) throw Error(Errc::kUnknownFramework, std::string(name));
  TrainerFactory f;
  {
    auto& t = table();
    std::lock_guard lock(t.mu);
    f = t.factories.at(*resolved);
  }
  return f(dim, hp);
}

void register_trainer(const std::string& name, TrainerFactory factory) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  t.factories[name] = std::move(factory);
}

void register_alias(const std::string& alias, const std::string& target) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  t.aliases[alias] = target;
}

std::vector<std::string> trainer_names() {
  auto& t = table();
  std::lock_guard lock(t.mu);
  std::vector<std::string> out;
  for (auto& [k, _] : t.factories) out.push_back(k);
  return out;
}

}  // namespace dlaas::learner
