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

#include <cmath>

#include <gtest/gtest.h>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"
#include "dlaas/learner/trainer.hpp"
#include "dlaas/storage/dataset.hpp"

using namespace dlaas;
using namespace dlaas::learner;

namespace {

// ||a - n|| / (||a|| + ||n||) with central differences, step 1e-5.
double fd_relative_error(const Trainer& t, std::span<const double> w, const Batch& b) {
  std::vector<double> ga(w.size());
  t.gradient(w, b, ga);
  std::vector<double> wp(w.begin(), w.end());
  double diff = 0.0, na = 0.0, nn = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double orig = wp[i];
    wp[i] = orig + h;
    double fp = t.loss(wp, b);
    wp[i] = orig - h;
    double fm = t.loss(wp, b);
    wp[i] = orig;
    double g = (fp - fm) / (2 * h);
    diff += (ga[i] - g) * (ga[i] - g);
    na += ga[i] * ga[i];
    nn += g * g;
  }
  double denom = std::sqrt(na) + std::sqrt(nn);
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace

class GradientCheck : public ::testing::TestWithParam<const char*> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  const std::uint32_t dim = 4;
  auto t = make_trainer(GetParam(), dim, {{"hidden_units", "5"}});
  Rng rng(42);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    auto data = std::string(GetParam()) == "linreg"
                    ? storage::make_linear_dataset(8, dim, 1000 + draw)
                    : storage::make_separable_dataset(8, dim, 1000 + draw);
    std::vector<double> w(t->model_size());
    for (auto& v : w) v = rng.normal();
    Batch b{data.features.data(), data.labels.data(), data.samples, dim};
    worst = std::max(worst, fd_relative_error(*t, w, b));
  }
  EXPECT_LE(worst, 1e-6) << GetParam();
}

INSTANTIATE_TEST_SUITE_P(Plugins, GradientCheck, ::testing::Values("linreg", "logreg", "mlp"));

TEST(Trainer, AliasesAndUnknown) {
  EXPECT_EQ(resolve_trainer("caffe"), "mlp");
  EXPECT_EQ(resolve_trainer("torch"), "mlp");
  EXPECT_EQ(resolve_trainer("tensorflow"), "mlp");
  EXPECT_EQ(resolve_trainer("logreg"), "logreg");
  EXPECT_FALSE(resolve_trainer("theano"));
  try {
    make_trainer("theano", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnknownFramework);
  }
  try {
    make_trainer("mlp", 2, {{"hidden_units", "zero"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidArgument);
  }
}

TEST(Trainer, ModelSizes) {
  EXPECT_EQ(make_trainer("linreg", 3)->model_size(), 4u);
  EXPECT_EQ(make_trainer("logreg", 2)->model_size(), 3u);
  EXPECT_EQ(make_trainer("mlp", 2, {{"hidden_units", "8"}})->model_size(), 8u * 2 + 16 + 1);
}

TEST(Trainer, InitDeterministicInSeed) {
  auto t = make_trainer("mlp", 3);
  EXPECT_EQ(t->init_weights(7), t->init_weights(7));
  EXPECT_NE(t->init_weights(7), t->init_weights(8));
}

TEST(Trainer, RegisterCustomPlugin) {
  register_trainer("const0", [](std::size_t dim, const Hyperparams&) {
    return make_trainer("linreg", dim);
  });
  register_alias("my-framework", "const0");
  EXPECT_EQ(resolve_trainer("my-framework"), "const0");
  EXPECT_EQ(make_trainer("my-framework", 2)->model_size(), 3u);
}

TEST(Trainer, LogregFullBatchDescentReachesHighAccuracy) {
  auto data = storage::make_separable_dataset(2000, 2, 3);
  auto t = make_trainer("logreg", 2);
  auto w = t->init_weights(1);
  std::vector<double> g(w.size());
  Batch b{data.features.data(), data.labels.data(), data.samples, 2};
  for (int i = 0; i < 500; ++i) {
    t->gradient(w, b, g);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= 2.0 * g[j];
  }
  EXPECT_GE(t->metrics(w, b).accuracy, 0.98);
}
