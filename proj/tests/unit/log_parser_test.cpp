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

#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "dlaas/api/archive.hpp"
#include "dlaas/api/log_parser.hpp"
#include "dlaas/common/error.hpp"

namespace dlaas::api {
namespace {

TEST(MetricLineParser, AcceptsTheGrammar) {
  MetricLineParser p;
  auto r = p.parse("ITER 40 LOSS 0.25 ACC 0.9 LR 0.01 TS 1700000000123", 3);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->iteration, 40);
  EXPECT_DOUBLE_EQ(r->loss, 0.25);
  EXPECT_DOUBLE_EQ(r->accuracy, 0.9);
  EXPECT_DOUBLE_EQ(r->learning_rate, 0.01);
  EXPECT_EQ(r->wallclock_ms, 1700000000123);
  EXPECT_EQ(r->learner_id, 3);
  EXPECT_TRUE(p.parse("ITER 1 LOSS 1e-3 ACC 1 LR 5E-2 TS 0", 0));
}

TEST(MetricLineParser, RejectsEverythingElse) {
  MetricLineParser p;
  for (const char* line : {"", "ITER", "ITER x LOSS 1 ACC 1 LR 1 TS 1",
                           "ITER 1 LOSS nan ACC 1 LR 1 TS 1", "ITER 1 LOSS inf ACC 1 LR 1 TS 1",
                           "ITER 1 LOSS 1 ACC 1 LR 1", "ITER 1 LOSS 1 ACC 1 LR 1 TS 1 extra",
                           "iter 1 loss 1 acc 1 lr 1 ts 1", "checkpoint saved at clock 10",
                           "ITER -1 LOSS 1 ACC 1 LR 1 TS 1"}) {
    EXPECT_FALSE(p.parse(line, 0)) << line;
  }
}

TEST(MetricLineParser, NeverThrowsOnRandomBytes) {
  MetricLineParser p;
  std::mt19937_64 rng(11);
  const std::string alphabet = "ITERLOSACTS 0123456789.-+eEnaif\t\x01\xff";
  for (int i = 0; i < 1000000; ++i) {
    std::string line;
    const int len = static_cast<int>(rng() % 60);
    for (int k = 0; k < len; ++k) line += alphabet[rng() % alphabet.size()];
    EXPECT_NO_THROW(p.parse(line, 0));
  }
}

TEST(LearnerPrefix, Splits) {
  auto [id, rest] = split_learner_prefix("[learner-12] ITER 1");
  EXPECT_EQ(id, 12);
  EXPECT_EQ(rest, "ITER 1");
  auto [id2, rest2] = split_learner_prefix("[ps-0] listening");
  EXPECT_EQ(id2, 0);
  EXPECT_EQ(rest2, "[ps-0] listening");
  EXPECT_EQ(split_learner_prefix("[learner-x] a").first, 0);
}

TEST(LogStreamParser, SkipsGarbageAndKeepsLearnersApart) {
  LogStreamParser p;
  const std::string log =
      "[lcm] STATE RUNNING (deployed)\n"
      "[learner-0] ITER 5 LOSS 0.9 ACC 0.5 LR 0.1 TS 10\n"
      "[learner-1] ITER 5 LOSS 0.8 ACC 0.6 LR 0.1 TS 11\n"
      "[learner-1] some \x01 binary junk\n"
      "[learner-0] ITER 10 LOSS 0.7 ACC 0.7 LR 0.1 TS 12\n"
      "[learner-1] ITER 10 LOSS 0.6 ACC 0.8 LR 0.1 TS 13\n"
      "[learner-0] ITER 5 LOSS 0.9 ACC 0.5 LR 0.1 TS 20\n"  // replay after restart
      "[learner-0] ITER 15 LOSS 0.5 ACC 0.9 LR 0.1 TS 21";
  auto recs = p.feed_all(log);
  ASSERT_EQ(recs.size(), 5u);
  EXPECT_EQ(p.parsed(), 5u);
  EXPECT_EQ(p.replayed(), 1u);
  EXPECT_EQ(p.skipped(), 2u);
  std::map<std::int64_t, std::int64_t> last;
  for (const auto& r : recs) {
    EXPECT_GT(r.iteration, last[r.learner_id]);
    last[r.learner_id] = r.iteration;
  }
  EXPECT_EQ(last[0], 15);
  EXPECT_EQ(last[1], 10);
}

TEST(MetricRecord, JsonHasExactlySixFields) {
  MetricRecord r{7, 0.5, 0.75, 0.125, 99, 2};
  auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.size(), 6u);
  EXPECT_EQ(j["iteration"], 7);
  EXPECT_EQ(j["loss"], 0.5);
  EXPECT_EQ(j["accuracy"], 0.75);
  EXPECT_EQ(j["learning_rate"], 0.125);
  EXPECT_EQ(j["wallclock_ms"], 99);
  EXPECT_EQ(j["learner_id"], 2);
}

class StepParser : public LineParser {
 public:
  std::optional<MetricRecord> parse(std::string_view line, std::int64_t learner) const override {
    if (line.rfind("step=", 0) != 0) return std::nullopt;
    try {
      MetricRecord r;
      r.iteration = std::stoll(std::string(line.substr(5)));
      r.learner_id = learner;
      return r;
    } catch (...) {
      return std::nullopt;
    }
  }
};

TEST(ParserRegistry, CustomParsersPlugIn) {
  register_parser("step-test", [] { return std::make_unique<StepParser>(); });
  auto names = parser_names();
  EXPECT_EQ(names.front(), "metric");
  EXPECT_NE(std::find(names.begin(), names.end(), "step-test"), names.end());
  EXPECT_TRUE(make_parser("step-test"));
  EXPECT_THROW(make_parser("nope"), Error);

  LogStreamParser only_custom({"step-test"});
  EXPECT_TRUE(only_custom.feed("[learner-1] step=3"));
  EXPECT_FALSE(only_custom.feed("[learner-1] ITER 4 LOSS 1 ACC 1 LR 1 TS 1"));
  LogStreamParser all;
  EXPECT_TRUE(all.feed("step=3"));
  EXPECT_TRUE(all.feed("ITER 4 LOSS 1 ACC 1 LR 1 TS 1"));
}

TEST(Tar, RoundTripsAndIsDeterministic) {
  std::vector<ArchiveEntry> in = {{"model.bin", Bytes(1000, 7)}, {"training-log.txt", to_bytes("a\nb\n")}};
  auto tar = write_tar(in);
  EXPECT_EQ(tar.size() % 512, 0u);
  EXPECT_EQ(tar, write_tar(in));
  auto out = read_tar(tar);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].name, "model.bin");
  EXPECT_EQ(out[0].data, in[0].data);
  EXPECT_EQ(out[1].name, "training-log.txt");
  EXPECT_EQ(out[1].data, in[1].data);
  EXPECT_EQ(std::string(reinterpret_cast<const char*>(&tar[257]), 5), "ustar");
}

TEST(Tar, RejectsCorruption) {
  auto tar = write_tar({{"a", to_bytes("hello")}});
  auto bad = tar;
  bad[0] ^= 1;
  try {
    read_tar(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kProtocolError);
  }
  Bytes cut(tar.begin(), tar.begin() + 512 + 100);
  EXPECT_THROW(read_tar(cut), Error);
}

}  // namespace
}  // namespace dlaas::api
