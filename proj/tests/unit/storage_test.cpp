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

#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "dlaas/common/error.hpp"
#include "dlaas/registry/manifest.hpp"
#include "dlaas/storage/dataset.hpp"
#include "dlaas/storage/object_store.hpp"
#include "temp_dir.hpp"

using namespace dlaas;
using namespace dlaas::storage;
using dlaas::testing::TempDir;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::kInternal;
}

registry::ModelManifest manifest_for(const std::string& data, const char* results = nullptr) {
  registry::ModelManifest m;
  m.name = "m";
  registry::DataStore ds;
  ds.id = "s";
  ds.type = "local";
  ds.training_container = data;
  if (results) ds.results_container = results;
  ds.connection = registry::StoreCredentials{"https://auth.local/v1", "u", "p"};
  m.data_stores.push_back(ds);
  m.framework.name = "logreg";
  return m;
}

// Counts sleeps instead of sleeping.
struct SleepLog {
  std::vector<std::chrono::milliseconds> delays;
  Sleeper fn() {
    return [this](std::chrono::milliseconds d) { delays.push_back(d); };
  }
};

}  // namespace

TEST(ObjectStore, PutGetRoundTripAndEtag) {
  TempDir dir;
  FsObjectStore s(dir.path());
  Bytes blob = {0, 1, 2, 255, 10, 13};
  auto etag = s.put("c", "a/b.bin", blob);
  EXPECT_EQ(s.get("c", "a/b.bin"), blob);
  EXPECT_EQ(etag, etag_of(blob));
  EXPECT_EQ(etag.size(), 64u);
  EXPECT_EQ(s.put("c", "a/b.bin", blob), etag);
  // Known SHA-256 vector.
  EXPECT_EQ(etag_of(to_bytes("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ObjectStore, ListByPrefixSorted) {
  TempDir dir;
  FsObjectStore s(dir.path());
  s.put("c", "data/x", "x");
  s.put("c", "ckpt/2", "2");
  s.put("c", "ckpt/1", "1");
  EXPECT_EQ(s.list("c", "ckpt/"), (std::vector<std::string>{"ckpt/1", "ckpt/2"}));
  EXPECT_EQ(s.list("c").size(), 3u);
}

TEST(ObjectStore, MissingAndInvalid) {
  TempDir dir;
  FsObjectStore s(dir.path());
  EXPECT_EQ(code_of([&] { s.get("nope", "k"); }), Errc::kNotFound);
  s.put("c", "k", "v");
  EXPECT_EQ(code_of([&] { s.get("c", "missing"); }), Errc::kNotFound);
  EXPECT_EQ(code_of([&] { s.list("nope"); }), Errc::kNotFound);
  EXPECT_EQ(code_of([&] { s.put("Bad!", "k", "v"); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([&] { s.put("c", "../escape", "v"); }), Errc::kInvalidArgument);
  s.remove("c", "k");
  EXPECT_FALSE(s.exists("c", "k"));
  EXPECT_EQ(code_of([&] { s.remove("c", "k"); }), Errc::kNotFound);
}

TEST(ObjectStore, ConcurrentWritersNeverTear) {
  TempDir dir;
  FsObjectStore s(dir.path());
  const std::string a(64 * 1024, 'a'), b(64 * 1024, 'b');
  s.put("c", "k", a);
  std::atomic<bool> stop{false};
  std::thread writer([&] {
    for (int i = 0; i < 200; ++i) s.put("c", "k", i % 2 ? a : b);
    stop = true;
  });
  int reads = 0;
  while (!stop) {
    auto got = to_string(s.get("c", "k"));
    ASSERT_TRUE(got == a || got == b);
    ++reads;
  }
  writer.join();
  EXPECT_GT(reads, 0);
  EXPECT_EQ(s.list("c"), std::vector<std::string>{"k"});
}

TEST(ObjectStore, Authentication) {
  TempDir dir;
  FsObjectStore s(dir.path());
  s.authenticate({"https://x/auth", "u", "p"});
  EXPECT_EQ(code_of([&] { s.authenticate({"", "u", "p"}); }), Errc::kAuthFailed);
  s.set_accounts({{"u", "p"}});
  EXPECT_EQ(code_of([&] { s.authenticate({"https://x/auth", "u", "wrong"}); }), Errc::kAuthFailed);
}

TEST(Dataset, EncodeDecodeRoundTrip) {
  auto d = make_separable_dataset(100, 3, 1);
  auto bytes = d.encode();
  EXPECT_EQ(bytes.size(), 19u + 8 * 100 * 4);
  EXPECT_EQ(Dataset::decode(bytes), d);
}

TEST(Dataset, CorruptHeadersRejected) {
  auto good = make_separable_dataset(10, 2, 3).encode();
  Rng rng(99);
  int rejected = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Bytes b = good;
    if (trial % 5 == 0) {
      b.resize(rng.below(b.size()));
    } else {
      std::size_t at = rng.below(19);
      b[at] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      // Relabelling binary data as real is the one header edit that still
      // describes a valid file.
      if (at == 18 && b[18] == 0) continue;
    }
    EXPECT_EQ(code_of([&] { Dataset::decode(b); }), Errc::kDatasetMalformed) << trial;
    ++rejected;
  }
  EXPECT_GT(rejected, 450);
}

TEST(LoadTrainingData, MaterializesDescriptor) {
  TempDir dir;
  FsObjectStore s(dir / "store");
  auto d = make_separable_dataset(1000, 2, 5);
  s.put("train", kDatasetKey, d.encode());
  auto desc = load_training_data(s, manifest_for("train"), dir / "local");
  EXPECT_EQ(desc.samples, 1000u);
  EXPECT_EQ(desc.dim, 2u);
  EXPECT_EQ(read_local_dataset(desc.local_path), d);
}

TEST(LoadTrainingData, Errors) {
  TempDir dir;
  FsObjectStore s(dir / "store");
  EXPECT_EQ(code_of([&] { load_training_data(s, manifest_for("missing"), dir / "l"); }),
            Errc::kNotFound);
  s.put("bad", kDatasetKey, "DLDSgarbage");
  EXPECT_EQ(code_of([&] { load_training_data(s, manifest_for("bad"), dir / "l"); }),
            Errc::kDatasetMalformed);
  s.set_accounts({{"someone-else", "x"}});
  EXPECT_EQ(code_of([&] { load_training_data(s, manifest_for("bad"), dir / "l"); }),
            Errc::kAuthFailed);
}

TEST(StoreResults, WritesTwoKeys) {
  TempDir dir;
  FsObjectStore s(dir.path());
  auto keys = store_results(s, manifest_for("d", "out"), "training-abc", to_bytes("M"),
                            to_bytes("L"));
  EXPECT_EQ(keys, (std::vector<std::string>{"training-abc/model.bin",
                                            "training-abc/training-log.txt"}));
  EXPECT_EQ(to_string(s.get("out", "training-abc/model.bin")), "M");
}

TEST(StoreResults, NoResultsContainerIsNoop) {
  TempDir dir;
  FsObjectStore s(dir.path());
  EXPECT_TRUE(store_results(s, manifest_for("d"), "t", {}, {}).empty());
}

TEST(StoreResults, TransientFailuresRetriedWithBackoff) {
  TempDir dir;
  FsObjectStore inner(dir.path());
  FaultInjectingStore s(inner);
  s.fail_next_puts(2);
  SleepLog sleeps;
  auto keys = store_results(s, manifest_for("d", "out"), "t", to_bytes("M"), to_bytes("L"), {},
                            sleeps.fn());
  EXPECT_EQ(keys.size(), 2u);
  // 2 failures + 1 success for the model, 1 for the log.
  EXPECT_EQ(s.put_attempts(), 4);
  using std::chrono::milliseconds;
  EXPECT_EQ(sleeps.delays, (std::vector<milliseconds>{milliseconds(100), milliseconds(200)}));
}

TEST(StoreResults, GivesUpAfterFiveAttempts) {
  TempDir dir;
  FsObjectStore inner(dir.path());
  FaultInjectingStore s(inner);
  s.fail_next_puts(100);
  SleepLog sleeps;
  EXPECT_EQ(code_of([&] {
              store_results(s, manifest_for("d", "out"), "t", {}, {}, {}, sleeps.fn());
            }),
            Errc::kIoFailure);
  EXPECT_EQ(s.put_attempts(), 5);
  EXPECT_EQ(sleeps.delays.size(), 4u);
  EXPECT_EQ(sleeps.delays.back(), std::chrono::milliseconds(800));
}
