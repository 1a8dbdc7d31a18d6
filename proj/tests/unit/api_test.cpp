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

#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "dlaas/api/archive.hpp"
#include "dlaas/api/client.hpp"
#include "dlaas/api/server.hpp"
#include "dlaas/common/bytes.hpp"
#include "dlaas/common/error.hpp"
#include "dlaas/learner/checkpoint.hpp"
#include "api_fixture.hpp"

namespace dlaas::api {
namespace {

using namespace std::chrono_literals;
using nlohmann::json;
using testing::ApiFixture;
using testing::definition_text;
using testing::small_definition;
using testing::StackFixture;

bool terminal(const std::string& s) { return s == "COMPLETED" || s == "FAILED" || s == "HALTED"; }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  } catch (const std::exception& e) {
    ADD_FAILURE() << e.what();
  }
  return Errc::kInternal;
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status_for(Errc::kNotFound), 404u);
  EXPECT_EQ(http_status_for(Errc::kModelNotFound), 404u);
  EXPECT_EQ(http_status_for(Errc::kSchemaError), 400u);
  EXPECT_EQ(http_status_for(Errc::kInvalidOverride), 400u);
  EXPECT_EQ(http_status_for(Errc::kModelInUse), 409u);
  EXPECT_EQ(http_status_for(Errc::kInvalidState), 409u);
  EXPECT_EQ(http_status_for(Errc::kUnauthorized), 401u);
  EXPECT_EQ(http_status_for(Errc::kIoFailure), 503u);
  EXPECT_EQ(http_status_for(Errc::kInternal), 500u);
}

TEST(Api, HealthNeedsNoTokenButEverythingElseDoes) {
  ApiFixture a;
  auto anon = a.client("");
  EXPECT_EQ(anon.request("GET", "/v1/health").status, 200u);
  auto r = anon.request("GET", "/v1/models");
  EXPECT_EQ(r.status, 401u);
  EXPECT_EQ(json::parse(r.body)["code"], "UNAUTHORIZED");
  EXPECT_EQ(a.client("wrong").request("GET", "/v1/models").status, 401u);
  EXPECT_EQ(a.client().request("GET", "/v1/models").status, 200u);
  EXPECT_EQ(anon.request("GET", "/v1/models?token=s3cret").status, 200u);
}

TEST(Api, ModelRoutes) {
  ApiFixture a;
  auto c = a.client();
  EXPECT_EQ(c.call("GET", "/v1/models")["models"].size(), 0u);
  const auto id = a.deploy(c, 1);
  EXPECT_TRUE(std::regex_match(id, std::regex("model-[0-9a-f]{12}"))) << id;

  auto m = c.call("GET", "/v1/models/" + id);
  EXPECT_EQ(m["model_id"], id);
  EXPECT_EQ(m["framework"], "logreg");
  EXPECT_EQ(m["learners"], 1);
  auto list = c.call("GET", "/v1/models")["models"];
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["model_id"], id);

  auto updated = StackFixture::manifest("logreg", "train", 3);
  updated.description = "three learners";
  auto u = c.call("PUT", "/v1/models/" + id, {{"manifest", registry::serialize_manifest(updated)}});
  EXPECT_EQ(u["learners"], 3);

  // base64 definition is accepted and stored byte-exact
  const std::string def = definition_text(small_definition());
  auto id2 = c.call("POST", "/v1/models",
                    {{"manifest", registry::serialize_manifest(updated)},
                     {"definition_base64", base64_encode(to_bytes(def))}})["model_id"]
                 .get<std::string>();
  EXPECT_EQ(a.f.stack.registry().get_model(id2).definition, to_bytes(def));

  auto bad = c.request("POST", "/v1/models", R"({"manifest": "name: [unclosed"})");
  EXPECT_EQ(bad.status, 400u);
  EXPECT_EQ(c.request("POST", "/v1/models", "not json").status, 400u);
  EXPECT_EQ(c.request("POST", "/v1/models", R"({"manifest": 3})").status, 400u);
  EXPECT_EQ(c.request("POST", "/v1/models",
                      json{{"manifest", registry::serialize_manifest(updated)},
                           {"definition_base64", "@@@"}}.dump())
                .status,
            400u);

  EXPECT_EQ(c.request("DELETE", "/v1/models/" + id).status, 204u);
  auto gone = c.request("GET", "/v1/models/" + id);
  EXPECT_EQ(gone.status, 404u);
  EXPECT_EQ(c.request("PATCH", "/v1/models/" + id2).status, 405u);
  EXPECT_EQ(c.request("GET", "/v2/whatever").status, 404u);
}

TEST(Api, UnknownTrainingIs404) {
  ApiFixture a;
  auto c = a.client();
  for (const char* path : {"/v1/trainings/training-000000000000",
                           "/v1/trainings/training-000000000000/logs",
                           "/v1/trainings/training-000000000000/result"}) {
    auto r = c.request("GET", path);
    EXPECT_EQ(r.status, 404u) << path;
    EXPECT_EQ(json::parse(r.body)["code"], "NOT_FOUND") << path;
  }
  EXPECT_EQ(c.request("POST", "/v1/trainings/training-000000000000/halt").status, 404u);
}

TEST(Api, SubmitValidation) {
  ApiFixture a;
  auto c = a.client();
  const auto id = a.deploy(c, 1);
  EXPECT_EQ(code_of([&] { c.call("POST", "/v1/trainings", {{"model_id", "model-ffffffffffff"}}); }),
            Errc::kModelNotFound);
  EXPECT_EQ(code_of([&] {
              c.call("POST", "/v1/trainings", {{"model_id", id}, {"overrides", {{"learners", 0}}}});
            }),
            Errc::kInvalidOverride);
  EXPECT_EQ(code_of([&] {
              c.call("POST", "/v1/trainings", {{"model_id", id}, {"overrides", {{"epochs", 3}}}});
            }),
            Errc::kInvalidOverride);
  EXPECT_EQ(code_of([&] {
              c.call("POST", "/v1/trainings",
                     {{"model_id", id}, {"overrides", {{"memory", "lots"}}}});
            }),
            Errc::kInvalidOverride);
  auto r = c.request("POST", "/v1/trainings", R"({"model_id": 5})");
  EXPECT_EQ(r.status, 400u);
  EXPECT_EQ(json::parse(r.body)["code"], "SCHEMA_ERROR");
}

TEST(Api, TrainingRunsToCompletionAndResultHasTwoEntries) {
  ApiFixture a;
  auto c = a.client();
  const auto id = a.deploy(c, 1);
  auto sub = c.request("POST", "/v1/trainings",
                       json{{"model_id", id}, {"overrides", {{"learners", 2}, {"memory", "600MiB"}}}}.dump());
  ASSERT_EQ(sub.status, 201u) << sub.body;
  const auto tid = json::parse(sub.body)["training_id"].get<std::string>();
  EXPECT_TRUE(std::regex_match(tid, std::regex("training-[0-9a-f]{12}"))) << tid;

  auto early = c.request("GET", "/v1/trainings/" + tid + "/result");
  if (early.status != 200u) EXPECT_EQ(early.status, 409u);
  EXPECT_EQ(c.request("DELETE", "/v1/models/" + id).status, 409u);

  auto job = a.wait_state(c, tid, terminal);
  ASSERT_EQ(job["state"], "COMPLETED") << job.dump();
  EXPECT_EQ(job["learners"], 2);
  EXPECT_EQ(job["memory_mib"], 600);
  ASSERT_EQ(job["learner_statuses"].size(), 2u);
  for (const auto& s : job["learner_statuses"]) EXPECT_EQ(s["phase"], "DONE");

  const auto tar = c.get_raw("/v1/trainings/" + tid + "/result");
  auto entries = read_tar(to_bytes(tar));
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].name, "model.bin");
  EXPECT_EQ(entries[1].name, "training-log.txt");
  EXPECT_EQ(entries[0].data, a.f.stack.objects().get("results", tid + "/model.bin"));
  EXPECT_NO_THROW(learner::ModelBlob::decode(entries[0].data));

  const auto logs = c.get_raw("/v1/trainings/" + tid + "/logs");
  EXPECT_NE(logs.find("[learner-1] ITER"), std::string::npos);
  auto metrics = c.call("GET", "/v1/trainings/" + tid + "/metrics")["records"];
  ASSERT_GT(metrics.size(), 4u);
  for (const auto& m : metrics) EXPECT_EQ(m.size(), 6u);

  auto list = c.call("GET", "/v1/trainings")["trainings"];
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["training_id"], tid);

  EXPECT_EQ(c.request("DELETE", "/v1/trainings/" + tid).status, 204u);
  EXPECT_EQ(c.request("GET", "/v1/trainings/" + tid).status, 404u);
  EXPECT_EQ(c.request("DELETE", "/v1/models/" + id).status, 204u);
}

TEST(ApiStream, FinishedJobReplaysEveryLineThenClosesNormally) {
  ApiFixture a;
  auto c = a.client();
  const auto tid =
      c.call("POST", "/v1/trainings", {{"model_id", a.deploy(c, 1)}})["training_id"].get<std::string>();
  ASSERT_EQ(a.wait_state(c, tid, terminal)["state"], "COMPLETED");
  const auto text = c.get_raw("/v1/trainings/" + tid + "/logs");
  std::vector<std::string> frames;
  auto close = c.stream("/v1/trainings/" + tid + "/logs", [&](const std::string& s) {
    frames.push_back(s);
    return true;
  });
  EXPECT_EQ(close.code, 1000u);
  std::string joined;
  for (const auto& l : frames) joined += l + "\n";
  EXPECT_EQ(joined, text);
}

TEST(ApiStream, UnknownJobClosesWith4404AndMissingTokenIsRefused) {
  ApiFixture a;
  auto c = a.client();
  int frames = 0;
  auto close = c.stream("/v1/trainings/training-000000000000/logs", [&](const std::string&) {
    ++frames;
    return true;
  });
  EXPECT_EQ(close.code, 4404u);
  EXPECT_EQ(close.reason, "NOT_FOUND: training-000000000000");
  EXPECT_EQ(frames, 0);
  auto anon = a.client("");
  EXPECT_EQ(code_of([&] {
              anon.stream("/v1/trainings/training-000000000000/logs",
                          [](const std::string&) { return true; });
            }),
            Errc::kUnauthorized);
  auto via_query = anon.stream("/v1/trainings/training-000000000000/logs?token=s3cret",
                               [](const std::string&) { return true; });
  EXPECT_EQ(via_query.code, 4404u);
}

TEST(ApiStream, TwoLiveSubscribersSeeTheSameMonotoneMetrics) {
  ApiFixture a;
  auto c = a.client();
  auto def = small_definition();
  def["epochs"] = "12";
  def["step_delay_us"] = "1000";
  const auto tid = c.call("POST", "/v1/trainings", {{"model_id", a.deploy(c, 2, def)}})["training_id"]
                       .get<std::string>();
  a.wait_state(c, tid, [](const std::string& s) { return s == "RUNNING" || terminal(s); });

  std::vector<std::string> s1, s2;
  WsClose c1, c2;
  std::thread t1([&] {
    auto cl = a.client();
    c1 = cl.stream("/v1/trainings/" + tid + "/metrics", [&](const std::string& f) {
      s1.push_back(f);
      return true;
    });
  });
  std::this_thread::sleep_for(150ms);
  std::thread t2([&] {
    auto cl = a.client();
    c2 = cl.stream("/v1/trainings/" + tid + "/metrics", [&](const std::string& f) {
      s2.push_back(f);
      return true;
    });
  });
  t1.join();
  t2.join();
  EXPECT_EQ(c1.code, 1000u);
  EXPECT_EQ(c2.code, 1000u);
  ASSERT_GT(s1.size(), 10u);
  EXPECT_EQ(s1, s2);

  std::map<std::int64_t, std::int64_t> last;
  std::vector<double> loss0;
  for (const auto& f : s1) {
    auto j = json::parse(f);
    ASSERT_EQ(j.size(), 6u) << f;
    const auto lid = j["learner_id"].get<std::int64_t>();
    const auto it = j["iteration"].get<std::int64_t>();
    EXPECT_GT(it, last[lid]);
    last[lid] = it;
    if (lid == 0) loss0.push_back(j["loss"].get<double>());
  }
  EXPECT_EQ(last.size(), 2u);
  // Loss trends down: the mean of the last quarter is below that of the first.
  ASSERT_GE(loss0.size(), 8u);
  const auto q = loss0.size() / 4;
  double first = 0, tail = 0;
  for (std::size_t i = 0; i < q; ++i) {
    first += loss0[i];
    tail += loss0[loss0.size() - 1 - i];
  }
  EXPECT_LT(tail, first);
}

TEST(ApiStream, HaltEndsTheStream) {
  ApiFixture a;
  auto c = a.client();
  auto def = small_definition();
  def["epochs"] = "200";
  def["step_delay_us"] = "2000";
  const auto tid = c.call("POST", "/v1/trainings", {{"model_id", a.deploy(c, 2, def)}})["training_id"]
                       .get<std::string>();
  a.wait_state(c, tid, [](const std::string& s) { return s == "RUNNING"; });
  std::atomic<int> frames{0};
  WsClose close;
  std::thread t([&] {
    auto cl = a.client();
    close = cl.stream("/v1/trainings/" + tid + "/logs", [&](const std::string&) {
      ++frames;
      return true;
    });
  });
  while (frames < 5) std::this_thread::sleep_for(10ms);
  auto h = c.request("POST", "/v1/trainings/" + tid + "/halt");
  EXPECT_EQ(h.status, 202u) << h.body;
  t.join();
  EXPECT_EQ(close.code, 1000u);
  auto job = c.call("GET", "/v1/trainings/" + tid);
  EXPECT_EQ(job["state"], "HALTED");
  EXPECT_EQ(c.request("POST", "/v1/trainings/" + tid + "/halt").status, 409u);
}

TEST(Api, RestartedServerServesTheSameState) {
  StackFixture f;
  f.put_dataset("train", storage::make_separable_dataset(400, 2, 3));
  auto m = f.add_model(StackFixture::manifest("logreg", "train", 1), small_definition());
  auto tid = f.stack.lcm().submit(m);
  json before;
  {
    ApiServer s(f.stack, {});
    s.start();
    ApiClient c(s.endpoint());
    before = c.call("GET", "/v1/trainings/" + tid);
  }
  f.wait_terminal(tid);
  ApiServer s2(f.stack, {});
  s2.start();
  ApiClient c(s2.endpoint());
  auto after = c.call("GET", "/v1/trainings/" + tid);
  EXPECT_EQ(after["training_id"], before["training_id"]);
  EXPECT_EQ(after["created_at"], before["created_at"]);
  EXPECT_EQ(after["state"], "COMPLETED");
  EXPECT_EQ(c.call("GET", "/v1/models")["models"][0]["model_id"], m);
}

TEST(Api, LifecycleManagerDownIs503) {
  StackFixture f;
  ApiOptions o;
  o.retry.base = 1ms;
  ApiServer s(f.stack, o);
  s.start();
  ApiClient c(s.endpoint());
  f.stack.kill_lcm();
  auto r = c.request("GET", "/v1/trainings");
  EXPECT_EQ(r.status, 503u);
  EXPECT_EQ(json::parse(r.body)["code"], "IO_FAILURE");
  EXPECT_EQ(c.request("GET", "/v1/models").status, 200u);
  f.stack.start_lcm();
  EXPECT_EQ(c.request("GET", "/v1/trainings").status, 200u);
}

TEST(Api, StoppedServerRefusesConnections) {
  StackFixture f;
  auto s = std::make_unique<ApiServer>(f.stack, ApiOptions{});
  s->start();
  const auto ep = s->endpoint();
  s.reset();
  ApiClient c(ep, "", 1s);
  EXPECT_THROW(c.request("GET", "/v1/health"), ConnectionError);
}

}  // namespace
}  // namespace dlaas::api
