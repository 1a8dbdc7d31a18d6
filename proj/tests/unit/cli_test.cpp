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

#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "api_fixture.hpp"
#include "dlaas/cli/cli.hpp"
#include "dlaas/common/error.hpp"
#include "temp_dir.hpp"

namespace dlaas::cli {
namespace {

using nlohmann::json;
using testing::ApiFixture;
using testing::StackFixture;
using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

class Cli {
 public:
  explicit Cli(std::map<std::string, std::string> env = {}) : env_(std::move(env)) {
    if (!env_.count("HOME")) env_["HOME"] = home_.path().string();
  }

  Result operator()(std::vector<std::string> args) {
    args.insert(args.begin(), "dlaas");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run(static_cast<int>(argv.size()), argv.data(), out, err,
                   [this](const std::string& k) -> std::optional<std::string> {
                     auto it = env_.find(k);
                     if (it == env_.end()) return std::nullopt;
                     return it->second;
                   });
    return {code, out.str(), err.str()};
  }

  std::map<std::string, std::string>& env() { return env_; }
  const TempDir& home() const { return home_; }

 private:
  TempDir home_;
  std::map<std::string, std::string> env_;
};

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

TEST(CliConfig, FileThenEnvThenFlags) {
  Cli cli;
  write(cli.home() / ".dlaas/config",
        "# local\nendpoint = http://127.0.0.1:1\ntoken = from-file\noutput = json\n");
  auto env_fn = [&](const std::string& k) -> std::optional<std::string> {
    auto it = cli.env().find(k);
    if (it == cli.env().end()) return std::nullopt;
    return it->second;
  };
  auto c = load_config(env_fn);
  EXPECT_EQ(c.endpoint, "http://127.0.0.1:1");
  EXPECT_EQ(c.token, "from-file");
  EXPECT_EQ(c.output, "json");
  cli.env()["DLAAS_TOKEN"] = "from-env";
  EXPECT_EQ(load_config(env_fn).token, "from-env");
  EXPECT_EQ(load_config(env_fn).endpoint, "http://127.0.0.1:1");

  EXPECT_THROW(parse_config_text("colour = red\n"), Error);
  EXPECT_THROW(parse_config_text("just words\n"), Error);
  EXPECT_EQ(endpoint_from_url("http://localhost:9000/").port, 9000);
  EXPECT_EQ(endpoint_from_url("localhost:9000").host, "localhost");
  EXPECT_THROW(endpoint_from_url("https://localhost:9000"), Error);
}

TEST(CliUsage, UnknownSubcommandExits3WithUsage) {
  Cli cli;
  auto r = cli({"frobnicate"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"model"}).code, kExitUsage);
  EXPECT_EQ(cli({"train"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "m", "--learners", "zero"}).code, kExitUsage);
  EXPECT_EQ(cli({"model", "deploy", "/no/such/file", "/no/such/def"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(CliUsage, UnreachableServerOrBadConfigExits2) {
  Cli cli;
  // Port 1 on loopback: nothing listens there.
  auto r = cli({"--endpoint", "http://127.0.0.1:1", "model", "list"});
  EXPECT_EQ(r.code, kExitConnectivity) << r.err;
  EXPECT_EQ(cli({"--endpoint", "nonsense", "model", "list"}).code, kExitConnectivity);
  cli.env()["DLAAS_OUTPUT"] = "yaml";
  EXPECT_EQ(cli({"--endpoint", "http://127.0.0.1:1", "model", "list"}).code, kExitConnectivity);
  cli.env().erase("DLAAS_OUTPUT");
  write(cli.home() / ".dlaas/config", "bogus\n");
  EXPECT_EQ(cli({"model", "list"}).code, kExitConnectivity);
}

class CliEndToEnd : public ::testing::Test {
 protected:
  CliEndToEnd()
      : cli({{"DLAAS_ENDPOINT", "http://" + a.server.endpoint().str()}, {"DLAAS_TOKEN", "s3cret"}}) {
    auto m = StackFixture::manifest("logreg", "train", 1);
    write(files.path() / "manifest.yml", registry::serialize_manifest(m));
    write(files.path() / "definition.txt", testing::definition_text(testing::small_definition()));
  }

  std::string deploy() {
    auto r = cli({"model", "deploy", (files / "manifest.yml").string(), (files / "definition.txt").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return trimmed(r.out);
  }

  std::string wait_terminal(const std::string& tid) {
    for (int i = 0; i < 3000; ++i) {
      auto r = cli({"-o", "json", "jobs", "get", tid});
      auto state = json::parse(r.out)["state"].get<std::string>();
      if (state == "COMPLETED" || state == "FAILED" || state == "HALTED") return state;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return "TIMEOUT";
  }

  ApiFixture a;
  TempDir files;
  Cli cli;
};

TEST_F(CliEndToEnd, DeployTrainFollowDownload) {
  const auto model = deploy();
  EXPECT_TRUE(std::regex_match(model, std::regex("model-[0-9a-f]{12}"))) << model;

  auto list = cli({"model", "list"});
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find(model), std::string::npos);

  auto t = cli({"train", model, "--learners", "4", "--memory", "600MiB"});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto tid = trimmed(t.out);
  EXPECT_TRUE(std::regex_match(tid, std::regex("training-[0-9a-f]{12}"))) << tid;

  // --follow on a live job returns once the job ends; afterwards it replays
  // the whole log.
  auto live = cli({"logs", tid, "--follow"});
  EXPECT_EQ(live.code, 0) << live.err;
  ASSERT_EQ(wait_terminal(tid), "COMPLETED");
  auto replay = cli({"logs", tid, "--follow"});
  EXPECT_EQ(replay.code, 0);
  EXPECT_EQ(replay.out, a.client().get_raw("/v1/trainings/" + tid + "/logs"));
  EXPECT_EQ(cli({"logs", tid}).out, replay.out);

  auto job = json::parse(cli({"-o", "json", "jobs", "get", tid}).out);
  EXPECT_EQ(job["learners"], 4);
  EXPECT_EQ(job["memory_mib"], 600);

  auto d = cli({"download", tid, (files / "out").string()});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_TRUE(std::filesystem::exists(files / "out/model.bin"));
  EXPECT_TRUE(std::filesystem::exists(files / "out/training-log.txt"));
  EXPECT_EQ(std::filesystem::file_size(files / "out/model.bin"),
            a.f.stack.objects().get("results", tid + "/model.bin").size());

  auto metrics = cli({"metrics", tid});
  EXPECT_EQ(metrics.code, 0);
  EXPECT_NE(metrics.out.find("\"learner_id\":3"), std::string::npos);

  EXPECT_EQ(cli({"jobs", "delete", tid}).code, 0);
  EXPECT_EQ(cli({"model", "delete", model}).code, 0);
}

TEST_F(CliEndToEnd, JsonModePrintsOneDocumentPerCommand) {
  const auto model = deploy();
  const auto tid = trimmed(cli({"train", model}).out);
  ASSERT_EQ(wait_terminal(tid), "COMPLETED");
  const std::vector<std::vector<std::string>> commands = {
      {"health"},
      {"model", "list"},
      {"model", "get", model},
      {"model", "update", model, (files / "manifest.yml").string()},
      {"jobs", "list"},
      {"jobs", "get", tid},
      {"logs", tid},
      {"logs", tid, "--follow"},
      {"metrics", tid},
      {"metrics", tid, "--follow"},
      {"download", tid, (files / "json-out").string()},
      {"jobs", "get", "training-000000000000"},  // error, still one document
      {"jobs", "halt", tid},                     // 409, still one document
  };
  for (auto args : commands) {
    args.insert(args.begin(), {"--output", "json"});
    auto r = cli(args);
    json doc;
    EXPECT_NO_THROW(doc = json::parse(r.out)) << args[2] << ": " << r.out;
    EXPECT_TRUE(doc.is_object()) << args[2];
  }
  auto deploy_json = cli({"-o", "json", "model", "deploy", (files / "manifest.yml").string(),
                          (files / "definition.txt").string()});
  EXPECT_TRUE(json::parse(deploy_json.out).contains("model_id"));
  auto train_json = cli({"-o", "json", "train", model});
  EXPECT_TRUE(json::parse(train_json.out).contains("training_id"));
}

TEST_F(CliEndToEnd, ApiErrorsExit1) {
  auto r = cli({"jobs", "get", "training-000000000000"});
  EXPECT_EQ(r.code, kExitApi);
  EXPECT_NE(r.err.find("NOT_FOUND"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"model", "delete", "model-000000000000"}).code, kExitApi);
  EXPECT_EQ(cli({"train", "model-000000000000"}).code, kExitApi);
  EXPECT_EQ(cli({"logs", "training-000000000000", "--follow"}).code, kExitApi);
  EXPECT_EQ(cli({"--token", "wrong", "model", "list"}).code, kExitApi);
}

TEST_F(CliEndToEnd, HaltFromTheCommandLine) {
  auto def = testing::small_definition();
  def["epochs"] = "200";
  def["step_delay_us"] = "2000";
  write(files.path() / "slow.txt", testing::definition_text(def));
  auto model = trimmed(cli({"model", "deploy", (files / "manifest.yml").string(), (files / "slow.txt").string()}).out);
  const auto tid = trimmed(cli({"train", model, "--learners", "2"}).out);
  for (int i = 0; i < 500; ++i) {
    if (json::parse(cli({"-o", "json", "jobs", "get", tid}).out)["state"] == "RUNNING") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  auto h = cli({"jobs", "halt", tid});
  EXPECT_EQ(h.code, 0) << h.err;
  EXPECT_EQ(wait_terminal(tid), "HALTED");
  auto del = cli({"model", "delete", model});
  EXPECT_EQ(del.code, 0) << del.err;
}

}  // namespace
}  // namespace dlaas::cli
