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

#include "dlaas/cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dlaas/api/archive.hpp"
#include "dlaas/api/client.hpp"
#include "dlaas/common/bytes.hpp"
#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::cli {

using nlohmann::json;

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

CliConfig parse_config_text(std::string_view text, CliConfig base) {
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string_view line = raw;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::kInvalidArgument, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "endpoint") {
      base.endpoint = value;
    } else if (key == "token") {
      base.token = value;
    } else if (key == "output") {
      base.output = value;
    } else {
      throw Error(Errc::kInvalidArgument,
                  "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return base;
}

CliConfig load_config(const EnvFn& env) {
  CliConfig c;
  std::filesystem::path path;
  if (auto p = env("DLAAS_CONFIG")) {
    path = *p;
  } else if (auto home = env("HOME")) {
    path = std::filesystem::path(*home) / ".dlaas" / "config";
  }
  if (!path.empty() && std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    c = parse_config_text(ss.str(), c);
  }
  if (auto v = env("DLAAS_ENDPOINT")) c.endpoint = *v;
  if (auto v = env("DLAAS_TOKEN")) c.token = *v;
  if (auto v = env("DLAAS_OUTPUT")) c.output = *v;
  return c;
}

net::Endpoint endpoint_from_url(const std::string& url) {
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) {
    rest = rest.substr(7);
  } else if (rest.find("://") != std::string::npos) {
    throw Error(Errc::kInvalidArgument, "only http:// endpoints are supported: " + url);
  }
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  return net::Endpoint::parse(rest);
}

namespace {

std::string read_local(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << cells[i];
      if (i + 1 < cells.size()) out << std::string(w[i] - cells[i].size() + 2, ' ');
    }
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string str(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

void print_fields(std::ostream& out, const json& obj, const std::vector<std::string>& skip = {}) {
  for (const auto& [k, v] : obj.items()) {
    if (std::find(skip.begin(), skip.end(), k) != skip.end()) continue;
    out << k << ": " << str(v) << "\n";
  }
}

std::string tpath(const std::string& tid, const std::string& tail = {}) {
  return "/v1/trainings/" + tid + tail;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const EnvFn& env) {
  CLI::App app{"dlaas: command line client for the training service", "dlaas"};
  app.require_subcommand(1);
  std::string endpoint_flag, token_flag, output_flag;
  app.add_option("--endpoint", endpoint_flag, "API endpoint, http://host:port");
  app.add_option("--token", token_flag, "bearer token");
  app.add_option("-o,--output", output_flag, "table or json")
      ->check(CLI::IsMember({"table", "json"}));

  auto* model = app.add_subcommand("model", "deploy and manage models");
  model->require_subcommand(1);
  std::string manifest_path, definition_path, model_id;
  auto* m_deploy = model->add_subcommand("deploy", "upload a manifest and model definition");
  m_deploy->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);
  m_deploy->add_option("definition", definition_path)->required()->check(CLI::ExistingFile);
  auto* m_list = model->add_subcommand("list", "list models");
  auto* m_get = model->add_subcommand("get", "show one model");
  m_get->add_option("model_id", model_id)->required();
  auto* m_update = model->add_subcommand("update", "replace a model's manifest");
  m_update->add_option("model_id", model_id)->required();
  m_update->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);
  auto* m_delete = model->add_subcommand("delete", "delete a model");
  m_delete->add_option("model_id", model_id)->required();

  auto* train = app.add_subcommand("train", "start a training job");
  std::optional<std::int64_t> learners, gpus;
  std::string memory;
  train->add_option("model_id", model_id)->required();
  train->add_option("--learners", learners, "number of learners")->check(CLI::PositiveNumber);
  train->add_option("--gpus", gpus, "GPUs per learner")->check(CLI::NonNegativeNumber);
  train->add_option("--memory", memory, "memory per learner, e.g. 8000MiB");

  auto* jobs = app.add_subcommand("jobs", "monitor and control training jobs");
  jobs->require_subcommand(1);
  std::string tid;
  auto* j_list = jobs->add_subcommand("list", "list training jobs");
  auto* j_get = jobs->add_subcommand("get", "show one job");
  j_get->add_option("training_id", tid)->required();
  auto* j_halt = jobs->add_subcommand("halt", "halt a running job");
  j_halt->add_option("training_id", tid)->required();
  auto* j_delete = jobs->add_subcommand("delete", "delete a finished job");
  j_delete->add_option("training_id", tid)->required();

  bool follow = false;
  auto* logs = app.add_subcommand("logs", "print a job's log");
  logs->add_option("training_id", tid)->required();
  logs->add_flag("-f,--follow", follow, "stream until the job ends");
  auto* metrics = app.add_subcommand("metrics", "print a job's parsed metrics");
  metrics->add_option("training_id", tid)->required();
  metrics->add_flag("-f,--follow", follow, "stream until the job ends");

  std::string dir;
  auto* download = app.add_subcommand("download", "fetch the trained model and log");
  download->add_option("training_id", tid)->required();
  download->add_option("dir", dir)->required();

  auto* health = app.add_subcommand("health", "check the API server");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitUsage;
  }

  CliConfig cfg;
  net::Endpoint ep;
  try {
    cfg = load_config(env);
    if (!endpoint_flag.empty()) cfg.endpoint = endpoint_flag;
    if (!token_flag.empty()) cfg.token = token_flag;
    if (!output_flag.empty()) cfg.output = output_flag;
    if (cfg.output != "table" && cfg.output != "json") {
      throw Error(Errc::kInvalidArgument, "output must be table or json, got '" + cfg.output + "'");
    }
    ep = endpoint_from_url(cfg.endpoint);
  } catch (const Error& e) {
    err << "config error: " << e.detail() << "\n";
    return kExitConnectivity;
  }
  const bool as_json = cfg.output == "json";
  api::ApiClient client(ep, cfg.token);

  try {
    if (m_deploy->parsed()) {
      const auto manifest = read_local(manifest_path);
      const auto def = read_local(definition_path);
      auto r = client.call("POST", "/v1/models",
                           {{"manifest", manifest}, {"definition_base64", base64_encode(to_bytes(def))}});
      if (as_json) out << r.dump() << "\n";
      else out << r["model_id"].get<std::string>() << "\n";
    } else if (m_list->parsed()) {
      auto r = client.call("GET", "/v1/models");
      if (as_json) {
        out << r.dump() << "\n";
      } else {
        std::vector<std::vector<std::string>> rows;
        for (const auto& m : r["models"]) {
          rows.push_back({str(m["model_id"]), str(m["name"]), str(m["version"]),
                          str(m["framework"]), str(m["learners"])});
        }
        print_table(out, {"MODEL_ID", "NAME", "VERSION", "FRAMEWORK", "LEARNERS"}, rows);
      }
    } else if (m_get->parsed()) {
      auto r = client.call("GET", "/v1/models/" + model_id);
      if (as_json) out << r.dump() << "\n";
      else print_fields(out, r, {"manifest", "manifest_text"});
    } else if (m_update->parsed()) {
      auto r = client.call("PUT", "/v1/models/" + model_id, {{"manifest", read_local(manifest_path)}});
      if (as_json) out << r.dump() << "\n";
      else out << r["model_id"].get<std::string>() << "\n";
    } else if (m_delete->parsed()) {
      client.call("DELETE", "/v1/models/" + model_id);
      if (as_json) out << json{{"deleted", model_id}}.dump() << "\n";
      else out << "deleted " << model_id << "\n";
    } else if (train->parsed()) {
      json ov = json::object();
      if (learners) ov["learners"] = *learners;
      if (gpus) ov["gpus"] = *gpus;
      if (!memory.empty()) ov["memory"] = memory;
      json body{{"model_id", model_id}};
      if (!ov.empty()) body["overrides"] = ov;
      auto r = client.call("POST", "/v1/trainings", body);
      if (as_json) out << r.dump() << "\n";
      else out << r["training_id"].get<std::string>() << "\n";
    } else if (j_list->parsed()) {
      auto r = client.call("GET", "/v1/trainings");
      if (as_json) {
        out << r.dump() << "\n";
      } else {
        std::vector<std::vector<std::string>> rows;
        for (const auto& j : r["trainings"]) {
          rows.push_back({str(j["training_id"]), str(j["model_id"]), str(j["state"]),
                          str(j["learners"]), str(j["message"])});
        }
        print_table(out, {"TRAINING_ID", "MODEL_ID", "STATE", "LEARNERS", "MESSAGE"}, rows);
      }
    } else if (j_get->parsed()) {
      auto r = client.call("GET", tpath(tid));
      if (as_json) {
        out << r.dump() << "\n";
      } else {
        print_fields(out, r, {"learner_statuses"});
        std::vector<std::vector<std::string>> rows;
        for (const auto& s : r["learner_statuses"]) {
          rows.push_back({str(s["learner_id"]), str(s["phase"]), str(s["iteration"]),
                          str(s["epochs_done"]), str(s["message"])});
        }
        out << "\n";
        print_table(out, {"LEARNER", "PHASE", "ITERATION", "EPOCHS", "MESSAGE"}, rows);
      }
    } else if (j_halt->parsed()) {
      auto r = client.call("POST", tpath(tid, "/halt"));
      if (as_json) out << r.dump() << "\n";
      else out << "halt requested for " << tid << "\n";
    } else if (j_delete->parsed()) {
      client.call("DELETE", tpath(tid));
      if (as_json) out << json{{"deleted", tid}}.dump() << "\n";
      else out << "deleted " << tid << "\n";
    } else if (logs->parsed()) {
      if (!follow) {
        auto text = client.get_raw(tpath(tid, "/logs"));
        if (as_json) out << json{{"training_id", tid}, {"log", text}}.dump() << "\n";
        else out << text;
      } else {
        json lines = json::array();
        auto close = client.stream(tpath(tid, "/logs"), [&](const std::string& l) {
          if (as_json) lines.push_back(l);
          else out << l << "\n" << std::flush;
          return true;
        });
        if (close.code != 1000) throw Error(Errc::kNotFound, close.reason);
        if (as_json) out << json{{"training_id", tid}, {"lines", lines}}.dump() << "\n";
      }
    } else if (metrics->parsed()) {
      json records = json::array();
      if (!follow) {
        records = client.call("GET", tpath(tid, "/metrics"))["records"];
        if (!as_json) {
          for (const auto& r : records) out << r.dump() << "\n";
        }
      } else {
        auto close = client.stream(tpath(tid, "/metrics"), [&](const std::string& f) {
          if (as_json) records.push_back(json::parse(f));
          else out << f << "\n" << std::flush;
          return true;
        });
        if (close.code != 1000) throw Error(Errc::kNotFound, close.reason);
      }
      if (as_json) out << json{{"training_id", tid}, {"records", records}}.dump() << "\n";
    } else if (download->parsed()) {
      auto tar = client.get_raw(tpath(tid, "/result"));
      auto entries = api::read_tar(to_bytes(tar));
      std::filesystem::create_directories(dir);
      json files = json::array();
      for (const auto& e : entries) {
        const auto path = std::filesystem::path(dir) / std::filesystem::path(e.name).filename();
        std::ofstream f(path, std::ios::binary);
        f.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size()));
        if (!f) throw Error(Errc::kIoFailure, "cannot write " + path.string());
        files.push_back(path.string());
        if (!as_json) out << path.string() << "\n";
      }
      if (as_json) out << json{{"training_id", tid}, {"files", files}}.dump() << "\n";
    } else if (health->parsed()) {
      auto r = client.call("GET", "/v1/health");
      if (as_json) out << r.dump() << "\n";
      else out << str(r["status"]) << "\n";
    }
  } catch (const api::ConnectionError& e) {
    err << "connection error: " << e.what() << "\n";
    if (as_json) out << json{{"error", {{"code", "CONNECTION"}, {"message", e.what()}}}}.dump() << "\n";
    return kExitConnectivity;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (as_json) {
      out << json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.detail()}}}}.dump()
          << "\n";
    }
    return kExitApi;
  }
  return kExitOk;
}

}  // namespace dlaas::cli
