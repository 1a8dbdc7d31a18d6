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
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "dlaas/api/log_parser.hpp"
#include "dlaas/api/server.hpp"
#include "dlaas/cluster/cluster.hpp"
#include "dlaas/common/error.hpp"
#include "dlaas/lcm/stack.hpp"
#include "dlaas/learner/checkpoint.hpp"
#include "dlaas/learner/trainer.hpp"
#include "dlaas/registry/manifest.hpp"
#include "dlaas/storage/dataset.hpp"

namespace py = pybind11;
using namespace dlaas;

namespace {

// Platform in this process, optionally with the REST API in front.
class Platform {
 public:
  Platform(const std::string& data_dir, const std::string& topology, const std::string& token)
      : token_(token) {
    lcm::StackOptions o;
    o.data_dir = data_dir;
    o.nodes = cluster::parse_topology(
        topology.empty() ? "container-count = 2\ncpus = 8\nmemory-mib = 16384\n" : topology);
    stack_ = std::make_unique<lcm::Stack>(o);
  }
  ~Platform() { close(); }

  void close() {
    if (server_) server_->stop();
    server_.reset();
    stack_.reset();
  }

  lcm::Stack& stack() {
    if (!stack_) throw Error(Errc::kInvalidState, "platform closed");
    return *stack_;
  }

  void put_dataset(const std::string& container, const std::string& kind, std::uint64_t samples,
                   std::uint32_t dim, std::uint64_t seed) {
    auto d = kind == "linear" ? storage::make_linear_dataset(samples, dim, seed)
                              : storage::make_separable_dataset(samples, dim, seed);
    stack().objects().put(container, storage::kDatasetKey, d.encode());
  }

  std::string create_model(const std::string& manifest, const py::bytes& definition) {
    const std::string def = definition;
    return stack().registry().create_model(
        registry::parse_manifest(manifest),
        std::span(reinterpret_cast<const std::uint8_t*>(def.data()), def.size()));
  }

  std::vector<std::string> list_models() { return stack().registry().list_models(); }

  std::string get_model(const std::string& id) {
    auto r = stack().registry().get_model(id);
    nlohmann::json j{{"model_id", r.model_id}, {"manifest", registry::to_json(r.manifest)},
                     {"created_at", r.created_at}, {"updated_at", r.updated_at}};
    return j.dump();
  }

  void delete_model(const std::string& id) { stack().registry().delete_model(id); }

  std::string submit(const std::string& model_id, std::optional<std::int64_t> learners,
                     std::optional<std::int64_t> gpus, std::optional<std::int64_t> memory_mib) {
    lcm::Overrides ov;
    ov.learners = learners;
    ov.gpus = gpus;
    ov.memory_mib = memory_mib;
    return stack().lcm().submit(model_id, ov);
  }

  std::string get_job(const std::string& tid) { return stack().lcm().get_job(tid).to_json(); }

  std::vector<std::string> list_jobs() {
    std::vector<std::string> out;
    for (const auto& j : stack().lcm().list_jobs()) out.push_back(j.to_json());
    return out;
  }

  void halt(const std::string& tid) { stack().lcm().halt(tid); }
  void delete_job(const std::string& tid) { stack().lcm().delete_job(tid); }

  std::string wait(const std::string& tid, double timeout_s) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000));
    for (;;) {
      auto j = stack().lcm().get_job(tid);
      if (lcm::is_terminal(j.state) || std::chrono::steady_clock::now() >= deadline) return j.to_json();
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  std::string log(const std::string& tid) {
    std::ifstream in(stack().lcm().log_path(tid), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::vector<double> result_weights(const std::string& container, const std::string& tid) {
    return learner::ModelBlob::decode(stack().objects().get(container, tid + "/model.bin")).weights;
  }

  std::string serve(const std::string& host, std::uint16_t port) {
    if (!server_) {
      api::ApiOptions o;
      o.host = host;
      o.port = port;
      o.token = token_;
      server_ = std::make_unique<api::ApiServer>(stack(), o);
      server_->start();
    }
    return server_->endpoint().str();
  }

 private:
  std::string token_;
  std::unique_ptr<lcm::Stack> stack_;
  std::unique_ptr<api::ApiServer> server_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the dlaas training platform.";

  // Message is "CODE: detail".
  py::register_exception<Error>(m, "DlaasError");

  m.def("parse_manifest", [](const std::string& text) {
    return registry::to_json(registry::parse_manifest(text)).dump();
  });
  m.def("canonical_manifest", [](const std::string& text) {
    return registry::serialize_manifest(registry::parse_manifest(text));
  });
  m.def("parse_metric_line", [](const std::string& line) -> std::optional<std::string> {
    auto [learner, rest] = api::split_learner_prefix(line);
    if (auto r = api::MetricLineParser().parse(rest, learner)) return r->to_json();
    return std::nullopt;
  });
  m.def("parse_log", [](const std::string& text) {
    api::LogStreamParser p;
    std::vector<std::string> out;
    for (const auto& r : p.feed_all(text)) out.push_back(r.to_json());
    return py::make_tuple(out, p.skipped());
  });
  m.def("resolve_trainer", [](const std::string& name) { return learner::resolve_trainer(name); });
  m.def("trainer_loss_and_gradient",
        [](const std::string& name, std::uint32_t dim, const std::vector<double>& w,
           const std::vector<double>& features, const std::vector<double>& labels,
           const std::map<std::string, std::string>& hp) {
          auto t = learner::make_trainer(name, dim, hp);
          if (w.size() != t->model_size()) throw Error(Errc::kInvalidArgument, "weight size mismatch");
          if (features.size() != labels.size() * dim) throw Error(Errc::kInvalidArgument, "feature shape");
          learner::Batch b{features.data(), labels.data(), labels.size(), dim};
          std::vector<double> g(w.size());
          t->gradient(w, b, g);
          return py::make_tuple(t->loss(w, b), g);
        },
        py::arg("name"), py::arg("dim"), py::arg("weights"), py::arg("features"), py::arg("labels"),
        py::arg("hyperparams") = std::map<std::string, std::string>{});

  py::class_<Platform>(m, "Platform")
      .def(py::init<const std::string&, const std::string&, const std::string&>(),
           py::arg("data_dir"), py::arg("topology") = "", py::arg("token") = "")
      .def("close", &Platform::close, py::call_guard<py::gil_scoped_release>())
      .def("put_dataset", &Platform::put_dataset, py::arg("container"), py::arg("kind") = "separable",
           py::arg("samples") = 1000, py::arg("dim") = 2, py::arg("seed") = 1)
      .def("create_model", &Platform::create_model, py::arg("manifest"), py::arg("definition"))
      .def("list_models", &Platform::list_models)
      .def("get_model", &Platform::get_model)
      .def("delete_model", &Platform::delete_model)
      .def("submit", &Platform::submit, py::arg("model_id"), py::arg("learners") = py::none(),
           py::arg("gpus") = py::none(), py::arg("memory_mib") = py::none())
      .def("get_job", &Platform::get_job)
      .def("list_jobs", &Platform::list_jobs)
      .def("halt", &Platform::halt)
      .def("delete_job", &Platform::delete_job)
      .def("wait", &Platform::wait, py::arg("training_id"), py::arg("timeout_s") = 60.0,
           py::call_guard<py::gil_scoped_release>())
      .def("log", &Platform::log)
      .def("result_weights", &Platform::result_weights, py::arg("container"), py::arg("training_id"))
      .def("serve", &Platform::serve, py::arg("host") = "127.0.0.1", py::arg("port") = 0);
}
