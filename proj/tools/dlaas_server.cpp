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

// Runs one local platform (coordination store, object store, registry,
// simulated cluster, LCM) behind the REST API until SIGINT/SIGTERM.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dlaas/api/server.hpp"
#include "dlaas/cluster/cluster.hpp"
#include "dlaas/common/error.hpp"
#include "dlaas/coord/server.hpp"
#include "dlaas/lcm/stack.hpp"

int main(int argc, char** argv) {
  using namespace dlaas;
  CLI::App app{"dlaas_server: local training platform with REST API", "dlaas_server"};
  std::string data_dir = "dlaas-data";
  std::string listen;
  std::string topology;
  std::string coord_listen;
  std::string token;
  std::string log_level = "info";
  if (const char* d = std::getenv("DLAAS_DATA_DIR"); d && *d) data_dir = d;
  app.add_option("--data-dir", data_dir, "objects, logs and task work dirs (env DLAAS_DATA_DIR)");
  app.add_option("--listen", listen, "host:port for the API (env DLAAS_LISTEN_ADDR, default 127.0.0.1:8080)");
  app.add_option("--topology", topology, "cluster topology file (default: 2 nodes, 8 cpus, 16 GiB)")
      ->check(CLI::ExistingFile);
  app.add_option("--coord-listen", coord_listen, "also serve the coordination store on host:port");
  app.add_option("--token", token, "bearer token (env DLAAS_TOKEN)");
  app.add_option("--log-level", log_level)->check(CLI::IsMember({"debug", "info", "warn", "error"}));
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  try {
    lcm::StackOptions so;
    so.data_dir = data_dir;
    so.nodes = topology.empty() ? cluster::parse_topology("container-count = 2\ncpus = 8\nmemory-mib = 16384\n")
                                : cluster::load_topology(topology);
    lcm::Stack stack(so);

    api::ApiOptions ao = api::api_options_from_env({"127.0.0.1", 8080});
    if (!listen.empty()) {
      auto ep = net::Endpoint::parse(listen);
      ao.host = ep.host;
      ao.port = ep.port;
    }
    if (!token.empty()) ao.token = token;
    std::unique_ptr<coord::CoordServer> coord_server;
    if (!coord_listen.empty()) {
      auto ep = net::Endpoint::parse(coord_listen);
      coord_server = std::make_unique<coord::CoordServer>(stack.coord_store(), ep.host, ep.port);
      std::cout << "coordination store on " << coord_server->endpoint().str() << std::endl;
    }
    api::ApiServer server(stack, ao);
    server.start();
    std::cout << "listening on " << server.endpoint().str() << std::endl;

    int sig = 0;
    sigwait(&sigs, &sig);
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
    if (coord_server) coord_server->stop();
  } catch (const Error& e) {
    std::cerr << "dlaas_server: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
