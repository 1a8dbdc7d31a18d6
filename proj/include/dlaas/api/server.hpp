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

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dlaas/api/log_hub.hpp"
#include "dlaas/common/net.hpp"
#include "dlaas/common/retry.hpp"
#include "dlaas/lcm/stack.hpp"

namespace dlaas::api {

struct ApiOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 = ephemeral
  // Bearer token; empty disables authentication.
  std::string token;
  std::chrono::milliseconds tail_poll{50};
  // Internal calls failing with IO_FAILURE / COORDSTORE_UNAVAILABLE.
  BackoffPolicy retry{std::chrono::milliseconds(50), 2.0, 3};
};

// Reads DLAAS_TOKEN and DLAAS_LISTEN_ADDR (host:port) over `base`.
ApiOptions api_options_from_env(ApiOptions base = {});

struct HttpResponse {
  unsigned status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// HTTP status for an error code.
unsigned http_status_for(Errc code);

// REST + websocket front of a Stack. Keeps no job state of its own.
// Routes (all under /v1, bearer auth unless noted):
//   GET  /v1/health                      (no auth)
//   POST /v1/models                      {"manifest", "definition" | "definition_base64"}
//   GET  /v1/models, GET|PUT|DELETE /v1/models/{id}
//   POST /v1/trainings                   {"model_id", "overrides": {learners, gpus, memory}}
//   GET  /v1/trainings, GET|DELETE /v1/trainings/{id}
//   POST /v1/trainings/{id}/halt
//   GET  /v1/trainings/{id}/result       tar of model.bin + training-log.txt
//   GET  /v1/trainings/{id}/logs         text, or websocket: one frame per line
//   GET  /v1/trainings/{id}/metrics      JSON list, or websocket: one record per frame
// Websockets also accept ?token=...; a missing job closes with 4404.
class ApiServer {
 public:
  ApiServer(lcm::Stack& stack, ApiOptions opts);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  void start();
  void stop();
  net::Endpoint endpoint() const;

  // Routing without the transport, for tests and embedding.
  HttpResponse handle(const std::string& method, const std::string& target,
                      const std::string& authorization, const std::string& body);

  LogHub& logs() { return hub_; }

 private:
  struct Conn;
  void accept_loop();
  void serve(std::shared_ptr<Conn> conn);
  HttpResponse route(const std::string& method, const std::vector<std::string>& path,
                     const std::map<std::string, std::string>& query, const std::string& body);
  bool authorized(const std::string& authorization,
                  const std::map<std::string, std::string>& query) const;
  void reap();

  lcm::Stack& stack_;
  ApiOptions opts_;
  LogHub hub_;
  std::unique_ptr<net::Listener> listener_;
  std::atomic<bool> stop_{false};
  std::thread acceptor_;
  std::mutex conns_mu_;
  std::vector<std::shared_ptr<Conn>> conns_;
};

}  // namespace dlaas::api
