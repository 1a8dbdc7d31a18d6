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

#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "dlaas/common/net.hpp"

namespace dlaas::api {

// The server could not be reached at all (refused, reset, timed out).
class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HttpResult {
  unsigned status = 0;
  std::string content_type;
  std::string body;
};

struct WsClose {
  unsigned code = 0;
  std::string reason;
};

// Small blocking client for the REST + websocket API. One connection per call.
class ApiClient {
 public:
  ApiClient(net::Endpoint server, std::string token = {},
            std::chrono::milliseconds timeout = std::chrono::seconds(30));

  HttpResult request(const std::string& method, const std::string& target,
                     const std::string& body = {});
  // Non-2xx turns into dlaas::Error with the code from the error body.
  nlohmann::json call(const std::string& method, const std::string& target,
                      const nlohmann::json& body = nullptr);
  // Raw body of a successful GET (archives, logs).
  std::string get_raw(const std::string& target);

  // Opens a websocket and hands every text frame to `on_frame` until the
  // server closes; returning false from on_frame closes from our side.
  // A refused upgrade throws dlaas::Error like call().
  WsClose stream(const std::string& target, const std::function<bool(const std::string&)>& on_frame);

  const net::Endpoint& server() const { return server_; }

 private:
  net::Endpoint server_;
  std::string token_;
  std::chrono::milliseconds timeout_;
};

}  // namespace dlaas::api
