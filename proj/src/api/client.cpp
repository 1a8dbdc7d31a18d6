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

#include "dlaas/api/client.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "dlaas/common/error.hpp"

namespace dlaas::api {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

[[noreturn]] void throw_api_error(unsigned status, const std::string& body) {
  try {
    auto j = json::parse(body);
    if (j.is_object() && j.contains("code") && j["code"].is_string()) {
      throw Error(errc_from_string(j["code"].get<std::string>()),
                  j.value("message", std::string()));
    }
  } catch (const json::exception&) {
  }
  // No error body (e.g. a refused websocket upgrade): go by the status.
  Errc code = Errc::kInternal;
  switch (status) {
    case 400: code = Errc::kInvalidArgument; break;
    case 401: code = Errc::kUnauthorized; break;
    case 404: code = Errc::kNotFound; break;
    case 409: code = Errc::kInvalidState; break;
    case 503: code = Errc::kIoFailure; break;
    default: break;
  }
  throw Error(code, "HTTP " + std::to_string(status) + (body.empty() ? "" : ": " + body));
}

void connect(beast::tcp_stream& s, const net::Endpoint& ep, std::chrono::milliseconds timeout) {
  tcp::resolver resolver(s.get_executor());
  beast::error_code ec;
  auto results = resolver.resolve(ep.host, std::to_string(ep.port), ec);
  if (ec) throw ConnectionError("cannot resolve " + ep.host + ": " + ec.message());
  s.expires_after(timeout);
  s.connect(results, ec);
  if (ec) throw ConnectionError("cannot connect to " + ep.str() + ": " + ec.message());
}

}  // namespace

ApiClient::ApiClient(net::Endpoint server, std::string token, std::chrono::milliseconds timeout)
    : server_(std::move(server)), token_(std::move(token)), timeout_(timeout) {}

HttpResult ApiClient::request(const std::string& method, const std::string& target,
                              const std::string& body) {
  asio::io_context ioc;
  beast::tcp_stream s(ioc);
  connect(s, server_, timeout_);
  http::request<http::string_body> req{http::string_to_verb(method), target, 11};
  req.set(http::field::host, server_.host);
  if (!token_.empty()) req.set(http::field::authorization, "Bearer " + token_);
  if (!body.empty()) req.set(http::field::content_type, "application/json");
  req.body() = body;
  req.prepare_payload();
  req.keep_alive(false);

  beast::error_code ec;
  s.expires_after(timeout_);
  http::write(s, req, ec);
  if (ec) throw ConnectionError("write to " + server_.str() + ": " + ec.message());
  beast::flat_buffer buf;
  http::response_parser<http::string_body> parser;
  parser.body_limit(1ull << 30);
  http::read(s, buf, parser, ec);
  if (ec) throw ConnectionError("read from " + server_.str() + ": " + ec.message());
  auto res = parser.release();
  s.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), std::string(res[http::field::content_type]), std::move(res.body())};
}

json ApiClient::call(const std::string& method, const std::string& target, const json& body) {
  auto r = request(method, target, body.is_null() ? std::string() : body.dump());
  if (r.status < 200 || r.status >= 300) throw_api_error(r.status, r.body);
  if (r.body.empty()) return json::object();
  try {
    return json::parse(r.body);
  } catch (const json::exception& e) {
    throw Error(Errc::kProtocolError, std::string("response is not JSON: ") + e.what());
  }
}

std::string ApiClient::get_raw(const std::string& target) {
  auto r = request("GET", target);
  if (r.status < 200 || r.status >= 300) throw_api_error(r.status, r.body);
  return std::move(r.body);
}

WsClose ApiClient::stream(const std::string& target,
                          const std::function<bool(const std::string&)>& on_frame) {
  asio::io_context ioc;
  websocket::stream<beast::tcp_stream> ws(ioc);
  connect(beast::get_lowest_layer(ws), server_, timeout_);
  beast::get_lowest_layer(ws).expires_never();
  ws.set_option(websocket::stream_base::decorator([this](websocket::request_type& req) {
    if (!token_.empty()) req.set(http::field::authorization, "Bearer " + token_);
  }));

  websocket::response_type res;
  beast::error_code ec;
  ws.handshake(res, server_.host, target, ec);
  if (ec == websocket::error::upgrade_declined) {
    // The declined response is not handed back; the plain GET of the same
    // target fails the same way and carries the error body.
    auto r = request("GET", target);
    throw_api_error(r.status >= 300 ? r.status : 400, r.body);
  }
  if (ec) throw ConnectionError("websocket handshake with " + server_.str() + ": " + ec.message());

  beast::flat_buffer buf;
  for (;;) {
    buf.clear();
    ws.read(buf, ec);
    if (ec == websocket::error::closed) break;
    if (ec) throw ConnectionError("websocket read: " + ec.message());
    if (!on_frame(beast::buffers_to_string(buf.data()))) {
      ws.close(websocket::close_code::normal, ec);
      return {static_cast<unsigned>(websocket::close_code::normal), "client closed"};
    }
  }
  const auto& cr = ws.reason();
  return {static_cast<unsigned>(cr.code), std::string(cr.reason.data(), cr.reason.size())};
}

}  // namespace dlaas::api
