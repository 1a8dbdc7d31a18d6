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

#include "dlaas/api/server.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>
#include <openssl/crypto.h>
#include <spdlog/spdlog.h>

#include "dlaas/api/archive.hpp"
#include "dlaas/api/log_parser.hpp"
#include "dlaas/common/bytes.hpp"
#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"
#include "dlaas/lcm/tasks.hpp"
#include "dlaas/registry/manifest.hpp"

namespace dlaas::api {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

ApiOptions api_options_from_env(ApiOptions base) {
  if (const char* t = std::getenv("DLAAS_TOKEN")) base.token = t;
  if (const char* a = std::getenv("DLAAS_LISTEN_ADDR"); a && *a) {
    auto ep = net::Endpoint::parse(a);
    base.host = ep.host;
    base.port = ep.port;
  }
  return base;
}

unsigned http_status_for(Errc code) {
  switch (code) {
    case Errc::kNotFound:
    case Errc::kModelNotFound:
      return 404;
    case Errc::kSchemaError:
    case Errc::kSyntaxError:
    case Errc::kInvalidArgument:
    case Errc::kInvalidOverride:
    case Errc::kUnknownFramework:
    case Errc::kDatasetMalformed:
      return 400;
    case Errc::kModelInUse:
    case Errc::kInvalidState:
    case Errc::kAlreadyExists:
    case Errc::kVersionConflict:
      return 409;
    case Errc::kUnauthorized:
    case Errc::kAuthFailed:
      return 401;
    case Errc::kIoFailure:
    case Errc::kCoordUnavailable:
    case Errc::kInsufficientResources:
      return 503;
    default:
      return 500;
  }
}

namespace {

HttpResponse json_response(unsigned status, const json& j) {
  return {status, "application/json", j.dump()};
}

HttpResponse error_response(Errc code, const std::string& message) {
  return json_response(http_status_for(code),
                       {{"code", std::string(to_string(code))}, {"message", message}});
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

void split_target(const std::string& target, std::vector<std::string>& path,
                  std::map<std::string, std::string>& query) {
  const auto q = target.find('?');
  for (const auto& seg : split(target.substr(0, q), '/')) {
    if (!seg.empty()) path.push_back(url_decode(seg));
  }
  if (q == std::string::npos) return;
  for (const auto& kv : split(target.substr(q + 1), '&')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    query[url_decode(kv.substr(0, eq))] =
        eq == std::string::npos ? std::string() : url_decode(kv.substr(eq + 1));
  }
}

json parse_body(const std::string& body) {
  try {
    auto j = json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) throw Error(Errc::kSchemaError, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaError, std::string("request body: ") + e.what());
  }
}

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(Errc::kSchemaError, std::string("'") + key + "' must be a string");
  }
  return j[key].get<std::string>();
}

json model_json(const registry::ModelRecord& r) {
  const auto& m = r.manifest;
  return {{"model_id", r.model_id},
          {"name", m.name},
          {"version", m.version},
          {"framework", m.framework.name},
          {"learners", m.learners},
          {"gpus", m.gpus},
          {"memory_mib", m.memory_mib},
          {"manifest", registry::to_json(m)},
          {"manifest_text", registry::serialize_manifest(m)},
          {"definition_size", r.definition.size()},
          {"created_at", r.created_at},
          {"updated_at", r.updated_at}};
}

json job_json(const lcm::TrainingJob& j, const std::vector<learner::LearnerStatus>& statuses) {
  json learners = json::array();
  for (const auto& s : statuses) {
    learners.push_back({{"learner_id", s.learner_id},
                        {"phase", std::string(learner::to_string(s.phase))},
                        {"iteration", s.iteration},
                        {"epochs_done", s.epochs_done},
                        {"incarnation", s.incarnation},
                        {"halted", s.halted},
                        {"last_update", s.updated_ms},
                        {"message", s.message}});
  }
  return {{"training_id", j.training_id},
          {"model_id", j.model_id},
          {"state", std::string(lcm::to_string(j.state))},
          {"learners", j.learners},
          {"gpus", j.gpus},
          {"memory_mib", j.memory_mib},
          {"trainer", j.trainer},
          {"ps_endpoints", j.ps_endpoints},
          {"generation", j.generation},
          {"created_at", j.created_at},
          {"updated_at", j.updated_at},
          {"completed_at", j.completed_at},
          {"message", j.message},
          {"results", j.results},
          {"learner_statuses", learners}};
}

lcm::Overrides parse_overrides(const json& body) {
  lcm::Overrides ov;
  if (!body.contains("overrides") || body["overrides"].is_null()) return ov;
  const auto& o = body["overrides"];
  if (!o.is_object()) throw Error(Errc::kInvalidOverride, "overrides must be an object");
  for (const auto& [k, v] : o.items()) {
    if (k == "learners" || k == "gpus") {
      if (!v.is_number_integer()) throw Error(Errc::kInvalidOverride, k + " must be an integer");
      (k == "learners" ? ov.learners : ov.gpus) = v.get<std::int64_t>();
    } else if (k == "memory" || k == "memory_mib") {
      if (v.is_number_integer()) {
        ov.memory_mib = v.get<std::int64_t>();
      } else if (v.is_string()) {
        try {
          ov.memory_mib = registry::parse_memory_mib(v.get<std::string>());
        } catch (const Error&) {
          throw Error(Errc::kInvalidOverride, "bad memory value");
        }
      } else {
        throw Error(Errc::kInvalidOverride, "memory must be an integer or a size string");
      }
    } else {
      throw Error(Errc::kInvalidOverride, "cannot override '" + k + "'");
    }
  }
  return ov;
}

}  // namespace

struct ApiServer::Conn {
  int fd = -1;
  std::thread thread;
  std::atomic<bool> done{false};
};

ApiServer::ApiServer(lcm::Stack& stack, ApiOptions opts)
    : stack_(stack),
      opts_(std::move(opts)),
      hub_(
          [&stack](const std::string& tid) -> std::optional<LogHub::JobInfo> {
            auto r = stack.coord().try_read(lcm::job_record_path(tid));
            if (!r) return std::nullopt;
            auto job = lcm::TrainingJob::from_json(r->first);
            return LogHub::JobInfo{lcm::job_log_path(stack.options().lcm.log_root, tid),
                                   lcm::is_terminal(job.state)};
          },
          opts_.tail_poll) {}

ApiServer::~ApiServer() { stop(); }

void ApiServer::start() {
  if (listener_) return;
  listener_ = std::make_unique<net::Listener>(opts_.host, opts_.port);
  stop_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("api listening on {}", listener_->endpoint().str());
}

net::Endpoint ApiServer::endpoint() const {
  if (!listener_) throw Error(Errc::kInvalidState, "api server not started");
  return listener_->endpoint();
}

void ApiServer::stop() {
  stop_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  hub_.stop();
  std::vector<std::shared_ptr<Conn>> conns;
  {
    std::lock_guard lock(conns_mu_);
    conns.swap(conns_);
  }
  for (auto& c : conns) {
    if (!c->done) ::shutdown(c->fd, SHUT_RDWR);
  }
  for (auto& c : conns) {
    if (c->thread.joinable()) c->thread.join();
  }
  if (listener_) listener_->close();
  listener_.reset();
}

void ApiServer::reap() {
  std::lock_guard lock(conns_mu_);
  for (auto it = conns_.begin(); it != conns_.end();) {
    if ((*it)->done) {
      (*it)->thread.join();
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

void ApiServer::accept_loop() {
  while (!stop_) {
    auto sock = listener_->accept([this] { return stop_.load(); });
    if (!sock) continue;
    reap();
    auto conn = std::make_shared<Conn>();
    conn->fd = sock->release();
    std::lock_guard lock(conns_mu_);
    conns_.push_back(conn);
    conn->thread = std::thread([this, conn] { serve(conn); });
  }
}

bool ApiServer::authorized(const std::string& authorization,
                           const std::map<std::string, std::string>& query) const {
  if (opts_.token.empty()) return true;
  auto eq = [&](const std::string& given) {
    return given.size() == opts_.token.size() &&
           CRYPTO_memcmp(given.data(), opts_.token.data(), given.size()) == 0;
  };
  constexpr std::string_view kBearer = "Bearer ";
  if (authorization.rfind(kBearer, 0) == 0 && eq(authorization.substr(kBearer.size()))) {
    return true;
  }
  auto it = query.find("token");
  return it != query.end() && eq(it->second);
}

HttpResponse ApiServer::handle(const std::string& method, const std::string& target,
                               const std::string& authorization, const std::string& body) {
  std::vector<std::string> path;
  std::map<std::string, std::string> query;
  split_target(target, path, query);
  const bool health = path == std::vector<std::string>{"v1", "health"};
  if (!health && !authorized(authorization, query)) {
    return error_response(Errc::kUnauthorized, "missing or wrong bearer token");
  }
  try {
    return with_backoff(opts_.retry, [&] { return route(method, path, query, body); });
  } catch (const Error& e) {
    return error_response(e.code(), e.detail());
  } catch (const std::exception& e) {
    return error_response(Errc::kInternal, e.what());
  }
}

HttpResponse ApiServer::route(const std::string& method, const std::vector<std::string>& p,
                              const std::map<std::string, std::string>& query,
                              const std::string& body) {
  (void)query;
  auto need_lcm = [&] {
    auto l = stack_.lcm_shared();
    if (!l) throw Error(Errc::kIoFailure, "lifecycle manager unavailable");
    return l;
  };
  auto bad_method = [&] {
    return json_response(405, {{"code", "INVALID_ARGUMENT"},
                               {"message", method + " not allowed here"}});
  };
  if (p.size() < 2 || p[0] != "v1") return error_response(Errc::kNotFound, "no such route");

  if (p[1] == "health" && p.size() == 2) return json_response(200, {{"status", "ok"}});

  auto& reg = stack_.registry();
  if (p[1] == "models") {
    if (p.size() == 2) {
      if (method == "GET") {
        json models = json::array();
        for (const auto& id : reg.list_models()) {
          try {
            models.push_back(model_json(reg.get_model(id)));
          } catch (const Error& e) {
            if (e.code() != Errc::kNotFound) throw;
          }
        }
        return json_response(200, {{"models", models}});
      }
      if (method == "POST") {
        auto j = parse_body(body);
        auto manifest = registry::parse_manifest(required_string(j, "manifest"));
        Bytes def;
        if (j.contains("definition_base64")) {
          try {
            def = base64_decode(required_string(j, "definition_base64"));
          } catch (const Error& e) {
            if (e.code() != Errc::kInvalidArgument) throw;
            throw Error(Errc::kSchemaError, "definition_base64: " + e.detail());
          }
        } else if (j.contains("definition")) {
          auto s = required_string(j, "definition");
          def.assign(s.begin(), s.end());
        }
        auto id = reg.create_model(manifest, def);
        return json_response(201, {{"model_id", id}});
      }
      return bad_method();
    }
    if (p.size() == 3) {
      const auto& id = p[2];
      if (method == "GET") return json_response(200, model_json(reg.get_model(id)));
      if (method == "PUT") {
        auto j = parse_body(body);
        reg.update_model(id, registry::parse_manifest(required_string(j, "manifest")));
        return json_response(200, model_json(reg.get_model(id)));
      }
      if (method == "DELETE") {
        reg.delete_model(id);
        return {204, "application/json", ""};
      }
      return bad_method();
    }
    return error_response(Errc::kNotFound, "no such route");
  }

  if (p[1] == "trainings") {
    auto lcm = need_lcm();
    if (p.size() == 2) {
      if (method == "GET") {
        json jobs = json::array();
        for (const auto& j : lcm->list_jobs()) {
          jobs.push_back(job_json(j, lcm->learner_statuses(j.training_id)));
        }
        return json_response(200, {{"trainings", jobs}});
      }
      if (method == "POST") {
        auto j = parse_body(body);
        auto tid = lcm->submit(required_string(j, "model_id"), parse_overrides(j));
        return json_response(201, {{"training_id", tid}});
      }
      return bad_method();
    }
    const auto& tid = p[2];
    if (p.size() == 3) {
      if (method == "GET") {
        auto job = lcm->get_job(tid);
        return json_response(200, job_json(job, lcm->learner_statuses(tid)));
      }
      if (method == "DELETE") {
        lcm->delete_job(tid);
        return {204, "application/json", ""};
      }
      return bad_method();
    }
    if (p.size() == 4 && p[3] == "halt") {
      if (method != "POST") return bad_method();
      lcm->halt(tid);
      return json_response(202, {{"training_id", tid}, {"state", "HALT_REQUESTED"}});
    }
    if (p.size() == 4 && p[3] == "result") {
      if (method != "GET") return bad_method();
      auto job = lcm->get_job(tid);
      if (!lcm::is_terminal(job.state)) {
        throw Error(Errc::kInvalidState, "job is " + std::string(lcm::to_string(job.state)));
      }
      auto manifest = registry::parse_manifest(job.manifest);
      const auto* rs = manifest.results_store();
      if (!rs || job.results.empty()) throw Error(Errc::kNotFound, "no results for " + tid);
      std::vector<ArchiveEntry> entries;
      for (const char* name : {"model.bin", "training-log.txt"}) {
        for (const auto& key : job.results) {
          if (key == tid + "/" + name) {
            entries.push_back({name, stack_.objects().get(*rs->results_container, key)});
          }
        }
      }
      auto tar = write_tar(entries);
      return {200, "application/x-tar", std::string(tar.begin(), tar.end())};
    }
    if (p.size() == 4 && (p[3] == "logs" || p[3] == "metrics")) {
      if (method != "GET") return bad_method();
      auto job = lcm->get_job(tid);
      std::string text;
      {
        std::ifstream in(lcm->log_path(tid), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      }
      if (p[3] == "logs") return {200, "text/plain; charset=utf-8", text};
      LogStreamParser parser;
      json records = json::array();
      for (const auto& r : parser.feed_all(text)) records.push_back(json::parse(r.to_json()));
      return json_response(200, {{"records", records}, {"skipped", parser.skipped()}});
    }
  }
  return error_response(Errc::kNotFound, "no such route");
}

void ApiServer::serve(std::shared_ptr<Conn> conn) {
  asio::io_context ioc;
  tcp::socket sock(ioc);
  beast::error_code ec;
  sock.assign(tcp::v4(), conn->fd, ec);
  if (ec) {
    ::close(conn->fd);
    conn->done = true;
    return;
  }
  beast::flat_buffer buf;
  try {
    for (;;) {
      http::request_parser<http::string_body> parser;
      parser.body_limit(256ull << 20);
      http::read(sock, buf, parser, ec);
      if (ec) break;
      auto req = parser.release();
      const std::string target(req.target());

      if (websocket::is_upgrade(req)) {
        std::vector<std::string> path;
        std::map<std::string, std::string> query;
        split_target(target, path, query);
        const bool logs_route = path.size() == 4 && path[0] == "v1" && path[1] == "trainings" &&
                                (path[3] == "logs" || path[3] == "metrics");
        HttpResponse reject;
        if (!authorized(std::string(req[http::field::authorization]), query)) {
          reject = error_response(Errc::kUnauthorized, "missing or wrong bearer token");
        } else if (!logs_route) {
          reject = error_response(Errc::kNotFound, "no websocket route");
        }
        if (reject.status != 200) {
          http::response<http::string_body> res{static_cast<http::status>(reject.status),
                                                req.version()};
          res.set(http::field::content_type, reject.content_type);
          res.body() = reject.body;
          res.prepare_payload();
          http::write(sock, res, ec);
          break;
        }
        websocket::stream<tcp::socket&> ws(sock);
        ws.accept(req, ec);
        if (ec) break;
        const std::string tid = path[2];
        const bool metrics = path[3] == "metrics";
        std::shared_ptr<LineQueue> q;
        try {
          q = hub_.subscribe(tid);
        } catch (const Error& e) {
          ws.close(websocket::close_reason(static_cast<websocket::close_code>(4404), std::string("NOT_FOUND: ") + tid), ec);
          break;
        }
        LogStreamParser mparser;
        ws.text(true);
        bool ok = true;
        while (ok && !stop_) {
          auto line = q->pop(std::chrono::milliseconds(200));
          if (!line) {
            if (q->closed() && q->size() == 0) break;
            continue;
          }
          if (metrics) {
            if (auto r = mparser.feed(*line)) ws.write(asio::buffer(r->to_json()), ec);
          } else {
            ws.write(asio::buffer(*line), ec);
          }
          ok = !ec;
        }
        hub_.unsubscribe(tid, q);
        if (ok) {
          ws.close(stop_ ? websocket::close_reason(websocket::close_code::going_away)
                         : websocket::close_reason(websocket::close_code::normal, "end of log"),
                   ec);
        }
        break;
      }

      auto r = handle(std::string(req.method_string()), target,
                      std::string(req[http::field::authorization]), req.body());
      http::response<http::string_body> res{static_cast<http::status>(r.status), req.version()};
      res.set(http::field::server, "dlaas");
      if (!r.body.empty() || r.status != 204) res.set(http::field::content_type, r.content_type);
      res.keep_alive(req.keep_alive());
      res.body() = std::move(r.body);
      res.prepare_payload();
      http::write(sock, res, ec);
      if (ec || !req.keep_alive() || stop_) break;
    }
  } catch (const std::exception& e) {
    spdlog::warn("api connection: {}", e.what());
  }
  sock.shutdown(tcp::socket::shutdown_both, ec);
  sock.close(ec);
  conn->done = true;
}

}  // namespace dlaas::api
