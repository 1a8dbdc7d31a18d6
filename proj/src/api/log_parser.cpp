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

#include "dlaas/api/log_parser.hpp"

#include <cmath>
#include <mutex>

#include <nlohmann/json.hpp>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::api {

std::string MetricRecord::to_json() const {
  return nlohmann::json{{"iteration", iteration},         {"loss", loss},
                        {"accuracy", accuracy},           {"learning_rate", learning_rate},
                        {"wallclock_ms", wallclock_ms},   {"learner_id", learner_id}}
      .dump();
}

namespace {

// Next space-separated token of `s` starting at `pos`.
std::string_view next_token(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && s[pos] == ' ') ++pos;
  const std::size_t start = pos;
  while (pos < s.size() && s[pos] != ' ') ++pos;
  return s.substr(start, pos - start);
}

bool finite_double(std::string_view tok, double& out) {
  return parse_double(tok, out) && std::isfinite(out);
}

struct ParserTable {
  std::mutex mu;
  std::vector<std::pair<std::string, ParserFactory>> entries;
};

ParserTable& parser_table() {
  static ParserTable* t = [] {
    auto* t = new ParserTable;
    t->entries.emplace_back("metric", [] { return std::make_unique<MetricLineParser>(); });
    return t;
  }();
  return *t;
}

}  // namespace

std::optional<MetricRecord> MetricLineParser::parse(std::string_view line,
                                                    std::int64_t learner_id) const {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t pos = 0;
  MetricRecord r;
  r.learner_id = learner_id;
  if (next_token(line, pos) != "ITER" || !parse_int64(next_token(line, pos), r.iteration) ||
      r.iteration < 0) {
    return std::nullopt;
  }
  if (next_token(line, pos) != "LOSS" || !finite_double(next_token(line, pos), r.loss)) {
    return std::nullopt;
  }
  if (next_token(line, pos) != "ACC" || !finite_double(next_token(line, pos), r.accuracy)) {
    return std::nullopt;
  }
  if (next_token(line, pos) != "LR" || !finite_double(next_token(line, pos), r.learning_rate)) {
    return std::nullopt;
  }
  if (next_token(line, pos) != "TS" || !parse_int64(next_token(line, pos), r.wallclock_ms)) {
    return std::nullopt;
  }
  if (!next_token(line, pos).empty()) return std::nullopt;
  return r;
}

void register_parser(const std::string& name, ParserFactory factory) {
  auto& t = parser_table();
  std::lock_guard lock(t.mu);
  for (auto& [n, f] : t.entries) {
    if (n == name) {
      f = std::move(factory);
      return;
    }
  }
  t.entries.emplace_back(name, std::move(factory));
}

std::vector<std::string> parser_names() {
  auto& t = parser_table();
  std::lock_guard lock(t.mu);
  std::vector<std::string> out;
  for (const auto& [n, f] : t.entries) out.push_back(n);
  return out;
}

std::unique_ptr<LineParser> make_parser(const std::string& name) {
  auto& t = parser_table();
  std::lock_guard lock(t.mu);
  for (const auto& [n, f] : t.entries) {
    if (n == name) return f();
  }
  throw Error(Errc::kNotFound, "no log parser named '" + name + "'");
}

std::pair<std::int64_t, std::string_view> split_learner_prefix(std::string_view line) {
  constexpr std::string_view kPrefix = "[learner-";
  if (line.substr(0, kPrefix.size()) != kPrefix) return {0, line};
  const auto close = line.find("] ", kPrefix.size());
  if (close == std::string_view::npos) return {0, line};
  std::int64_t id = 0;
  if (!parse_int64(line.substr(kPrefix.size(), close - kPrefix.size()), id) || id < 0) {
    return {0, line};
  }
  return {id, line.substr(close + 2)};
}

LogStreamParser::LogStreamParser(std::vector<std::string> parsers) {
  if (parsers.empty()) parsers = parser_names();
  for (const auto& n : parsers) parsers_.push_back(make_parser(n));
}

std::optional<MetricRecord> LogStreamParser::feed(std::string_view line) {
  try {
    auto [learner, rest] = split_learner_prefix(line);
    for (const auto& p : parsers_) {
      auto r = p->parse(rest, learner);
      if (!r) continue;
      auto it = last_iteration_.find(r->learner_id);
      if (it != last_iteration_.end() && r->iteration <= it->second) {
        ++replayed_;
        return std::nullopt;
      }
      last_iteration_[r->learner_id] = r->iteration;
      ++parsed_;
      return r;
    }
  } catch (...) {
    // A custom parser misbehaved; the stream goes on.
  }
  ++skipped_;
  return std::nullopt;
}

std::vector<MetricRecord> LogStreamParser::feed_all(std::string_view text) {
  std::vector<MetricRecord> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    if (auto r = feed(text.substr(start, nl - start))) out.push_back(*r);
    start = nl + 1;
  }
  return out;
}

}  // namespace dlaas::api
