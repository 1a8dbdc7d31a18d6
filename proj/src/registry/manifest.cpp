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

#include "dlaas/registry/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"
#include "dlaas/learner/trainer.hpp"

namespace dlaas::registry {
namespace {

// ---- generic YAML-subset tree ---------------------------------------------

struct YNode {
  enum class Kind { kScalar, kMap, kList } kind = Kind::kScalar;
  std::string scalar;
  std::vector<std::pair<std::string, YNode>> map;
  std::vector<YNode> list;
  int line = 0;
};

struct Line {
  int indent;
  std::string text;  // without indentation, comments stripped
  int number;
};

[[noreturn]] void syntax(int line, const std::string& msg) {
  throw Error(Errc::kSyntaxError, "line " + std::to_string(line) + ": " + msg);
}

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

// Position of the ':' ending a mapping key, or npos.
std::size_t key_colon(const std::string& text) {
  if (text.empty() || text[0] == '"' || text[0] == '\'') return std::string::npos;
  std::size_t i = 0;
  while (i < text.size() && is_key_char(text[i])) ++i;
  if (i == 0 || i >= text.size() || text[i] != ':') return std::string::npos;
  if (i + 1 < text.size() && text[i + 1] != ' ') return std::string::npos;
  return i;
}

// Removes a trailing " # comment" outside quotes.
std::string strip_comment(const std::string& s) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#' && (i == 0 || s[i - 1] == ' ')) {
      return s.substr(0, i);
    }
  }
  return s;
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
  return s;
}

std::vector<Line> lex(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  for (auto& raw : split(text, '\n')) {
    ++number;
    std::string l = rtrim(raw);
    if (l.find('\t') != std::string::npos && l.find_first_not_of(" \t") > l.find('\t')) {
      syntax(number, "tab in indentation");
    }
    std::size_t ind = l.find_first_not_of(' ');
    if (ind == std::string::npos) continue;
    std::string body = rtrim(strip_comment(l.substr(ind)));
    if (body.empty()) continue;
    // Unindented continuation of a folded plain scalar.
    if (ind == 0 && !out.empty() && body.rfind("- ", 0) != 0 && body != "-" &&
        key_colon(body) == std::string::npos && out.back().indent == 0) {
      auto& prev = out.back().text;
      auto c = key_colon(prev);
      if (c != std::string::npos && c + 1 < prev.size()) {
        char first = prev[c + 2];
        if (first != '"' && first != '\'') {
          prev += " " + body;
          continue;
        }
      }
      syntax(number, "expected 'key: value'");
    }
    out.push_back(Line{static_cast<int>(ind), body, number});
  }
  return out;
}

std::string unquote(const std::string& v, int line) {
  if (v.empty()) return v;
  if (v[0] == '"') {
    if (v.size() < 2 || v.back() != '"') syntax(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      char c = v[i];
      if (c == '\\') {
        if (i + 2 >= v.size()) syntax(line, "dangling escape");
        char e = v[++i];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: syntax(line, std::string("unknown escape \\") + e);
        }
      } else if (c == '"') {
        syntax(line, "unescaped quote");
      } else {
        out += c;
      }
    }
    return out;
  }
  if (v[0] == '\'') {
    if (v.size() < 2 || v.back() != '\'') syntax(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\'') {
        if (i + 2 < v.size() && v[i + 1] == '\'') {
          out += '\'';
          ++i;
        } else {
          syntax(line, "unescaped quote");
        }
      } else {
        out += v[i];
      }
    }
    return out;
  }
  if (v[0] == '[' || v[0] == '{' || v[0] == '&' || v[0] == '*' || v[0] == '|' || v[0] == '>') {
    syntax(line, "unsupported YAML construct");
  }
  return v;
}

class Parser {
 public:
  explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  YNode parse_document() {
    if (lines_.empty()) syntax(1, "empty manifest");
    if (lines_[0].indent != 0) syntax(lines_[0].number, "document must start at column 0");
    YNode root = parse_block(0);
    if (pos_ < lines_.size()) syntax(lines_[pos_].number, "unexpected indentation");
    return root;
  }

 private:
  bool at_end() const { return pos_ >= lines_.size(); }
  const Line& cur() const { return lines_[pos_]; }
  static bool is_item(const std::string& t) { return t == "-" || t.rfind("- ", 0) == 0; }

  YNode parse_block(int indent) {
    if (is_item(cur().text)) return parse_list(indent);
    return parse_map(indent);
  }

  YNode parse_map(int indent) {
    YNode node;
    node.kind = YNode::Kind::kMap;
    node.line = cur().number;
    std::set<std::string> seen;
    while (!at_end() && cur().indent == indent && !is_item(cur().text)) {
      const Line& l = cur();
      auto c = key_colon(l.text);
      if (c == std::string::npos) syntax(l.number, "expected 'key: value'");
      std::string key = l.text.substr(0, c);
      std::string rest = c + 1 < l.text.size() ? l.text.substr(c + 2) : "";
      rest = std::string(trim(rest));
      ++pos_;
      YNode value;
      if (!rest.empty()) {
        value.kind = YNode::Kind::kScalar;
        value.scalar = unquote(rest, l.number);
        value.line = l.number;
      } else if (!at_end() && cur().indent > indent) {
        value = parse_block(cur().indent);
      } else if (!at_end() && cur().indent == indent && is_item(cur().text)) {
        value = parse_list(indent);
      } else {
        value.kind = YNode::Kind::kScalar;
        value.line = l.number;
      }
      if (!seen.insert(key).second) syntax(l.number, "duplicate key '" + key + "'");
      node.map.emplace_back(key, std::move(value));
    }
    if (!at_end() && cur().indent > indent) syntax(cur().number, "unexpected indentation");
    return node;
  }

  YNode parse_list(int indent) {
    YNode node;
    node.kind = YNode::Kind::kList;
    node.line = cur().number;
    while (!at_end() && cur().indent == indent && is_item(cur().text)) {
      Line l = cur();
      std::string rest = l.text == "-" ? "" : std::string(trim(l.text.substr(2)));
      if (rest.empty()) {
        ++pos_;
        if (at_end() || cur().indent <= indent) syntax(l.number, "empty list item");
        node.list.push_back(parse_block(cur().indent));
        continue;
      }
      int item_indent = indent + static_cast<int>(l.text.size() - rest.size());
      if (key_colon(rest) == std::string::npos) {
        YNode s;
        s.scalar = unquote(rest, l.number);
        s.line = l.number;
        node.list.push_back(std::move(s));
        ++pos_;
        continue;
      }
      // Re-enter the item's first line as a map line at the item column.
      lines_[pos_] = Line{item_indent, rest, l.number};
      node.list.push_back(parse_map(item_indent));
    }
    return node;
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

// ---- schema mapping ---------------------------------------------------------

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void schema(const std::string& field) { throw Error(Errc::kSchemaError, field); }

const std::string& scalar(const YNode& n, const std::string& field) {
  if (n.kind != YNode::Kind::kScalar) schema(field);
  return n.scalar;
}

const YNode& as_map(const YNode& n, const std::string& field) {
  if (n.kind != YNode::Kind::kMap) schema(field);
  return n;
}

std::int64_t integer(const YNode& n, const std::string& field) {
  std::int64_t v = 0;
  if (!parse_int64(scalar(n, field), v)) schema(field);
  return v;
}

using Handler = std::function<void(const YNode&)>;

// Dispatches each key of `node` to its handler; unknown keys are rejected.
void visit(const YNode& node, const std::string& prefix,
           const std::map<std::string, Handler>& handlers, bool fold_case) {
  for (const auto& [raw_key, value] : node.map) {
    std::string key = fold_case ? lower(raw_key) : raw_key;
    auto it = handlers.find(key);
    if (it == handlers.end()) schema(prefix + key);
    it->second(value);
  }
}

StoreCredentials parse_connection(const YNode& n, const std::string& prefix) {
  StoreCredentials c;
  visit(as_map(n, prefix), prefix + ".",
        {{"auth_url", [&](const YNode& v) { c.auth_url = scalar(v, prefix + ".auth_url"); }},
         {"user_name", [&](const YNode& v) { c.user_name = scalar(v, prefix + ".user_name"); }},
         {"password", [&](const YNode& v) { c.password = scalar(v, prefix + ".password"); }}},
        false);
  if (c.auth_url.empty()) schema(prefix + ".auth_url");
  if (c.user_name.empty()) schema(prefix + ".user_name");
  if (c.password.empty()) schema(prefix + ".password");
  return c;
}

std::string container_of(const YNode& n, const std::string& prefix) {
  std::string name;
  visit(as_map(n, prefix), prefix + ".",
        {{"container", [&](const YNode& v) { name = scalar(v, prefix + ".container"); }}},
        false);
  if (name.empty()) schema(prefix + ".container");
  return name;
}

DataStore parse_data_store(const YNode& n, const std::string& prefix) {
  DataStore ds;
  visit(as_map(n, prefix), prefix + ".",
        {{"id", [&](const YNode& v) { ds.id = scalar(v, prefix + ".id"); }},
         {"type", [&](const YNode& v) { ds.type = scalar(v, prefix + ".type"); }},
         {"training_data",
          [&](const YNode& v) {
            ds.training_container = container_of(v, prefix + ".training_data");
          }},
         {"training_results",
          [&](const YNode& v) {
            ds.results_container = container_of(v, prefix + ".training_results");
          }},
         {"connection",
          [&](const YNode& v) { ds.connection = parse_connection(v, prefix + ".connection"); }}},
        false);
  if (ds.id.empty()) schema(prefix + ".id");
  if (ds.type.empty()) schema(prefix + ".type");
  return ds;
}

Framework parse_framework(const YNode& n) {
  Framework f;
  visit(as_map(n, "framework"), "framework.",
        {{"name", [&](const YNode& v) { f.name = scalar(v, "framework.name"); }},
         {"version", [&](const YNode& v) { f.version = scalar(v, "framework.version"); }},
         {"job", [&](const YNode& v) { f.job = scalar(v, "framework.job"); }},
         {"arguments",
          [&](const YNode& v) {
            if (v.kind == YNode::Kind::kScalar && v.scalar.empty()) return;
            for (const auto& [k, a] : as_map(v, "framework.arguments").map) {
              f.arguments.emplace_back(k, scalar(a, "framework.arguments." + k));
            }
          }}},
        false);
  if (f.name.empty()) schema("framework.name");
  return f;
}

// ---- serialization ----------------------------------------------------------

bool needs_quotes(const std::string& s) {
  if (s.empty()) return true;
  if (s.front() == ' ' || s.back() == ' ') return true;
  static const std::string special = "\"'#[]{}&*!|>%@`-?:,";
  if (special.find(s.front()) != std::string::npos) return true;
  if (s.find(": ") != std::string::npos || s.find(" #") != std::string::npos) return true;
  if (s.find('\n') != std::string::npos || s.find('\t') != std::string::npos) return true;
  if (s.back() == ':') return true;
  // Keep numeric-looking and boolean-looking strings quoted.
  double d;
  if (parse_double(s, d)) return true;
  static const std::set<std::string> words = {"true", "false", "yes", "no", "null", "~",
                                              "on", "off"};
  return words.count(lower(s)) > 0;
}

std::string quote(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace

const std::string* Framework::argument(std::string_view key) const {
  for (const auto& [k, v] : arguments) {
    if (k == key) return &v;
  }
  return nullptr;
}

const DataStore* ModelManifest::results_store() const {
  for (const auto& ds : data_stores) {
    if (ds.results_container) return &ds;
  }
  return nullptr;
}

std::int64_t parse_memory_mib(std::string_view text) {
  std::string t(trim(text));
  std::int64_t mult = 1;
  auto ends_with = [&](std::string_view suf) {
    return t.size() > suf.size() && t.compare(t.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with("MiB")) {
    t.resize(t.size() - 3);
  } else if (ends_with("GiB")) {
    t.resize(t.size() - 3);
    mult = 1024;
  }
  std::int64_t v = 0;
  if (!parse_int64(trim(t), v) || v <= 0) schema("memory");
  return v * mult;
}

void validate_manifest(const ModelManifest& m) {
  if (m.name.empty()) schema("name");
  if (m.learners < 1) schema("learners");
  if (m.gpus < 0) schema("gpus");
  if (m.memory_mib <= 0) schema("memory");
  if (m.data_stores.empty()) schema("data_stores");
  if (m.data_stores.front().training_container.empty()) {
    schema("data_stores[0].training_data");
  }
  if (m.framework.name.empty()) schema("framework.name");
  if (!learner::resolve_trainer(m.framework.name)) {
    throw Error(Errc::kUnknownFramework, m.framework.name);
  }
}

ModelManifest parse_manifest(std::string_view text) {
  Parser parser(lex(text));
  YNode root = parser.parse_document();
  if (root.kind != YNode::Kind::kMap) syntax(root.line, "manifest must be a mapping");
  ModelManifest m;
  bool have_learners = false;
  visit(root, "",
        {{"name", [&](const YNode& v) { m.name = scalar(v, "name"); }},
         {"version", [&](const YNode& v) { m.version = scalar(v, "version"); }},
         {"description", [&](const YNode& v) { m.description = scalar(v, "description"); }},
         {"learners",
          [&](const YNode& v) {
            // `Learners` and `learners` fold to the same key; both at once is
            // ambiguous.
            if (have_learners) syntax(v.line, "duplicate key 'learners'");
            have_learners = true;
            m.learners = integer(v, "learners");
          }},
         {"gpus", [&](const YNode& v) { m.gpus = integer(v, "gpus"); }},
         {"memory", [&](const YNode& v) { m.memory_mib = parse_memory_mib(scalar(v, "memory")); }},
         {"data_stores",
          [&](const YNode& v) {
            if (v.kind != YNode::Kind::kList) schema("data_stores");
            for (std::size_t i = 0; i < v.list.size(); ++i) {
              m.data_stores.push_back(
                  parse_data_store(v.list[i], "data_stores[" + std::to_string(i) + "]"));
            }
          }},
         {"framework", [&](const YNode& v) { m.framework = parse_framework(v); }}},
        true);
  validate_manifest(m);
  return m;
}

std::string serialize_manifest(const ModelManifest& m) {
  std::string out;
  auto kv = [&](int indent, const std::string& k, const std::string& v) {
    out += std::string(indent, ' ') + k + ": " + quote(v) + "\n";
  };
  kv(0, "name", m.name);
  if (!m.version.empty()) kv(0, "version", m.version);
  if (!m.description.empty()) kv(0, "description", m.description);
  out += "learners: " + std::to_string(m.learners) + "\n";
  out += "gpus: " + std::to_string(m.gpus) + "\n";
  out += "memory: " + std::to_string(m.memory_mib) + "MiB\n";
  out += "\ndata_stores:\n";
  for (const auto& ds : m.data_stores) {
    out += "- id: " + quote(ds.id) + "\n";
    kv(2, "type", ds.type);
    out += "  training_data:\n";
    kv(4, "container", ds.training_container);
    if (ds.results_container) {
      out += "  training_results:\n";
      kv(4, "container", *ds.results_container);
    }
    if (ds.connection) {
      out += "  connection:\n";
      kv(4, "auth_url", ds.connection->auth_url);
      kv(4, "user_name", ds.connection->user_name);
      kv(4, "password", ds.connection->password);
    }
  }
  out += "\nframework:\n";
  kv(2, "name", m.framework.name);
  if (!m.framework.version.empty()) kv(2, "version", m.framework.version);
  if (!m.framework.job.empty()) kv(2, "job", m.framework.job);
  if (!m.framework.arguments.empty()) {
    out += "  arguments:\n";
    for (const auto& [k, v] : m.framework.arguments) kv(4, k, v);
  }
  return out;
}

nlohmann::json to_json(const ModelManifest& m) {
  nlohmann::json stores = nlohmann::json::array();
  for (const auto& ds : m.data_stores) {
    nlohmann::json j = {{"id", ds.id},
                        {"type", ds.type},
                        {"training_data", {{"container", ds.training_container}}}};
    if (ds.results_container) j["training_results"] = {{"container", *ds.results_container}};
    // Credentials are never echoed back.
    if (ds.connection) j["connection"] = {{"auth_url", ds.connection->auth_url}};
    stores.push_back(std::move(j));
  }
  nlohmann::json args = nlohmann::json::object();
  for (const auto& [k, v] : m.framework.arguments) args[k] = v;
  return {{"name", m.name},
          {"version", m.version},
          {"description", m.description},
          {"learners", m.learners},
          {"gpus", m.gpus},
          {"memory_mib", m.memory_mib},
          {"data_stores", stores},
          {"framework",
           {{"name", m.framework.name},
            {"version", m.framework.version},
            {"job", m.framework.job},
            {"arguments", args}}}};
}

}  // namespace dlaas::registry
