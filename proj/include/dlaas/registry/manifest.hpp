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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace dlaas::registry {

struct StoreCredentials {
  std::string auth_url;
  std::string user_name;
  std::string password;
  bool operator==(const StoreCredentials&) const = default;
};

struct DataStore {
  std::string id;
  std::string type;
  std::string training_container;
  std::optional<std::string> results_container;
  std::optional<StoreCredentials> connection;
  bool operator==(const DataStore&) const = default;
};

struct Framework {
  std::string name;
  std::string version;
  std::string job;
  // Insertion order is kept so serialization is stable.
  std::vector<std::pair<std::string, std::string>> arguments;

  const std::string* argument(std::string_view key) const;
  bool operator==(const Framework&) const = default;
};

struct ModelManifest {
  std::string name;
  std::string version;
  std::string description;
  std::int64_t learners = 1;
  std::int64_t gpus = 0;
  std::int64_t memory_mib = 1024;
  std::vector<DataStore> data_stores;
  Framework framework;

  // First data store; every accepted manifest has one.
  const DataStore& training_store() const { return data_stores.front(); }
  // First data store naming a results container, if any.
  const DataStore* results_store() const;
  bool operator==(const ModelManifest&) const = default;
};

// Parses the manifest YAML subset: block mappings, block lists of mappings,
// plain / single- / double-quoted scalars, comments. A top-level line that
// is not a `key:` line continues the previous plain scalar (folded with one
// space). Top-level keys are case-insensitive.
//
// Throws SYNTAX_ERROR ("line N: ..."), SCHEMA_ERROR (detail = field path) or
// UNKNOWN_FRAMEWORK.
ModelManifest parse_manifest(std::string_view text);

// Canonical text form; parse_manifest(serialize_manifest(m)) == m.
std::string serialize_manifest(const ModelManifest& m);

// Checks the semantic invariants (positive learners, memory, data store with
// training data, resolvable trainer). parse_manifest already applies it.
void validate_manifest(const ModelManifest& m);

// "8000MiB", "8GiB", "8000" -> MiB. Throws SCHEMA_ERROR("memory").
std::int64_t parse_memory_mib(std::string_view text);

nlohmann::json to_json(const ModelManifest& m);

}  // namespace dlaas::registry
