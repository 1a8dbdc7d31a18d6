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

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "dlaas/common/bytes.hpp"
#include "dlaas/common/retry.hpp"
#include "dlaas/registry/manifest.hpp"
#include "dlaas/storage/object_store.hpp"

namespace dlaas::registry {

inline constexpr const char* kMetaContainer = "_dlaas_meta";

struct ModelRecord {
  std::string model_id;
  ModelManifest manifest;
  Bytes definition;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
};

// Model deployer: issues `model-<12 hex>` ids and keeps one metadata blob
// (models/<id>.json) and one definition blob (models/<id>.def) per model in
// the `_dlaas_meta` container.
class Registry {
 public:
  explicit Registry(storage::ObjectStore& store, BackoffPolicy policy = {},
                    Sleeper sleep = real_sleep);

  // Called by delete_model; returning true blocks deletion with MODEL_IN_USE.
  void set_in_use_check(std::function<bool(const std::string& model_id)> check);

  std::string create_model(const ModelManifest& manifest, std::span<const std::uint8_t> definition);
  ModelRecord get_model(const std::string& model_id);
  std::vector<std::string> list_models();
  void update_model(const std::string& model_id, const ModelManifest& manifest);
  void delete_model(const std::string& model_id);

 private:
  static std::string meta_key(const std::string& id) { return "models/" + id + ".json"; }
  static std::string def_key(const std::string& id) { return "models/" + id + ".def"; }
  void write_meta(const ModelRecord& rec);

  storage::ObjectStore& store_;
  BackoffPolicy policy_;
  Sleeper sleep_;
  std::mutex mu_;
  std::function<bool(const std::string&)> in_use_;
};

}  // namespace dlaas::registry
