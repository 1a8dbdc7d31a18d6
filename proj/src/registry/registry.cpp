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

#include "dlaas/registry/registry.hpp"

#include <nlohmann/json.hpp>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace dlaas::registry {
namespace {

bool valid_model_id(const std::string& id) {
  if (id.size() != 18 || id.rfind("model-", 0) != 0) return false;
  for (std::size_t i = 6; i < id.size(); ++i) {
    char c = id[i];
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

Registry::Registry(storage::ObjectStore& store, BackoffPolicy policy, Sleeper sleep)
    : store_(store), policy_(policy), sleep_(std::move(sleep)) {}

void Registry::set_in_use_check(std::function<bool(const std::string&)> check) {
  std::lock_guard lock(mu_);
  in_use_ = std::move(check);
}

void Registry::write_meta(const ModelRecord& rec) {
  nlohmann::json j = {{"model_id", rec.model_id},
                      {"manifest", serialize_manifest(rec.manifest)},
                      {"created_at", rec.created_at},
                      {"updated_at", rec.updated_at}};
  const std::string text = j.dump(2);
  with_backoff(policy_, [&] { return store_.put(kMetaContainer, meta_key(rec.model_id), text); },
               sleep_);
}

std::string Registry::create_model(const ModelManifest& manifest,
                                   std::span<const std::uint8_t> definition) {
  validate_manifest(manifest);
  std::lock_guard lock(mu_);
  ModelRecord rec;
  do {
    rec.model_id = random_id("model-");
  } while (store_.exists(kMetaContainer, meta_key(rec.model_id)));
  rec.manifest = manifest;
  rec.created_at = rec.updated_at = unix_ms();
  // Definition first: a metadata blob never points at a missing definition.
  with_backoff(policy_, [&] { return store_.put(kMetaContainer, def_key(rec.model_id), definition); },
               sleep_);
  write_meta(rec);
  return rec.model_id;
}

ModelRecord Registry::get_model(const std::string& model_id) {
  if (!valid_model_id(model_id)) throw Error(Errc::kNotFound, model_id);
  auto meta = with_backoff(
      policy_, [&] { return store_.try_get(kMetaContainer, meta_key(model_id)); }, sleep_);
  if (!meta) throw Error(Errc::kNotFound, model_id);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(meta->begin(), meta->end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInternal, "corrupt model record " + model_id + ": " + e.what());
  }
  ModelRecord rec;
  rec.model_id = model_id;
  rec.manifest = parse_manifest(j.at("manifest").get<std::string>());
  rec.created_at = j.value("created_at", std::int64_t{0});
  rec.updated_at = j.value("updated_at", std::int64_t{0});
  rec.definition = with_backoff(
      policy_, [&] { return store_.try_get(kMetaContainer, def_key(model_id)); }, sleep_)
                       .value_or(Bytes{});
  return rec;
}

std::vector<std::string> Registry::list_models() {
  if (!store_.container_exists(kMetaContainer)) return {};
  std::vector<std::string> ids;
  auto keys = with_backoff(policy_, [&] { return store_.list(kMetaContainer, "models/"); }, sleep_);
  for (const auto& k : keys) {
    const std::string suffix = ".json";
    if (k.size() > 7 + suffix.size() && k.compare(k.size() - suffix.size(), suffix.size(), suffix) == 0) {
      ids.push_back(k.substr(7, k.size() - 7 - suffix.size()));
    }
  }
  return ids;
}

void Registry::update_model(const std::string& model_id, const ModelManifest& manifest) {
  validate_manifest(manifest);
  std::lock_guard lock(mu_);
  ModelRecord rec = get_model(model_id);
  rec.manifest = manifest;
  rec.updated_at = unix_ms();
  write_meta(rec);
}

void Registry::delete_model(const std::string& model_id) {
  std::lock_guard lock(mu_);
  if (!valid_model_id(model_id) || !store_.exists(kMetaContainer, meta_key(model_id))) {
    throw Error(Errc::kNotFound, model_id);
  }
  if (in_use_ && in_use_(model_id)) throw Error(Errc::kModelInUse, model_id);
  store_.remove(kMetaContainer, meta_key(model_id));
  try {
    store_.remove(kMetaContainer, def_key(model_id));
  } catch (const Error& e) {
    if (e.code() != Errc::kNotFound) throw;
  }
}

}  // namespace dlaas::registry
