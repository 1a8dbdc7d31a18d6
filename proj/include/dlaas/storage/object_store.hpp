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
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dlaas/common/bytes.hpp"
#include "dlaas/registry/manifest.hpp"

namespace dlaas::storage {

using registry::StoreCredentials;

// Pluggable object storage seam. Containers are created on first put.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  // Returns the etag (hex SHA-256 of the blob).
  virtual std::string put(const std::string& container, const std::string& key,
                          std::span<const std::uint8_t> blob) = 0;
  virtual Bytes get(const std::string& container, const std::string& key) = 0;
  // Sorted keys starting with `prefix`. NOT_FOUND for a missing container.
  virtual std::vector<std::string> list(const std::string& container,
                                        const std::string& prefix = {}) = 0;
  virtual void remove(const std::string& container, const std::string& key) = 0;
  virtual bool container_exists(const std::string& container) = 0;
  // Throws AUTH_FAILED when the credentials are not accepted.
  virtual void authenticate(const StoreCredentials& creds) = 0;

  std::string put(const std::string& container, const std::string& key, std::string_view s) {
    return put(container, key,
               std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }
  std::optional<Bytes> try_get(const std::string& container, const std::string& key);
  bool exists(const std::string& container, const std::string& key);
};

// Container names: [a-z0-9_-]{1,64}. Keys: '/'-separated segments, no empty,
// "." or ".." segment, no leading '.' in the last segment.
bool valid_container_name(std::string_view name);
bool valid_key(std::string_view key);
std::string etag_of(std::span<const std::uint8_t> blob);

// Filesystem-backed store: <root>/<container>/<key>. Writes go to a hidden
// temp file in the target directory and are renamed into place, so a reader
// sees the old or the new blob, never a torn one.
class FsObjectStore final : public ObjectStore {
 public:
  explicit FsObjectStore(std::filesystem::path root);

  std::string put(const std::string& container, const std::string& key,
                  std::span<const std::uint8_t> blob) override;
  using ObjectStore::put;
  Bytes get(const std::string& container, const std::string& key) override;
  std::vector<std::string> list(const std::string& container,
                                const std::string& prefix = {}) override;
  void remove(const std::string& container, const std::string& key) override;
  bool container_exists(const std::string& container) override;
  void authenticate(const StoreCredentials& creds) override;

  // When set, only these user/password pairs authenticate. Unset: any
  // complete credential triple with an http(s) auth_url is accepted.
  void set_accounts(std::map<std::string, std::string> user_to_password);

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path object_path(const std::string& container, const std::string& key) const;

  std::filesystem::path root_;
  std::mutex accounts_mu_;
  std::optional<std::map<std::string, std::string>> accounts_;
};

// Wraps another store and makes the next N calls of a kind fail with
// IO_FAILURE. Counts attempts so tests can assert the retry discipline.
class FaultInjectingStore final : public ObjectStore {
 public:
  explicit FaultInjectingStore(ObjectStore& inner) : inner_(inner) {}

  void fail_next_puts(int n) { put_failures_ = n; }
  void fail_next_gets(int n) { get_failures_ = n; }
  void fail_next_lists(int n) { list_failures_ = n; }
  int put_attempts() const { return put_attempts_; }
  int get_attempts() const { return get_attempts_; }

  std::string put(const std::string& container, const std::string& key,
                  std::span<const std::uint8_t> blob) override;
  using ObjectStore::put;
  Bytes get(const std::string& container, const std::string& key) override;
  std::vector<std::string> list(const std::string& container,
                                const std::string& prefix = {}) override;
  void remove(const std::string& container, const std::string& key) override;
  bool container_exists(const std::string& container) override;
  void authenticate(const StoreCredentials& creds) override;

 private:
  ObjectStore& inner_;
  std::atomic<int> put_failures_{0}, get_failures_{0}, list_failures_{0};
  std::atomic<int> put_attempts_{0}, get_attempts_{0};
};

}  // namespace dlaas::storage
