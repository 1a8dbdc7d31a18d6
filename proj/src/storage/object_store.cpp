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

#include "dlaas/storage/object_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace fs = std::filesystem;

namespace dlaas::storage {
namespace {

constexpr std::string_view kTmpPrefix = ".tmp-";

void check_container(const std::string& c) {
  if (!valid_container_name(c)) {
    throw Error(Errc::kInvalidArgument, "bad container name '" + c + "'");
  }
}

void check_key(const std::string& k) {
  if (!valid_key(k)) throw Error(Errc::kInvalidArgument, "bad object key '" + k + "'");
}

[[noreturn]] void io_error(const std::string& what, const std::error_code& ec) {
  throw Error(Errc::kIoFailure, what + ": " + ec.message());
}

}  // namespace

std::optional<Bytes> ObjectStore::try_get(const std::string& container, const std::string& key) {
  try {
    return get(container, key);
  } catch (const Error& e) {
    if (e.code() == Errc::kNotFound) return std::nullopt;
    throw;
  }
}

bool ObjectStore::exists(const std::string& container, const std::string& key) {
  return try_get(container, key).has_value();
}

bool valid_container_name(std::string_view name) {
  if (name.empty() || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.size() > 1024) return false;
  auto parts = split(key, '/');
  for (const auto& p : parts) {
    if (p.empty() || p == "." || p == "..") return false;
    for (char c : p) {
      if (static_cast<unsigned char>(c) < 0x20) return false;
    }
  }
  return parts.back().front() != '.';
}

std::string etag_of(std::span<const std::uint8_t> blob) { return sha256_hex(blob); }

// ---------------------------------------------------------------------------

FsObjectStore::FsObjectStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) io_error("create " + root_.string(), ec);
}

fs::path FsObjectStore::object_path(const std::string& container,
                                    const std::string& key) const {
  return root_ / container / fs::path(key);
}

std::string FsObjectStore::put(const std::string& container, const std::string& key,
                               std::span<const std::uint8_t> blob) {
  check_container(container);
  check_key(key);
  const fs::path dest = object_path(container, key);
  std::error_code ec;
  fs::create_directories(dest.parent_path(), ec);
  if (ec) io_error("mkdir " + dest.parent_path().string(), ec);

  const fs::path tmp =
      dest.parent_path() / (std::string(kTmpPrefix) + random_id("") + "-" + dest.filename().string());
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(Errc::kIoFailure, "open " + tmp.string());
  std::size_t off = 0;
  while (off < blob.size()) {
    ssize_t n = ::write(fd, blob.data() + off, blob.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      fs::remove(tmp, ec);
      throw Error(Errc::kIoFailure, "write " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  ::close(fd);
  fs::rename(tmp, dest, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    io_error("rename " + dest.string(), ec);
  }
  return etag_of(blob);
}

Bytes FsObjectStore::get(const std::string& container, const std::string& key) {
  check_container(container);
  check_key(key);
  if (!container_exists(container)) throw Error(Errc::kNotFound, "container " + container);
  const fs::path p = object_path(container, key);
  std::ifstream in(p, std::ios::binary);
  if (!in || fs::is_directory(p)) throw Error(Errc::kNotFound, container + "/" + key);
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::kIoFailure, "read " + p.string());
  return out;
}

std::vector<std::string> FsObjectStore::list(const std::string& container,
                                             const std::string& prefix) {
  check_container(container);
  const fs::path base = root_ / container;
  if (!container_exists(container)) throw Error(Errc::kNotFound, "container " + container);
  std::vector<std::string> keys;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(base, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    if (it->path().filename().string().rfind(kTmpPrefix, 0) == 0) continue;
    std::string key = fs::relative(it->path(), base).generic_string();
    if (key.rfind(prefix, 0) == 0) keys.push_back(std::move(key));
  }
  if (ec) io_error("list " + base.string(), ec);
  std::sort(keys.begin(), keys.end());
  return keys;
}

void FsObjectStore::remove(const std::string& container, const std::string& key) {
  check_container(container);
  check_key(key);
  const fs::path p = object_path(container, key);
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw Error(Errc::kNotFound, container + "/" + key);
  fs::remove(p, ec);
  if (ec) io_error("remove " + p.string(), ec);
  // Prune now-empty directories up to the container root.
  const fs::path top = root_ / container;
  for (fs::path d = p.parent_path(); d != top && fs::is_empty(d, ec) && !ec;
       d = d.parent_path()) {
    fs::remove(d, ec);
  }
}

bool FsObjectStore::container_exists(const std::string& container) {
  std::error_code ec;
  return valid_container_name(container) && fs::is_directory(root_ / container, ec);
}

void FsObjectStore::set_accounts(std::map<std::string, std::string> user_to_password) {
  std::lock_guard lock(accounts_mu_);
  accounts_ = std::move(user_to_password);
}

void FsObjectStore::authenticate(const StoreCredentials& creds) {
  if (creds.auth_url.empty() || creds.user_name.empty() || creds.password.empty()) {
    throw Error(Errc::kAuthFailed, "incomplete credentials");
  }
  if (creds.auth_url.rfind("http://", 0) != 0 && creds.auth_url.rfind("https://", 0) != 0) {
    throw Error(Errc::kAuthFailed, "auth_url must be http(s)");
  }
  std::lock_guard lock(accounts_mu_);
  if (!accounts_) return;
  auto it = accounts_->find(creds.user_name);
  if (it == accounts_->end() || it->second != creds.password) {
    throw Error(Errc::kAuthFailed, "rejected user " + creds.user_name);
  }
}

// ---------------------------------------------------------------------------

namespace {

void maybe_fail(std::atomic<int>& budget, const char* op) {
  int n = budget.load();
  while (n > 0) {
    if (budget.compare_exchange_weak(n, n - 1)) {
      throw Error(Errc::kIoFailure, std::string("injected ") + op + " failure");
    }
  }
}

}  // namespace

std::string FaultInjectingStore::put(const std::string& container, const std::string& key,
                                     std::span<const std::uint8_t> blob) {
  ++put_attempts_;
  maybe_fail(put_failures_, "put");
  return inner_.put(container, key, blob);
}

Bytes FaultInjectingStore::get(const std::string& container, const std::string& key) {
  ++get_attempts_;
  maybe_fail(get_failures_, "get");
  return inner_.get(container, key);
}

std::vector<std::string> FaultInjectingStore::list(const std::string& container,
                                                   const std::string& prefix) {
  maybe_fail(list_failures_, "list");
  return inner_.list(container, prefix);
}

void FaultInjectingStore::remove(const std::string& container, const std::string& key) {
  inner_.remove(container, key);
}

bool FaultInjectingStore::container_exists(const std::string& container) {
  return inner_.container_exists(container);
}

void FaultInjectingStore::authenticate(const StoreCredentials& creds) {
  inner_.authenticate(creds);
}

}  // namespace dlaas::storage
