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

#include <span>
#include <string>
#include <vector>

#include "dlaas/common/bytes.hpp"

namespace dlaas::api {

struct ArchiveEntry {
  std::string name;
  Bytes data;
  bool operator==(const ArchiveEntry&) const = default;
};

// Uncompressed ustar archive. Entries are written in the given order with
// mode 0644, uid/gid 0, mtime 0 and empty owner names, so equal input gives
// equal bytes. Names must be 1..100 bytes.
Bytes write_tar(const std::vector<ArchiveEntry>& entries);
// Reads regular-file entries back. PROTOCOL_ERROR on a bad header checksum
// or truncated data.
std::vector<ArchiveEntry> read_tar(std::span<const std::uint8_t> tar);

}  // namespace dlaas::api
