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

#include "dlaas/api/archive.hpp"

#include <array>
#include <cstdio>
#include <cstring>

#include "dlaas/common/error.hpp"

namespace dlaas::api {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width-1 octal digits, NUL terminated.
  std::snprintf(reinterpret_cast<char*>(field), width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    const auto c = field[i];
    if (c == 0 || c == ' ') {
      if (v > 0 || i > 0) break;
      continue;
    }
    if (c < '0' || c > '7') throw Error(Errc::kProtocolError, "bad octal field in tar header");
    v = v * 8 + (c - '0');
  }
  return v;
}

std::uint64_t checksum(const std::uint8_t* h) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
  return sum;
}

}  // namespace

Bytes write_tar(const std::vector<ArchiveEntry>& entries) {
  Bytes out;
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > 100) {
      throw Error(Errc::kInvalidArgument, "tar entry name must be 1..100 bytes");
    }
    std::array<std::uint8_t, kBlock> h{};
    std::memcpy(h.data(), e.name.data(), e.name.size());
    put_octal(h.data() + 100, 8, 0644);
    put_octal(h.data() + 108, 8, 0);
    put_octal(h.data() + 116, 8, 0);
    put_octal(h.data() + 124, 12, e.data.size());
    put_octal(h.data() + 136, 12, 0);
    h[156] = '0';
    std::memcpy(h.data() + 257, "ustar", 6);  // magic incl. NUL
    h[263] = '0';
    h[264] = '0';
    std::snprintf(reinterpret_cast<char*>(h.data() + 148), 8, "%06llo",
                  static_cast<unsigned long long>(checksum(h.data())));
    h[155] = ' ';
    out.insert(out.end(), h.begin(), h.end());
    out.insert(out.end(), e.data.begin(), e.data.end());
    out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::vector<ArchiveEntry> read_tar(std::span<const std::uint8_t> tar) {
  std::vector<ArchiveEntry> out;
  std::size_t off = 0;
  while (off + kBlock <= tar.size()) {
    const std::uint8_t* h = tar.data() + off;
    bool zero = true;
    for (std::size_t i = 0; i < kBlock && zero; ++i) zero = h[i] == 0;
    if (zero) return out;
    if (get_octal(h + 148, 8) != checksum(h)) {
      throw Error(Errc::kProtocolError, "tar header checksum mismatch");
    }
    const auto size = get_octal(h + 124, 12);
    off += kBlock;
    if (size > tar.size() - off) throw Error(Errc::kProtocolError, "truncated tar entry");
    const char type = static_cast<char>(h[156]);
    if (type == '0' || type == 0) {
      ArchiveEntry e;
      e.name.assign(reinterpret_cast<const char*>(h), strnlen(reinterpret_cast<const char*>(h), 100));
      e.data.assign(tar.begin() + static_cast<std::ptrdiff_t>(off),
                    tar.begin() + static_cast<std::ptrdiff_t>(off + size));
      out.push_back(std::move(e));
    }
    off += (size + kBlock - 1) / kBlock * kBlock;
  }
  if (off != tar.size()) throw Error(Errc::kProtocolError, "truncated tar archive");
  return out;
}

}  // namespace dlaas::api
