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

#include "dlaas/common/logfile.hpp"

#include <fcntl.h>
#include <unistd.h>

namespace dlaas {

LogFile::LogFile(const std::filesystem::path& path, std::string prefix)
    : prefix_(std::move(prefix)) {
  if (path.empty()) return;
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
}

LogFile::~LogFile() {
  if (fd_ >= 0) ::close(fd_);
}

void LogFile::line(std::string_view text) {
  if (fd_ < 0) return;
  std::string buf;
  buf.reserve(prefix_.size() + text.size() + 1);
  buf += prefix_;
  buf += text;
  buf += '\n';
  std::size_t off = 0;
  while (off < buf.size()) {
    auto n = ::write(fd_, buf.data() + off, buf.size() - off);
    if (n <= 0) return;
    off += static_cast<std::size_t>(n);
  }
}

void append_log_line(const std::filesystem::path& path, std::string_view text) {
  LogFile f(path);
  f.line(text);
}

}  // namespace dlaas
