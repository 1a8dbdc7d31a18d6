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

#include <filesystem>
#include <string>
#include <string_view>

namespace dlaas {

// Appends whole lines with O_APPEND, one write(2) per line, so several
// writers (threads or processes) can share a file without tearing lines.
class LogFile {
 public:
  LogFile() = default;
  explicit LogFile(const std::filesystem::path& path, std::string prefix = {});
  ~LogFile();
  LogFile(const LogFile&) = delete;
  LogFile& operator=(const LogFile&) = delete;

  void line(std::string_view text);
  bool is_open() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  std::string prefix_;
};

// One-shot form of the above.
void append_log_line(const std::filesystem::path& path, std::string_view text);

}  // namespace dlaas
