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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "dlaas/common/net.hpp"

namespace dlaas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitApi = 1;
inline constexpr int kExitConnectivity = 2;  // also bad config
inline constexpr int kExitUsage = 3;

struct CliConfig {
  std::string endpoint = "http://127.0.0.1:8080";
  std::string token;
  std::string output = "table";  // table | json
};

using EnvFn = std::function<std::optional<std::string>(const std::string& name)>;
std::optional<std::string> process_env(const std::string& name);

// `key = value` lines (endpoint, token, output); '#' comments.
// INVALID_ARGUMENT on unknown keys or malformed lines.
CliConfig parse_config_text(std::string_view text, CliConfig base = {});
// ~/.dlaas/config (or $DLAAS_CONFIG) if present, then DLAAS_ENDPOINT,
// DLAAS_TOKEN, DLAAS_OUTPUT. Flags are applied on top by run().
CliConfig load_config(const EnvFn& env);
// "http://host:port" or "host:port"; INVALID_ARGUMENT otherwise.
net::Endpoint endpoint_from_url(const std::string& url);

// The whole command line tool. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const EnvFn& env = process_env);

}  // namespace dlaas::cli
