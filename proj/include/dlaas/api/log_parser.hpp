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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dlaas::api {

struct MetricRecord {
  std::int64_t iteration = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double learning_rate = 0.0;
  std::int64_t wallclock_ms = 0;
  std::int64_t learner_id = 0;

  // Exactly the six fields above.
  std::string to_json() const;
  bool operator==(const MetricRecord&) const = default;
};

// A pluggable line parser. Must not throw on any input; lines it does not
// understand yield nullopt. `learner_id` comes from the "[learner-N] " prefix
// of a shared job log, 0 when absent.
class LineParser {
 public:
  virtual ~LineParser() = default;
  virtual std::optional<MetricRecord> parse(std::string_view line,
                                            std::int64_t learner_id) const = 0;
};

// `ITER <n> LOSS <f> ACC <f> LR <f> TS <ms>`; `nan`/`inf` are rejected.
class MetricLineParser final : public LineParser {
 public:
  std::optional<MetricRecord> parse(std::string_view line, std::int64_t learner_id) const override;
};

using ParserFactory = std::function<std::unique_ptr<LineParser>()>;

// Named parsers. "metric" is built in; custom parsers installed here are
// tried in registration order after it.
void register_parser(const std::string& name, ParserFactory factory);
std::vector<std::string> parser_names();
std::unique_ptr<LineParser> make_parser(const std::string& name);

// Splits "[learner-N] rest" into (N, rest). Anything else is (0, line).
std::pair<std::int64_t, std::string_view> split_learner_prefix(std::string_view line);

// Stateful parser over one job log. Per learner, only records with a larger
// iteration than the last one pass, so a learner replaying iterations after
// a restart does not break the ordering. Never throws.
class LogStreamParser {
 public:
  // Empty `parsers` means every registered parser.
  explicit LogStreamParser(std::vector<std::string> parsers = {});

  std::optional<MetricRecord> feed(std::string_view line);
  std::vector<MetricRecord> feed_all(std::string_view text);

  std::uint64_t parsed() const { return parsed_; }
  std::uint64_t skipped() const { return skipped_; }
  std::uint64_t replayed() const { return replayed_; }

 private:
  std::vector<std::unique_ptr<LineParser>> parsers_;
  std::map<std::int64_t, std::int64_t> last_iteration_;
  std::uint64_t parsed_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t replayed_ = 0;
};

}  // namespace dlaas::api
