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

#include <stdexcept>
#include <string>
#include <string_view>

namespace dlaas {

// Every failure surfaced by the platform maps to exactly one code. The string
// form (to_string) is what travels over the REST API and the coordination
// wire protocol.
enum class Errc {
  kNotFound,
  kAlreadyExists,
  kParentMissing,
  kSessionExpired,
  kVersionConflict,
  kMalformedCounter,
  kHasChildren,
  kEphemeralParent,
  kIoFailure,
  kAuthFailed,
  kDatasetMalformed,
  kSyntaxError,
  kSchemaError,
  kUnknownFramework,
  kModelInUse,
  kModelNotFound,
  kInvalidOverride,
  kInvalidState,
  kInsufficientResources,
  kInvalidShards,
  kUnknownLearner,
  kDuplicateLearner,
  kPartitionMismatch,
  kStaleClock,
  kNoCheckpoint,
  kRecoveryBudgetExhausted,
  kCoordUnavailable,
  kProtocolError,
  kInvalidArgument,
  kUnauthorized,
  kCancelled,
  kInternal,
};

std::string_view to_string(Errc code);
// Inverse of to_string; unknown names map to kInternal.
Errc errc_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

// Transient failures are the only ones retried by backoff loops.
inline bool is_transient(Errc code) {
  return code == Errc::kIoFailure || code == Errc::kCoordUnavailable;
}

}  // namespace dlaas
