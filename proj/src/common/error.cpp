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

#include "dlaas/common/error.hpp"

#include <array>
#include <utility>

namespace dlaas {
namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 32> kNames{{
    {Errc::kNotFound, "NOT_FOUND"},
    {Errc::kAlreadyExists, "ALREADY_EXISTS"},
    {Errc::kParentMissing, "PARENT_MISSING"},
    {Errc::kSessionExpired, "SESSION_EXPIRED"},
    {Errc::kVersionConflict, "VERSION_CONFLICT"},
    {Errc::kMalformedCounter, "MALFORMED_COUNTER"},
    {Errc::kHasChildren, "HAS_CHILDREN"},
    {Errc::kEphemeralParent, "EPHEMERAL_PARENT"},
    {Errc::kIoFailure, "IO_FAILURE"},
    {Errc::kAuthFailed, "AUTH_FAILED"},
    {Errc::kDatasetMalformed, "DATASET_MALFORMED"},
    {Errc::kSyntaxError, "SYNTAX_ERROR"},
    {Errc::kSchemaError, "SCHEMA_ERROR"},
    {Errc::kUnknownFramework, "UNKNOWN_FRAMEWORK"},
    {Errc::kModelInUse, "MODEL_IN_USE"},
    {Errc::kModelNotFound, "MODEL_NOT_FOUND"},
    {Errc::kInvalidOverride, "INVALID_OVERRIDE"},
    {Errc::kInvalidState, "INVALID_STATE"},
    {Errc::kInsufficientResources, "INSUFFICIENT_RESOURCES"},
    {Errc::kInvalidShards, "INVALID_SHARDS"},
    {Errc::kUnknownLearner, "UNKNOWN_LEARNER"},
    {Errc::kDuplicateLearner, "DUPLICATE_LEARNER"},
    {Errc::kPartitionMismatch, "PARTITION_MISMATCH"},
    {Errc::kStaleClock, "STALE_CLOCK"},
    {Errc::kNoCheckpoint, "NO_CHECKPOINT"},
    {Errc::kRecoveryBudgetExhausted, "RECOVERY_BUDGET_EXHAUSTED"},
    {Errc::kCoordUnavailable, "COORDSTORE_UNAVAILABLE"},
    {Errc::kProtocolError, "PROTOCOL_ERROR"},
    {Errc::kInvalidArgument, "INVALID_ARGUMENT"},
    {Errc::kUnauthorized, "UNAUTHORIZED"},
    {Errc::kCancelled, "CANCELLED"},
    {Errc::kInternal, "INTERNAL"},
}};

}  // namespace

std::string_view to_string(Errc code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "INTERNAL";
}

Errc errc_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return Errc::kInternal;
}

}  // namespace dlaas
