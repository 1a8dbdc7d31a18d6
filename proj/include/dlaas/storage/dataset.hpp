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
#include <filesystem>
#include <string>
#include <vector>

#include "dlaas/common/bytes.hpp"
#include "dlaas/common/retry.hpp"
#include "dlaas/registry/manifest.hpp"
#include "dlaas/storage/object_store.hpp"

namespace dlaas::storage {

enum class LabelKind : std::uint8_t { kReal = 0, kBinary = 1 };

// dataset.bin: "DLDS" | u16 version | u64 D | u32 dim | u8 label_kind |
// D*dim f64 features (row-major) | D f64 labels. Little-endian.
struct Dataset {
  static constexpr std::uint16_t kVersion = 1;

  std::uint64_t samples = 0;
  std::uint32_t dim = 0;
  LabelKind label_kind = LabelKind::kReal;
  std::vector<double> features;
  std::vector<double> labels;

  Bytes encode() const;
  // Throws DATASET_MALFORMED.
  static Dataset decode(std::span<const std::uint8_t> bytes);
  bool operator==(const Dataset&) const = default;
};

struct DatasetHeader {
  std::uint64_t samples = 0;
  std::uint32_t dim = 0;
  LabelKind label_kind = LabelKind::kReal;
};
// Validates the fixed header only (and that the body length matches).
DatasetHeader decode_dataset_header(std::span<const std::uint8_t> bytes);

inline constexpr const char* kDatasetKey = "dataset.bin";

struct DatasetDescriptor {
  std::uint64_t samples = 0;
  std::uint32_t dim = 0;
  LabelKind label_kind = LabelKind::kReal;
  std::filesystem::path local_path;
};

// The "load" hook: authenticates against the manifest's training store,
// fetches dataset.bin (transient failures retried with backoff), validates
// it and writes it under `dest`.
// Errors: AUTH_FAILED, NOT_FOUND, DATASET_MALFORMED, IO_FAILURE.
DatasetDescriptor load_training_data(ObjectStore& store, const registry::ModelManifest& manifest,
                                     const std::filesystem::path& dest,
                                     const BackoffPolicy& policy = {},
                                     const Sleeper& sleep = real_sleep);

Dataset read_local_dataset(const std::filesystem::path& path);

// Same checks as load_training_data but only returns the header; the LCM
// uses it to size the parameter server.
DatasetHeader peek_training_data(ObjectStore& store, const registry::ModelManifest& manifest,
                                 const BackoffPolicy& policy = {},
                                 const Sleeper& sleep = real_sleep);

// The "store" hook: uploads <training_id>/model.bin and
// <training_id>/training-log.txt to the manifest's results container.
// Returns the keys written; empty when no results container is configured.
std::vector<std::string> store_results(ObjectStore& store, const registry::ModelManifest& manifest,
                                       const std::string& training_id,
                                       std::span<const std::uint8_t> model_blob,
                                       std::span<const std::uint8_t> log_blob,
                                       const BackoffPolicy& policy = {},
                                       const Sleeper& sleep = real_sleep);

// Log-only variant for jobs that end without a model.
std::vector<std::string> store_log(ObjectStore& store, const registry::ModelManifest& manifest,
                                   const std::string& training_id,
                                   std::span<const std::uint8_t> log_blob,
                                   const BackoffPolicy& policy = {},
                                   const Sleeper& sleep = real_sleep);

// Synthetic fixtures. Separable: labels from a random hyperplane through the
// origin with a margin band removed. Linear: y = a.x + b + noise.
Dataset make_separable_dataset(std::uint64_t samples, std::uint32_t dim, std::uint64_t seed,
                               double margin = 0.1);
Dataset make_linear_dataset(std::uint64_t samples, std::uint32_t dim, std::uint64_t seed,
                            double noise = 0.05);

}  // namespace dlaas::storage
