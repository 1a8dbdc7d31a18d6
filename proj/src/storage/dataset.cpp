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

#include "dlaas/storage/dataset.hpp"

#include <cmath>
#include <fstream>

#include "dlaas/common/error.hpp"
#include "dlaas/common/util.hpp"

namespace fs = std::filesystem;

namespace dlaas::storage {
namespace {

constexpr std::size_t kHeaderSize = 4 + 2 + 8 + 4 + 1;

}  // namespace

Bytes Dataset::encode() const {
  Bytes out;
  out.reserve(kHeaderSize + 8 * (features.size() + labels.size()));
  ByteWriter w(out);
  w.magic("DLDS");
  w.u16(kVersion);
  w.u64(samples);
  w.u32(dim);
  w.u8(static_cast<std::uint8_t>(label_kind));
  w.f64s(features);
  w.f64s(labels);
  return out;
}

DatasetHeader decode_dataset_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, Errc::kDatasetMalformed);
  r.expect_magic("DLDS");
  if (auto v = r.u16(); v != Dataset::kVersion) {
    throw Error(Errc::kDatasetMalformed, "unsupported version " + std::to_string(v));
  }
  DatasetHeader h;
  h.samples = r.u64();
  h.dim = r.u32();
  std::uint8_t kind = r.u8();
  if (kind > 1) throw Error(Errc::kDatasetMalformed, "bad label kind");
  h.label_kind = static_cast<LabelKind>(kind);
  if (h.samples == 0 || h.dim == 0) throw Error(Errc::kDatasetMalformed, "empty dataset");
  // Overflow-safe body size check.
  const std::uint64_t cells = h.samples * (static_cast<std::uint64_t>(h.dim) + 1);
  if (h.samples > (1ull << 40) || h.dim > (1u << 24) || cells / (h.dim + 1ull) != h.samples ||
      r.remaining() != cells * 8) {
    throw Error(Errc::kDatasetMalformed, "body length does not match header");
  }
  return h;
}

Dataset Dataset::decode(std::span<const std::uint8_t> bytes) {
  DatasetHeader h = decode_dataset_header(bytes);
  ByteReader r(bytes.subspan(kHeaderSize), Errc::kDatasetMalformed);
  Dataset d;
  d.samples = h.samples;
  d.dim = h.dim;
  d.label_kind = h.label_kind;
  d.features = r.f64s(h.samples * h.dim);
  d.labels = r.f64s(h.samples);
  for (double v : d.features) {
    if (!std::isfinite(v)) throw Error(Errc::kDatasetMalformed, "non-finite feature");
  }
  for (double v : d.labels) {
    if (!std::isfinite(v)) throw Error(Errc::kDatasetMalformed, "non-finite label");
    if (d.label_kind == LabelKind::kBinary && v != 0.0 && v != 1.0) {
      throw Error(Errc::kDatasetMalformed, "binary label not in {0,1}");
    }
  }
  return d;
}

DatasetDescriptor load_training_data(ObjectStore& store, const registry::ModelManifest& manifest,
                                     const fs::path& dest, const BackoffPolicy& policy,
                                     const Sleeper& sleep) {
  if (manifest.data_stores.empty()) throw Error(Errc::kSchemaError, "data_stores");
  const auto& ds = manifest.training_store();
  if (ds.connection) store.authenticate(*ds.connection);
  Bytes blob = with_backoff(
      policy, [&] { return store.get(ds.training_container, kDatasetKey); }, sleep);
  Dataset d = Dataset::decode(blob);

  std::error_code ec;
  fs::create_directories(dest, ec);
  if (ec) throw Error(Errc::kIoFailure, "mkdir " + dest.string() + ": " + ec.message());
  DatasetDescriptor out{d.samples, d.dim, d.label_kind, dest / kDatasetKey};
  std::ofstream f(out.local_path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!f) throw Error(Errc::kIoFailure, "write " + out.local_path.string());
  return out;
}

DatasetHeader peek_training_data(ObjectStore& store, const registry::ModelManifest& manifest,
                                 const BackoffPolicy& policy, const Sleeper& sleep) {
  if (manifest.data_stores.empty()) throw Error(Errc::kSchemaError, "data_stores");
  const auto& ds = manifest.training_store();
  if (ds.connection) store.authenticate(*ds.connection);
  Bytes blob = with_backoff(
      policy, [&] { return store.get(ds.training_container, kDatasetKey); }, sleep);
  return decode_dataset_header(blob);
}

Dataset read_local_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kNotFound, path.string());
  Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Dataset::decode(b);
}

std::vector<std::string> store_results(ObjectStore& store, const registry::ModelManifest& manifest,
                                       const std::string& training_id,
                                       std::span<const std::uint8_t> model_blob,
                                       std::span<const std::uint8_t> log_blob,
                                       const BackoffPolicy& policy, const Sleeper& sleep) {
  const registry::DataStore* ds = manifest.results_store();
  if (!ds) return {};
  if (ds->connection) store.authenticate(*ds->connection);
  std::vector<std::string> keys = {training_id + "/model.bin",
                                   training_id + "/training-log.txt"};
  with_backoff(policy, [&] { return store.put(*ds->results_container, keys[0], model_blob); },
               sleep);
  with_backoff(policy, [&] { return store.put(*ds->results_container, keys[1], log_blob); },
               sleep);
  return keys;
}

std::vector<std::string> store_log(ObjectStore& store, const registry::ModelManifest& manifest,
                                   const std::string& training_id,
                                   std::span<const std::uint8_t> log_blob,
                                   const BackoffPolicy& policy, const Sleeper& sleep) {
  const registry::DataStore* ds = manifest.results_store();
  if (!ds) return {};
  if (ds->connection) store.authenticate(*ds->connection);
  std::vector<std::string> keys = {training_id + "/training-log.txt"};
  with_backoff(policy, [&] { return store.put(*ds->results_container, keys[0], log_blob); },
               sleep);
  return keys;
}

Dataset make_separable_dataset(std::uint64_t samples, std::uint32_t dim, std::uint64_t seed,
                               double margin) {
  Rng rng(seed);
  std::vector<double> normal(dim);
  double norm = 0.0;
  for (auto& v : normal) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : normal) v /= norm;

  Dataset d;
  d.samples = samples;
  d.dim = dim;
  d.label_kind = LabelKind::kBinary;
  d.features.reserve(samples * dim);
  d.labels.reserve(samples);
  std::vector<double> x(dim);
  while (d.labels.size() < samples) {
    double proj = 0.0;
    for (std::uint32_t j = 0; j < dim; ++j) {
      x[j] = 2.0 * rng.uniform() - 1.0;
      proj += x[j] * normal[j];
    }
    if (std::abs(proj) < margin / 2) continue;
    d.features.insert(d.features.end(), x.begin(), x.end());
    d.labels.push_back(proj > 0 ? 1.0 : 0.0);
  }
  return d;
}

Dataset make_linear_dataset(std::uint64_t samples, std::uint32_t dim, std::uint64_t seed,
                            double noise) {
  Rng rng(seed);
  std::vector<double> a(dim);
  for (auto& v : a) v = rng.normal();
  const double b = rng.normal();
  Dataset d;
  d.samples = samples;
  d.dim = dim;
  d.label_kind = LabelKind::kReal;
  for (std::uint64_t i = 0; i < samples; ++i) {
    double y = b;
    for (std::uint32_t j = 0; j < dim; ++j) {
      double x = 2.0 * rng.uniform() - 1.0;
      d.features.push_back(x);
      y += a[j] * x;
    }
    d.labels.push_back(y + noise * rng.normal());
  }
  return d;
}

}  // namespace dlaas::storage
