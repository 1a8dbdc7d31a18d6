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

// Writes a synthetic dataset into a container of the local object store.

#include <iostream>

#include <CLI11.hpp>

#include "dlaas/common/error.hpp"
#include "dlaas/storage/dataset.hpp"
#include "dlaas/storage/object_store.hpp"

int main(int argc, char** argv) {
  using namespace dlaas;
  CLI::App app{"dlaas_datagen: synthetic training data", "dlaas_datagen"};
  std::string data_dir = "dlaas-data";
  std::string container;
  std::string kind = "separable";
  std::uint64_t samples = 1000;
  std::uint32_t dim = 2;
  std::uint64_t seed = 1;
  if (const char* d = std::getenv("DLAAS_DATA_DIR"); d && *d) data_dir = d;
  app.add_option("--data-dir", data_dir, "same directory the server uses (env DLAAS_DATA_DIR)");
  app.add_option("--container", container, "training container named in the manifest")->required();
  app.add_option("--kind", kind, "separable (classification) or linear (regression)")
      ->check(CLI::IsMember({"separable", "linear"}));
  app.add_option("--samples", samples)->check(CLI::PositiveNumber);
  app.add_option("--dim", dim)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  try {
    storage::FsObjectStore store(std::filesystem::path(data_dir) / "objects");
    auto ds = kind == "linear" ? storage::make_linear_dataset(samples, dim, seed)
                               : storage::make_separable_dataset(samples, dim, seed);
    store.put(container, storage::kDatasetKey, ds.encode());
    std::cout << container << "/" << storage::kDatasetKey << " " << samples << "x" << dim << "\n";
  } catch (const Error& e) {
    std::cerr << "dlaas_datagen: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
