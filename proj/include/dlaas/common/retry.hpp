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

#include <chrono>
#include <functional>
#include <thread>
#include <utility>

#include "dlaas/common/error.hpp"

namespace dlaas {

// Exponential backoff for transient failures (IO_FAILURE,
// COORDSTORE_UNAVAILABLE). Defaults: base 100 ms, factor 2, 5 attempts.
struct BackoffPolicy {
  std::chrono::milliseconds base{100};
  double factor = 2.0;
  int max_attempts = 5;

  std::chrono::milliseconds delay_before(int attempt) const {
    // attempt is 1-based; no delay before the first one.
    double d = 0.0;
    if (attempt > 1) {
      d = static_cast<double>(base.count());
      for (int i = 2; i < attempt; ++i) d *= factor;
    }
    return std::chrono::milliseconds(static_cast<long long>(d));
  }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) {
  std::this_thread::sleep_for(d);
}

// Runs `fn` until it succeeds, a non-transient error escapes, or the attempt
// budget is spent (the last transient error is rethrown).
template <typename Fn>
auto with_backoff(const BackoffPolicy& policy, Fn&& fn,
                  const Sleeper& sleep = real_sleep) -> decltype(fn()) {
  for (int attempt = 1;; ++attempt) {
    if (auto d = policy.delay_before(attempt); d.count() > 0) sleep(d);
    try {
      return fn();
    } catch (const Error& e) {
      if (!is_transient(e.code()) || attempt >= policy.max_attempts) throw;
    }
  }
}

}  // namespace dlaas
