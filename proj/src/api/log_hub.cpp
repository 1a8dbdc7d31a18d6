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

#include "dlaas/api/log_hub.hpp"

#include <algorithm>
#include <fstream>

#include "dlaas/common/error.hpp"

namespace dlaas::api {

LogHub::LogHub(Lookup lookup, std::chrono::milliseconds poll)
    : lookup_(std::move(lookup)), poll_(poll) {}

LogHub::~LogHub() { stop(); }

std::shared_ptr<LineQueue> LogHub::subscribe(const std::string& tid) {
  if (!lookup_(tid)) throw Error(Errc::kNotFound, tid);
  auto q = std::make_shared<LineQueue>();
  std::lock_guard lock(mu_);
  for (auto& t : finished_) {
    if (t.joinable()) t.join();  // already returned or about to
  }
  finished_.clear();
  if (stopping_) {
    q->close();
    return q;
  }
  auto& ch = channels_[tid];
  if (!ch) {
    ch = std::make_shared<Channel>();
    ch->thread = std::thread([this, tid, c = ch] { tail(tid, c); });
  }
  for (const auto& l : ch->lines) q->push(l);
  if (ch->done) {
    q->close();
  } else {
    ch->subs.push_back(q);
  }
  return q;
}

void LogHub::unsubscribe(const std::string& tid, const std::shared_ptr<LineQueue>& q) {
  std::lock_guard lock(mu_);
  auto it = channels_.find(tid);
  if (it == channels_.end()) return;
  auto& subs = it->second->subs;
  subs.erase(std::remove(subs.begin(), subs.end(), q), subs.end());
}

void LogHub::tail(const std::string& tid, std::shared_ptr<Channel> ch) {
  std::uint64_t offset = 0;
  std::string partial;
  bool last_pass = false;
  for (;;) {
    auto info = lookup_(tid);
    // A terminal job gets one more read so lines written just before the
    // state change are not lost.
    const bool finishing = last_pass || !info;
    if (info && info->terminal) last_pass = true;

    std::vector<std::string> fresh;
    if (info) {
      std::ifstream in(info->log_path, std::ios::binary);
      if (in) {
        in.seekg(static_cast<std::streamoff>(offset));
        std::string chunk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        offset += chunk.size();
        partial += chunk;
        std::size_t start = 0;
        for (auto nl = partial.find('\n'); nl != std::string::npos;
             nl = partial.find('\n', start)) {
          fresh.push_back(partial.substr(start, nl - start));
          start = nl + 1;
        }
        partial.erase(0, start);
      }
    }
    if (finishing && !partial.empty()) {
      fresh.push_back(std::move(partial));
      partial.clear();
    }
    {
      std::lock_guard lock(mu_);
      for (auto& l : fresh) {
        for (auto& q : ch->subs) q->push(l);
        ch->lines.push_back(std::move(l));
      }
      if (finishing || stopping_) {
        ch->done = true;
        for (auto& q : ch->subs) q->close();
        ch->subs.clear();
        // Later subscribers start a fresh channel that replays the file.
        auto it = channels_.find(tid);
        if (it != channels_.end() && it->second == ch) {
          finished_.push_back(std::move(ch->thread));
          channels_.erase(it);
        }
        return;
      }
    }
    std::this_thread::sleep_for(poll_);
  }
}

void LogHub::stop() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    for (auto& [tid, ch] : channels_) {
      if (ch->thread.joinable()) threads.push_back(std::move(ch->thread));
    }
  }
  for (auto& t : threads) t.join();
  std::lock_guard lock(mu_);
  channels_.clear();
  for (auto& t : finished_) {
    if (t.joinable()) {
      if (t.get_id() == std::this_thread::get_id()) {
        t.detach();
      } else {
        t.join();
      }
    }
  }
  finished_.clear();
}

}  // namespace dlaas::api
