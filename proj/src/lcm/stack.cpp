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

#include "dlaas/lcm/stack.hpp"

#include "dlaas/common/error.hpp"

namespace dlaas::lcm {

Stack::Stack(StackOptions opts) : opts_(std::move(opts)) {
  if (opts_.data_dir.empty()) throw Error(Errc::kInvalidArgument, "data_dir is required");
  std::filesystem::create_directories(opts_.data_dir);
  opts_.lcm.log_root = opts_.data_dir / "logs";
  store_ = std::make_unique<coord::Store>(opts_.coord);
  objects_ = std::make_unique<storage::FsObjectStore>(opts_.data_dir / "objects");
  registry_ = std::make_unique<registry::Registry>(*objects_);
  RuntimeOptions ro;
  ro.work_root = opts_.data_dir / "work";
  ro.log_root = opts_.lcm.log_root;
  ro.session_ttl = opts_.session_ttl;
  ro.status_period = opts_.status_period;
  runtime_ = std::make_unique<TaskRuntime>(*store_, *objects_, ro);
  cluster_ = std::make_unique<cluster::Cluster>(opts_.nodes, runtime_->runner());
  registry_->set_in_use_check([this](const std::string& id) {
    auto l = lcm_shared();
    if (!l) throw Error(Errc::kIoFailure, "lifecycle manager unavailable");
    return l->model_in_use(id);
  });
  admin_session_ = std::make_unique<coord::LocalClient>(*store_);
  lcm_ = make_lcm();
  if (opts_.start_lcm) lcm_->start();
}

std::shared_ptr<Lcm> Stack::make_lcm() {
  struct Box {
    std::unique_ptr<coord::LocalClient> session;
    std::unique_ptr<Lcm> lcm;
  };
  auto box = std::make_shared<Box>();
  box->session = std::make_unique<coord::LocalClient>(*store_);
  box->lcm = std::make_unique<Lcm>(*box->session, *cluster_, *objects_, *registry_, opts_.lcm);
  return std::shared_ptr<Lcm>(box, box->lcm.get());
}

Stack::~Stack() {
  kill_lcm();
  // Tasks go before the stores they write to.
  cluster_.reset();
  admin_session_.reset();
}

Lcm& Stack::lcm() {
  auto l = lcm_shared();
  if (!l) throw Error(Errc::kInvalidState, "lifecycle manager is down");
  return *l;
}

std::shared_ptr<Lcm> Stack::lcm_shared() const {
  std::lock_guard lock(lcm_mu_);
  return lcm_;
}

void Stack::kill_lcm() {
  std::shared_ptr<Lcm> l;
  {
    std::lock_guard lock(lcm_mu_);
    l = std::move(lcm_);
  }
  if (l) l->stop();
}

void Stack::start_lcm() {
  std::lock_guard lock(lcm_mu_);
  if (lcm_) return;
  lcm_ = make_lcm();
  lcm_->start();
}

void Stack::restart_lcm() {
  kill_lcm();
  start_lcm();
}

}  // namespace dlaas::lcm
