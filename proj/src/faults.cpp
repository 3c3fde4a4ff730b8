// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/faults.hpp"

#include <thread>
#include <utility>

#include <fmt/format.h>

namespace branchbench {

class FaultSession : public Session {
 public:
  FaultSession(BranchId branch, FaultInjectingBackend* owner, std::shared_ptr<Session> inner)
      : Session(branch), owner_(owner), inner_(std::move(inner)) {}

 protected:
  Result<OpResult> do_execute(const OperationDescriptor& op) override {
    if (owner_->cfg_.disable_cross_branch && op.kind == OpKind::cross_branch_aggregate)
      return make_error(ErrorClass::unsupported_operation,
                        "cross-branch aggregation disabled by fault configuration");
    if (auto f = owner_->draw_fault(); !f.ok()) return f.take_error();
    return inner_->execute(op);
  }

 private:
  FaultInjectingBackend* owner_;
  std::shared_ptr<Session> inner_;
};

FaultInjectingBackend::FaultInjectingBackend(std::unique_ptr<Backend> inner, FaultConfig cfg)
    : inner_(std::move(inner)),
      cfg_(cfg),
      name_(fmt::format("{}+faults", inner_->name())),
      rng_(mix64(cfg.seed ^ 0xFA017ull)) {}

Capabilities FaultInjectingBackend::capabilities() const {
  Capabilities caps = inner_->capabilities();
  if (cfg_.disable_cross_branch) caps.cross_branch_aggregate = false;
  return caps;
}

Result<void> FaultInjectingBackend::draw_fault() {
  if (cfg_.added_latency.count() > 0) std::this_thread::sleep_for(cfg_.added_latency);
  std::lock_guard<std::mutex> lk(mu_);
  if (cfg_.rate_limit_probability > 0 && rng_.chance(cfg_.rate_limit_probability)) {
    ++injected_;
    return make_error(ErrorClass::rate_limited, "synthetic rate limit");
  }
  if (cfg_.timeout_probability > 0 && rng_.chance(cfg_.timeout_probability)) {
    ++injected_;
    return make_error(ErrorClass::timeout, "synthetic timeout");
  }
  return {};
}

std::uint64_t FaultInjectingBackend::live_count() const {
  std::uint64_t live = 0;
  for (const auto& b : inner_->list_branches())
    if (!b.deleted) ++live;
  return live;
}

std::uint64_t FaultInjectingBackend::injected_failures() const {
  std::lock_guard<std::mutex> lk(mu_);
  return injected_;
}

Result<BranchId> FaultInjectingBackend::create_branch(BranchId parent) {
  if (auto f = draw_fault(); !f.ok()) return f.take_error();
  if (cfg_.live_branch_limit > 0) {
    // Serialize the check-then-create so two workers cannot both slip under
    // the cap. The inner create is fast on every reference backend.
    std::lock_guard<std::mutex> lk(mu_);
    if (live_count() >= cfg_.live_branch_limit) {
      ++injected_;
      return make_error(ErrorClass::branch_limit_exceeded,
                        fmt::format("live branch limit {} reached", cfg_.live_branch_limit));
    }
    return inner_->create_branch(parent);
  }
  return inner_->create_branch(parent);
}

Result<std::shared_ptr<Session>> FaultInjectingBackend::connect_branch(BranchId branch) {
  if (auto f = draw_fault(); !f.ok()) return f.take_error();
  auto inner = inner_->connect_branch(branch);
  if (!inner.ok()) return inner.take_error();
  return std::shared_ptr<Session>(new FaultSession(branch, this, inner.take()));
}

Result<void> FaultInjectingBackend::delete_branch(BranchId branch) {
  if (auto f = draw_fault(); !f.ok()) return f.take_error();
  return inner_->delete_branch(branch);
}

}  // namespace branchbench
