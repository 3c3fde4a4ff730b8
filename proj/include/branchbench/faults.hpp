// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "branchbench/backend.hpp"
#include "branchbench/rng.hpp"

namespace branchbench {

// Synthetic failure modes layered over any backend, so the harness's retry,
// wait-time, and failure-accounting paths can be exercised without a cloud
// service misbehaving on cue.
struct FaultConfig {
  // Cap on concurrently live (non-deleted) branches, root included; creates
  // that would exceed it fail with branch_limit_exceeded. 0 = unlimited.
  std::uint32_t live_branch_limit = 0;
  // Per-call probability of a synthetic rate_limited / timeout failure.
  // Lifecycle calls and executes draw independently.
  double rate_limit_probability = 0.0;
  double timeout_probability = 0.0;
  // Flat latency added to every intercepted call.
  std::chrono::microseconds added_latency{0};
  // Pretend the service cannot aggregate across branches.
  bool disable_cross_branch = false;
  std::uint64_t seed = 1;

  bool any_active() const {
    return live_branch_limit > 0 || rate_limit_probability > 0 || timeout_probability > 0 ||
           added_latency.count() > 0 || disable_cross_branch;
  }
};

class FaultInjectingBackend : public Backend {
 public:
  FaultInjectingBackend(std::unique_ptr<Backend> inner, FaultConfig cfg);

  std::string_view name() const override { return name_; }
  Capabilities capabilities() const override;

  Result<BranchId> create_branch(BranchId parent) override;
  Result<std::shared_ptr<Session>> connect_branch(BranchId branch) override;
  Result<void> delete_branch(BranchId branch) override;

  Result<StorageStats> storage_stats() const override { return inner_->storage_stats(); }
  std::uint64_t run_gc() override { return inner_->run_gc(); }
  std::vector<BranchInfo> list_branches() const override { return inner_->list_branches(); }

  Result<void> create_table(BranchId branch, const TableSchema& schema) override {
    return inner_->create_table(branch, schema);  // load path is never faulted
  }
  Result<void> bulk_load(BranchId branch, std::string_view table,
                         const std::vector<std::pair<Key, Row>>& rows) override {
    return inner_->bulk_load(branch, table, rows);
  }

  Backend& inner() { return *inner_; }
  std::uint64_t injected_failures() const;

 private:
  friend class FaultSession;
  // Latency sleep plus one failure draw; ok() when the call may proceed.
  Result<void> draw_fault();
  std::uint64_t live_count() const;

  std::unique_ptr<Backend> inner_;
  FaultConfig cfg_;
  std::string name_;
  mutable std::mutex mu_;  // guards rng_ and injected_
  Rng rng_;
  std::uint64_t injected_ = 0;
};

}  // namespace branchbench
