// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "branchbench/datagen.hpp"
#include "branchbench/error.hpp"
#include "branchbench/opmodel.hpp"

namespace branchbench {

using BranchId = std::uint64_t;
constexpr BranchId kRootBranch = 0;

struct BranchInfo {
  BranchId id = 0;
  BranchId parent = 0;
  bool deleted = false;
};

struct StorageStats {
  std::uint64_t live_bytes = 0;         // reachable data + schema metadata
  std::uint64_t reclaimable_bytes = 0;  // allocated but awaiting gc
  std::uint64_t peak_live_bytes = 0;
  std::uint64_t reclaimed_bytes = 0;  // cumulative bytes returned
  std::map<BranchId, std::uint64_t> per_branch_bytes;
};

struct Capabilities {
  bool cross_branch_aggregate = false;
  bool storage_stats = false;
};

class Backend;

// One connection to one branch. execute() admits a single in-flight
// operation; concurrent callers serialize on the session.
class Session {
 public:
  virtual ~Session() = default;

  BranchId branch() const { return branch_; }
  bool connected() const { return connected_; }
  void close() { connected_ = false; }

  Result<OpResult> execute(const OperationDescriptor& op);

 protected:
  explicit Session(BranchId b) : branch_(b) {}
  virtual Result<OpResult> do_execute(const OperationDescriptor& op) = 0;

 private:
  BranchId branch_;
  bool connected_ = true;
  std::mutex mu_;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string_view name() const = 0;
  virtual Capabilities capabilities() const = 0;

  // O(1)-in-dataset-size unless the mechanism itself copies (fullcopy).
  virtual Result<BranchId> create_branch(BranchId parent) = 0;
  virtual Result<std::shared_ptr<Session>> connect_branch(BranchId branch) = 0;
  // Fails with conflict while live children exist; root is never deletable.
  virtual Result<void> delete_branch(BranchId branch) = 0;

  virtual Result<StorageStats> storage_stats() const = 0;
  // Returns bytes reclaimed by this pass (0 where reclamation is immediate).
  virtual std::uint64_t run_gc() = 0;

  virtual std::vector<BranchInfo> list_branches() const = 0;

  // Load path; the target branch must not already have the table.
  virtual Result<void> create_table(BranchId branch, const TableSchema& schema) = 0;
  virtual Result<void> bulk_load(BranchId branch, std::string_view table,
                                 const std::vector<std::pair<Key, Row>>& rows) = 0;
};

// Loads every table of the dataset into the branch (normally the root).
Result<void> load_dataset(const Dataset& ds, Backend& backend, BranchId branch = kRootBranch);

struct BackendOptions {
  // deltaoverlay: fold a branch's delta log into a materialized base once it
  // exceeds this many records (0 = never compact).
  std::uint32_t delta_compaction_threshold = 0;
  // pathcopy tree fanout and gc laziness budget.
  std::uint32_t pathcopy_fanout = 32;
  std::uint64_t pathcopy_gc_slack_bytes = 0;
};

// name is one of: fullcopy | deltaoverlay | pathcopy. external-sql backends
// are constructed directly (they need a transport).
Result<std::unique_ptr<Backend>> make_backend(std::string_view name,
                                              const BackendOptions& opts = {});
std::vector<std::string> builtin_backend_names();

struct RetryPolicy {
  std::uint32_t max_attempts = 4;
  std::chrono::milliseconds base_backoff{10};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{1000};
};

struct RetryAttempt {
  std::chrono::nanoseconds duration{0};  // time inside the call
  std::chrono::nanoseconds backoff{0};   // sleep after this attempt (0 on last)
  ErrorClass error = ErrorClass::none;   // none on success
};

template <typename R>
struct RetryOutcome {
  R result;
  std::vector<RetryAttempt> attempts;
};

// Runs fn until success, a non-retryable error, or attempt exhaustion.
// Backoff sequence: base, base*m, base*m^2, ... capped at max_backoff.
template <typename Fn>
RetryOutcome<std::invoke_result_t<Fn&>> with_retry(Fn&& fn, const RetryPolicy& policy) {
  using R = std::invoke_result_t<Fn&>;
  std::vector<RetryAttempt> attempts;
  auto backoff = policy.base_backoff;
  const std::uint32_t max_attempts = std::max(policy.max_attempts, 1u);
  for (std::uint32_t attempt = 0;; ++attempt) {
    const auto t0 = std::chrono::steady_clock::now();
    R r = fn();
    RetryAttempt rec;
    rec.duration = std::chrono::steady_clock::now() - t0;
    rec.error = r.ok() ? ErrorClass::none : r.error().cls;
    if (r.ok() || !r.error().retryable() || attempt + 1 >= max_attempts) {
      attempts.push_back(rec);
      return RetryOutcome<R>{std::move(r), std::move(attempts)};
    }
    rec.backoff = backoff;
    attempts.push_back(rec);
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(std::min<std::int64_t>(
        policy.max_backoff.count(),
        static_cast<std::int64_t>(static_cast<double>(backoff.count()) *
                                  policy.backoff_multiplier)));
  }
}

}  // namespace branchbench
