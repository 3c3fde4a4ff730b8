// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "branchbench/persistent_map.hpp"
#include "branchbench/storemodel.hpp"

namespace branchbench {

// Path-copying store: each branch table is a root into one shared
// persistent tree arena. Branching refs the parent's roots (O(tables));
// writes copy a root-to-leaf path and free the overwritten path eagerly
// when no other branch shares it. Deleting a branch parks its roots on a
// deferred list; run_gc() releases them and reports the bytes returned.
class PathCopyBackend final : public EmbeddedBackend {
 public:
  explicit PathCopyBackend(const BackendOptions& opts = {})
      : arena_(opts.pathcopy_fanout) {}

  std::string_view name() const override { return "pathcopy"; }

  Result<BranchId> create_branch(BranchId parent) override;
  Result<void> delete_branch(BranchId branch) override;
  Result<StorageStats> storage_stats() const override;
  std::uint64_t run_gc() override;

  Result<void> create_table(BranchId branch, const TableSchema& schema) override;
  Result<void> bulk_load(BranchId branch, std::string_view table,
                         const std::vector<std::pair<Key, Row>>& rows) override;

  // Test hooks: arena introspection for reachability checks.
  const NodeArena& arena() const { return arena_; }
  std::vector<NodeId> live_roots() const;      // roots of live branches
  std::vector<NodeId> deferred_roots() const;  // roots awaiting gc

 protected:
  Result<std::unique_ptr<BranchAccess>> make_access(BranchId branch) override;

 private:
  friend class PathCopyAccess;

  struct TableState {
    NodeId root = kNilNode;
    std::uint64_t count = 0;
  };
  struct BranchState {
    std::map<std::string, SlotSchema> schemas;
    std::map<std::string, TableState> tables;
    std::uint64_t schema_meta_bytes = 0;  // metadata this branch pays for
  };

  void note_peak();

  NodeArena arena_;
  std::map<BranchId, BranchState> data_{{kRootBranch, {}}};
  std::vector<NodeId> deferred_;  // parked root handles from deleted branches
  std::uint64_t schema_meta_live_ = 0;
  std::uint64_t peak_live_ = 0;  // peak of allocated-and-not-yet-freed bytes
  std::uint64_t reclaimed_ = 0;
};

}  // namespace branchbench
