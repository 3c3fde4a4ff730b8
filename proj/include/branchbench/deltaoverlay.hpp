// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "branchbench/storemodel.hpp"

namespace branchbench {

// Overlay store: the root holds the materialized base; every other branch
// holds only a per-table delta log (newest record per key indexed) plus its
// own schema changes. Branch creation is O(schema). A point read walks the
// branch chain leaf to root, one index probe per level, so read cost grows
// with branch depth. Deleting a branch drops its log immediately.
//
// Tables must be created (and normally loaded) before branching: a branch
// snapshots the table list of its parent at creation time.
class DeltaOverlayBackend final : public EmbeddedBackend {
 public:
  explicit DeltaOverlayBackend(const BackendOptions& opts = {})
      : compaction_threshold_(opts.delta_compaction_threshold) {}

  std::string_view name() const override { return "deltaoverlay"; }

  Result<BranchId> create_branch(BranchId parent) override;
  Result<void> delete_branch(BranchId branch) override;
  Result<StorageStats> storage_stats() const override;
  std::uint64_t run_gc() override { return 0; }  // reclamation is immediate

  Result<void> create_table(BranchId branch, const TableSchema& schema) override;
  Result<void> bulk_load(BranchId branch, std::string_view table,
                         const std::vector<std::pair<Key, Row>>& rows) override;

  // Test hooks.
  std::uint64_t delta_record_count(BranchId branch) const;
  std::uint64_t compaction_passes() const;

 protected:
  Result<std::unique_ptr<BranchAccess>> make_access(BranchId branch) override;

 private:
  friend class DeltaOverlayAccess;

  struct TableDelta {
    // Append-only log; a record is a put (row at the writer's slot width)
    // or a tombstone. latest points at the newest record per key.
    std::vector<std::pair<Key, std::optional<Row>>> records;
    std::map<Key, std::size_t> latest;
    std::uint64_t bytes = 0;
  };
  struct BaseTable {
    std::map<Key, Row> rows;
    std::uint64_t bytes = 0;
  };
  struct BranchState {
    BranchId parent = kRootBranch;
    std::map<std::string, SlotSchema> schemas;  // snapshot + own changes
    std::map<std::string, TableDelta> deltas;
    std::uint64_t schema_delta_bytes = 0;  // own add/drop/index metadata
    std::uint64_t delta_bytes() const;
  };

  void note_bytes(std::int64_t delta);
  void fold_log(TableDelta& td);   // keeps the newest record per key
  void maybe_fold(TableDelta& td);  // applies the compaction threshold
  Result<std::unique_ptr<BranchAccess>> make_access_locked(BranchId branch);

  std::uint32_t compaction_threshold_;
  std::map<BranchId, BranchState> data_{{kRootBranch, {}}};
  std::map<std::string, BaseTable> base_;  // root data, materialized
  std::uint64_t base_bytes_ = 0;           // incl. root schema metadata
  std::uint64_t live_total_ = 0;
  std::uint64_t peak_live_ = 0;
  std::uint64_t reclaimed_ = 0;
  std::uint64_t compactions_ = 0;
};

}  // namespace branchbench
