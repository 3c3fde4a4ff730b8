// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "branchbench/storemodel.hpp"

namespace branchbench {

// Branch-per-copy store: creating a branch deep-copies the parent's tables,
// so B branches over a dataset of L bytes hold exactly (B+1)*L bytes and
// branch creation costs O(L). Deletion reclaims immediately.
class FullCopyBackend final : public EmbeddedBackend {
 public:
  std::string_view name() const override { return "fullcopy"; }

  Result<BranchId> create_branch(BranchId parent) override;
  Result<void> delete_branch(BranchId branch) override;
  Result<StorageStats> storage_stats() const override;
  std::uint64_t run_gc() override { return 0; }  // reclamation is immediate

  Result<void> create_table(BranchId branch, const TableSchema& schema) override;
  Result<void> bulk_load(BranchId branch, std::string_view table,
                         const std::vector<std::pair<Key, Row>>& rows) override;

  // Test hook: re-derive a branch's byte count from scratch so the
  // incremental accounting can be cross-checked.
  Result<std::uint64_t> recounted_branch_bytes(BranchId branch) const;

 protected:
  Result<std::unique_ptr<BranchAccess>> make_access(BranchId branch) override;

 private:
  friend class FullCopyAccess;

  struct Table {
    TableSchema schema;
    std::vector<IndexMeta> indexes;
    std::map<Key, Row> rows;
  };
  struct BranchData {
    std::map<std::string, Table> tables;
    std::uint64_t bytes = 0;
  };

  // delta may be negative; grows update the peak. Callers hold data_mu_.
  void note_bytes(BranchData& br, std::int64_t delta);

  std::map<BranchId, BranchData> data_{{kRootBranch, {}}};
  std::uint64_t live_total_ = 0;
  std::uint64_t peak_live_ = 0;
  std::uint64_t reclaimed_ = 0;
};

}  // namespace branchbench
