// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "branchbench/backend.hpp"
#include "branchbench/interpreter.hpp"
#include "branchbench/schema.hpp"

namespace branchbench {

struct IndexMeta {
  std::string name;
  std::vector<std::string> columns;
};

inline std::uint64_t index_meta_bytes(const IndexMeta& ix) {
  return ix.name.size() + 8 * ix.columns.size();
}

// Slot-based evolving schema: every column ever added keeps its physical
// slot; drops only flag the slot. Stored rows carry the slot width of the
// writing moment, so rows written before an AddColumn are shorter and the
// reader synthesizes the default. The logical schema is the non-dropped
// slots in slot order.
struct SlotSchema {
  std::string name;
  std::vector<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys;
  std::vector<Column> slots;
  std::vector<bool> dropped;
  std::vector<IndexMeta> indexes;

  static SlotSchema from(const TableSchema& t);

  TableSchema logical() const;
  int live_slot_of(std::string_view column) const;  // -1 if absent/dropped
  bool name_in_use(std::string_view column) const;  // among live slots

  // Expands a logical-width row to the current slot width (dropped slots
  // hold null placeholders).
  Row physical_row(const Row& logical) const;
  // Projects a stored row (any historical width) to the logical schema.
  Row logical_row(const Row& stored) const;
};

// Branch lifecycle bookkeeping shared by the embedded stores; thread-safe.
class BranchCatalog {
 public:
  BranchCatalog();

  Result<BranchId> create(BranchId parent);
  // conflict while live children exist or for the root; not_found otherwise.
  Result<void> remove(BranchId b);
  bool live(BranchId b) const;
  Result<void> check_live(BranchId b) const;
  std::vector<BranchInfo> list() const;
  std::vector<BranchId> chain_to_root(BranchId b) const;  // b, parent, ..., root

 private:
  struct Entry {
    BranchId parent = 0;
    bool deleted = false;
    std::uint32_t live_children = 0;
  };
  mutable std::mutex mu_;
  std::map<BranchId, Entry> entries_;
  BranchId next_ = 1;
};

// Common plumbing for the in-process reference stores: session management,
// the read/write lock, interpreter dispatch, canonical dumps. Subclasses
// implement branch data management and expose BranchAccess views.
class EmbeddedBackend : public Backend {
 public:
  Capabilities capabilities() const override { return {true, true}; }

  Result<std::shared_ptr<Session>> connect_branch(BranchId branch) override;
  std::vector<BranchInfo> list_branches() const override { return catalog_.list(); }

  Result<OpResult> execute_on(BranchId branch, const OperationDescriptor& op);

  // Canonical dump: logical CSV of the branch's tables, table name headers,
  // rows in key order. Dumps are backend-independent by construction.
  Result<std::string> dump_branch(BranchId branch, const std::vector<std::string>& tables = {});

 protected:
  // Called with the data lock held (unique for mutations, shared for reads).
  virtual Result<std::unique_ptr<BranchAccess>> make_access(BranchId branch) = 0;

  BranchCatalog catalog_;
  mutable std::shared_mutex data_mu_;
};

// Rebuilds per-branch logical bytes by full recomputation; test hook shared
// by the stores' incremental accounting checks.
std::uint64_t recompute_branch_bytes(BranchAccess& access);

}  // namespace branchbench
