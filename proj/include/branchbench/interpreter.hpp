// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string_view>

#include "branchbench/error.hpp"
#include "branchbench/opmodel.hpp"
#include "branchbench/schema.hpp"

namespace branchbench {

// Read view of one table on one branch. Rows are logical: synthesized
// defaults filled in, dropped columns projected out.
class TableView {
 public:
  virtual ~TableView() = default;

  virtual const TableSchema& schema() const = 0;
  virtual std::optional<Row> get(const Key& key) const = 0;
  // Key-ordered scan over [lo, hi] (absent bound = open). Return false from
  // the callback to stop early.
  virtual void scan(const std::optional<Key>& lo, const std::optional<Key>& hi,
                    const std::function<bool(const Key&, const Row&)>& fn) const = 0;
  virtual std::uint64_t row_count() const = 0;
};

// Mutable logical view of one branch; each store implements this once and
// shares the operation interpreter. Implementations need not be thread-safe
// across branches: callers hold one access per executing session.
class BranchAccess {
 public:
  virtual ~BranchAccess() = default;

  virtual std::vector<std::string> table_names() const = 0;
  virtual const TableView* table(std::string_view name) const = 0;

  // insert fails with conflict on duplicate key. update/erase return the
  // number of rows touched (0 when the key is missing).
  virtual Result<void> insert_row(std::string_view table, Key key, Row row) = 0;
  virtual Result<std::int64_t> update_row(std::string_view table, const Key& key, Row row) = 0;
  virtual Result<std::int64_t> erase_row(std::string_view table, const Key& key) = 0;

  virtual Result<void> add_column(std::string_view table, const Column& col) = 0;
  virtual Result<void> drop_column(std::string_view table, std::string_view col) = 0;
  // Index metadata only; no physical structure is built.
  virtual Result<void> create_index(std::string_view table, std::string_view index_name,
                                    const std::vector<std::string>& columns) = 0;
};

// Resolves a latest-prefix reference against a logical schema: the
// highest-positioned column whose name starts with the prefix.
Result<std::string> resolve_column_ref(const ColumnRef& ref, const TableSchema& schema);

// Executes one descriptor against one branch. Mutations are collect-then-
// apply: matching rows are gathered from the view first, then written, so
// the scan never observes its own writes. Group output is ordered by group
// key; mutation application is ordered by row key.
Result<OpResult> interpret(const OperationDescriptor& op, BranchAccess& branch);

// Cross-branch execution: runs the inner aggregate per selected branch and
// merges rows, each prefixed with the branch label column.
using BranchResolver = std::function<BranchAccess*(const BranchSel&)>;
Result<OpResult> interpret_cross(const OperationDescriptor& op, const BranchResolver& resolve);

}  // namespace branchbench
