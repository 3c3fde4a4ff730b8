// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "branchbench/schema.hpp"
#include "branchbench/types.hpp"

namespace branchbench {

enum class OpKind {
  add_column,
  drop_column,
  create_index,
  insert_rows,
  update_where,
  delete_where,
  point_read,
  range_read,
  aggregate,
  cross_branch_aggregate,
};

std::string_view op_kind_name(OpKind k);
bool op_is_read(OpKind k);
bool op_is_schema(OpKind k);

enum class OpPhase : std::uint8_t { load = 0, branch = 1, mutate = 2, evaluate = 3, cross = 4 };

std::string_view op_phase_name(OpPhase p);

// op_id layout: worker(16) | step(24) | phase(4) | ordinal(20). Unique per
// run; its hex form suffixes generated column names ("c_clean_xx" style).
std::uint64_t pack_op_id(std::uint32_t worker, std::uint32_t step, OpPhase phase,
                         std::uint32_t ordinal);
struct OpIdParts {
  std::uint32_t worker, step, ordinal;
  OpPhase phase;
};
OpIdParts unpack_op_id(std::uint64_t id);
std::string op_id_suffix(std::uint64_t id);

struct Provenance {
  std::string workflow;
  std::uint32_t worker = 0;
  std::uint32_t step = 0;
  OpPhase phase = OpPhase::mutate;
  std::uint32_t ordinal = 0;
};

// Column reference: either a concrete name or "latest column whose name
// starts with prefix" (resolved per branch; cross-branch queries use it to
// address per-branch generated columns).
struct ColumnRef {
  std::string name;
  bool latest_prefix = false;

  static ColumnRef named(std::string n) { return {std::move(n), false}; }
  static ColumnRef latest(std::string prefix) { return {std::move(prefix), true}; }
};

struct Predicate {
  enum class Kind { always_true, key_equals, key_range, is_null, not_null, compare };
  Kind kind = Kind::always_true;
  Key key;      // key_equals
  Key lo, hi;   // key_range, inclusive bounds
  std::string column;  // is_null / not_null / compare
  CmpOp op = CmpOp::eq;
  Value rhs;

  static Predicate all() { return {}; }
  static Predicate key_eq(Key k);
  static Predicate key_between(Key lo, Key hi);
  static Predicate null(std::string col);
  static Predicate not_null_p(std::string col);
  static Predicate cmp(std::string col, CmpOp op, Value rhs);
};

// SET-list item: constant, threshold CASE over a source column, or
// additive delta on a numeric column.
struct SetItem {
  enum class Kind { constant, case_thresholds, add };
  Kind kind = Kind::constant;
  std::string column;
  Value constant;
  std::string source;              // case source / add target
  std::vector<double> thresholds;  // ascending; outputs.size() == thresholds.size()+1
  std::vector<Value> outputs;
  double delta = 0;

  static SetItem set(std::string col, Value v);
  static SetItem case_of(std::string col, std::string src, std::vector<double> thresholds,
                         std::vector<Value> outputs);
  static SetItem add(std::string col, double delta);
};

enum class AggFn { count, count_where, sum, avg, min, max, spread };

std::string_view agg_fn_name(AggFn f);

struct AggExpr {
  AggFn fn = AggFn::count;
  ColumnRef column;   // unused for count
  Predicate filter;   // count_where only
  std::string alias;
};

// FK equi-join with one other table: pairs are (left column, right column).
struct JoinSpec {
  std::string table;
  std::vector<std::pair<std::string, std::string>> on;
};

struct Having {
  std::size_t agg_index = 0;
  CmpOp op = CmpOp::eq;
  bool rhs_is_column = false;  // compare against a group-by column instead
  Value rhs;
  std::string rhs_column;
};

struct AggregateSpec {
  std::string table;
  std::optional<JoinSpec> join;
  Predicate where;
  std::vector<ColumnRef> group_by;
  std::vector<AggExpr> aggs;
  std::optional<Having> having;
};

// One selected branch for a cross-branch query. The label is scheduler-level
// (branch tree node ordinal), stable across backends for canonical output.
struct BranchSel {
  std::uint64_t backend_branch = 0;
  std::string label;
};

struct OperationDescriptor {
  OpKind kind = OpKind::point_read;
  std::uint64_t op_id = 0;
  Provenance provenance;

  std::string table;

  Column column;            // add_column
  std::string column_name;  // drop_column

  std::vector<std::string> index_columns;  // create_index
  std::string index_name;

  std::vector<std::string> insert_columns;  // insert_rows
  std::vector<Row> insert_values;

  std::vector<SetItem> set_items;  // update_where
  Predicate where;                 // update / delete / aggregate fallback filter

  Key key;      // point_read
  Key lo;       // range_read start (inclusive)
  std::uint32_t limit = 0;  // range_read row cap

  AggregateSpec agg;               // aggregate / cross_branch_aggregate
  std::vector<BranchSel> branches;  // cross_branch_aggregate
};

struct OpResult {
  std::int64_t affected = 0;
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

// Canonical single-line-per-row text form used by dumps and tests.
std::string result_to_text(const OpResult& r);

// Debug/JSON form of a descriptor (one line); feeds op-stream digests.
std::string descriptor_to_json(const OperationDescriptor& op);

}  // namespace branchbench
