// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "branchbench/error.hpp"
#include "branchbench/types.hpp"

namespace branchbench {

struct Column {
  std::string name;
  ColumnType type = ColumnType::integer;
  bool nullable = false;
  // Value synthesized for rows that predate the column (ALTER TABLE ... ADD
  // COLUMN ... DEFAULT). Null means "no default": such a column must be
  // nullable to be addable.
  Value default_value{};
  // Generated payload length for text columns; also its byte cost.
  std::uint32_t text_length = 16;
};

struct ForeignKey {
  std::vector<std::string> columns;
  std::string ref_table;
  std::vector<std::string> ref_columns;
};

struct TableSchema {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::string> primary_key;  // names; always a key prefix here
  std::vector<ForeignKey> foreign_keys;

  int column_index(std::string_view col) const;
  std::vector<std::size_t> pk_indices() const;
  bool is_pk_column(std::string_view col) const;
};

// Fixed per-column metadata cost (catalog entry) used by storage accounting.
std::uint64_t column_meta_bytes(const Column& c);
std::uint64_t schema_meta_bytes(const TableSchema& t);

// Extracts the primary key from a full-width row.
Key key_of_row(const TableSchema& t, const Row& row);

// Validates that a value is storable in a column (type + nullability).
Result<void> check_value(const Column& c, const Value& v);

// The TPC-C portion of the CH-benCHmark schema plus the three TPC-H-style
// reference tables (region, nation, supplier). Row counts are controlled by
// RowMultipliers in datagen.hpp.
std::vector<TableSchema> ch_schema();

const TableSchema* find_table(const std::vector<TableSchema>& tables, std::string_view name);

}  // namespace branchbench
