// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "branchbench/error.hpp"
#include "branchbench/opmodel.hpp"
#include "branchbench/schema.hpp"

namespace branchbench {

// Renders a descriptor as one PostgreSQL-flavored statement (no trailing
// semicolon). Cross-branch aggregates have no single-connection SQL form and
// return unsupported_operation; latest_prefix column refs must be resolved
// to concrete names before rendering.
Result<std::string> render_sql(const OperationDescriptor& op);

// DDL for the load path.
std::string render_create_table(const TableSchema& t);
std::string render_sql_type(ColumnType t, std::uint32_t text_length);

// Multi-row INSERT for bulk loads.
std::string render_insert(const TableSchema& t, const std::vector<std::pair<Key, Row>>& rows,
                          std::size_t begin, std::size_t end);

}  // namespace branchbench
