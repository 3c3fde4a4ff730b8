// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "branchbench/datagen.hpp"
#include "branchbench/error.hpp"

namespace branchbench {

// One CSV per table (header row, \N for null, RFC-style quoting) plus
// manifest.json carrying config echo, schemas, row counts, and digests.
Result<void> export_dataset(const Dataset& ds, const std::filesystem::path& dir);
Result<Dataset> import_dataset(const std::filesystem::path& dir);

std::string table_to_csv(const TableData& td);
Result<TableData> table_from_csv(const TableSchema& schema, std::string_view csv);

std::uint64_t table_digest(const TableData& td);

}  // namespace branchbench
