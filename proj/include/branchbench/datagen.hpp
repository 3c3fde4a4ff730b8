// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "branchbench/error.hpp"
#include "branchbench/schema.hpp"
#include "branchbench/types.hpp"

namespace branchbench {

// Row counts as multipliers of the warehouse count W (or absolute for the
// global tables item/region/nation/supplier).
struct RowMultipliers {
  std::uint32_t districts_per_warehouse = 10;
  std::uint32_t customers_per_district = 30;
  std::uint32_t orders_per_district = 30;
  std::uint32_t order_lines_per_order = 10;
  std::uint32_t new_orders_per_district = 10;  // last N orders of each district
  std::uint32_t stock_per_warehouse = 1000;
  std::uint32_t items = 1000;
  std::uint32_t regions = 5;
  std::uint32_t nations = 10;
  std::uint32_t suppliers = 20;
};

struct DataGenConfig {
  std::uint32_t warehouses = 1;
  std::uint64_t seed = 42;
  RowMultipliers m;
};

struct TableData {
  TableSchema schema;
  std::vector<std::pair<Key, Row>> rows;  // sorted by key

  std::uint64_t data_bytes() const;
};

struct Dataset {
  DataGenConfig config;
  std::vector<TableData> tables;

  const TableData* table(std::string_view name) const;
  std::uint64_t data_bytes() const;
  std::uint64_t row_count() const;
};

// Rejects zero multipliers, stock ids exceeding the item count, and more
// new_order rows than orders.
Result<void> validate_config(const DataGenConfig& cfg);

std::uint64_t table_row_count(const DataGenConfig& cfg, std::string_view table);

// Cell values are pure functions of (seed, table, row, column), so the two
// fill strategies below must produce bit-identical datasets.
Result<Dataset> generate_dataset(const DataGenConfig& cfg);         // OpenMP fill
Result<Dataset> generate_dataset_serial(const DataGenConfig& cfg);  // reference fill

// Order-sensitive 64-bit digest over every key and cell; cheap equality probe.
std::uint64_t dataset_digest(const Dataset& ds);

}  // namespace branchbench
