// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/schema.hpp"

#include <fmt/format.h>

namespace branchbench {

int TableSchema::column_index(std::string_view col) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == col) return static_cast<int>(i);
  return -1;
}

std::vector<std::size_t> TableSchema::pk_indices() const {
  std::vector<std::size_t> out;
  out.reserve(primary_key.size());
  for (const auto& name : primary_key) {
    const int idx = column_index(name);
    if (idx >= 0) out.push_back(static_cast<std::size_t>(idx));
  }
  return out;
}

bool TableSchema::is_pk_column(std::string_view col) const {
  for (const auto& name : primary_key)
    if (name == col) return true;
  return false;
}

std::uint64_t column_meta_bytes(const Column& c) {
  // name + type/nullable/length fields + default payload.
  return c.name.size() + 8 + value_bytes(c.default_value);
}

std::uint64_t schema_meta_bytes(const TableSchema& t) {
  std::uint64_t n = t.name.size() + 8;
  for (const auto& c : t.columns) n += column_meta_bytes(c);
  return n;
}

Key key_of_row(const TableSchema& t, const Row& row) {
  Key k;
  for (std::size_t idx : t.pk_indices()) {
    const auto* v = idx < row.size() ? std::get_if<std::int64_t>(&row[idx]) : nullptr;
    k.push_back(v ? *v : 0);
  }
  return k;
}

Result<void> check_value(const Column& c, const Value& v) {
  if (is_null(v)) {
    if (!c.nullable)
      return make_error(ErrorClass::unsupported_operation,
                        fmt::format("null not allowed in column {}", c.name));
    return {};
  }
  bool ok = false;
  switch (c.type) {
    case ColumnType::integer:
    case ColumnType::timestamp:
      ok = std::holds_alternative<std::int64_t>(v);
      break;
    case ColumnType::decimal:
      ok = std::holds_alternative<double>(v) || std::holds_alternative<std::int64_t>(v);
      break;
    case ColumnType::text:
      ok = std::holds_alternative<std::string>(v);
      break;
    case ColumnType::boolean:
      ok = std::holds_alternative<bool>(v);
      break;
  }
  if (!ok)
    return make_error(ErrorClass::unsupported_operation,
                      fmt::format("type mismatch for column {}", c.name));
  return {};
}

namespace {

Column ic(std::string name, bool nullable = false) {
  return Column{std::move(name), ColumnType::integer, nullable, Value{}, 0};
}
Column dc(std::string name, bool nullable = false) {
  return Column{std::move(name), ColumnType::decimal, nullable, Value{}, 0};
}
Column tc(std::string name, std::uint32_t len, bool nullable = false) {
  return Column{std::move(name), ColumnType::text, nullable, Value{}, len};
}
Column bc(std::string name, bool nullable = false) {
  return Column{std::move(name), ColumnType::boolean, nullable, Value{}, 0};
}
Column ts(std::string name, bool nullable = false) {
  return Column{std::move(name), ColumnType::timestamp, nullable, Value{}, 0};
}

}  // namespace

std::vector<TableSchema> ch_schema() {
  std::vector<TableSchema> out;

  out.push_back(TableSchema{
      "warehouse",
      {ic("w_id"), tc("w_name", 10), tc("w_state", 2), dc("w_tax"), dc("w_ytd")},
      {"w_id"},
      {}});

  out.push_back(TableSchema{
      "district",
      {ic("d_w_id"), ic("d_id"), tc("d_name", 10), dc("d_tax"), dc("d_ytd"), ic("d_next_o_id")},
      {"d_w_id", "d_id"},
      {{{"d_w_id"}, "warehouse", {"w_id"}}}});

  out.push_back(TableSchema{
      "customer",
      {ic("c_w_id"), ic("c_d_id"), ic("c_id"), tc("c_first", 16), tc("c_last", 16),
       tc("c_credit", 2), dc("c_balance", true), dc("c_ytd_payment"), ic("c_payment_cnt"),
       dc("c_discount"), ts("c_since")},
      {"c_w_id", "c_d_id", "c_id"},
      {{{"c_w_id", "c_d_id"}, "district", {"d_w_id", "d_id"}}}});

  out.push_back(TableSchema{
      "orders",
      {ic("o_w_id"), ic("o_d_id"), ic("o_id"), ic("o_c_id"), ts("o_entry_d"),
       ic("o_carrier_id", true), ic("o_ol_cnt"), bc("o_all_local")},
      {"o_w_id", "o_d_id", "o_id"},
      {{{"o_w_id", "o_d_id", "o_c_id"}, "customer", {"c_w_id", "c_d_id", "c_id"}}}});

  out.push_back(TableSchema{
      "order_line",
      {ic("ol_w_id"), ic("ol_d_id"), ic("ol_o_id"), ic("ol_number"), ic("ol_i_id"),
       ic("ol_supply_w_id"), ic("ol_quantity"), dc("ol_amount"), ts("ol_delivery_d", true),
       tc("ol_dist_info", 24)},
      {"ol_w_id", "ol_d_id", "ol_o_id", "ol_number"},
      {{{"ol_w_id", "ol_d_id", "ol_o_id"}, "orders", {"o_w_id", "o_d_id", "o_id"}},
       {{"ol_supply_w_id", "ol_i_id"}, "stock", {"s_w_id", "s_i_id"}}}});

  out.push_back(TableSchema{
      "new_order",
      {ic("no_w_id"), ic("no_d_id"), ic("no_o_id")},
      {"no_w_id", "no_d_id", "no_o_id"},
      {{{"no_w_id", "no_d_id", "no_o_id"}, "orders", {"o_w_id", "o_d_id", "o_id"}}}});

  out.push_back(TableSchema{
      "stock",
      {ic("s_w_id"), ic("s_i_id"), ic("s_quantity"), dc("s_ytd"), ic("s_order_cnt"),
       ic("s_remote_cnt"), tc("s_dist_01", 24)},
      {"s_w_id", "s_i_id"},
      {{{"s_w_id"}, "warehouse", {"w_id"}}, {{"s_i_id"}, "item", {"i_id"}}}});

  out.push_back(TableSchema{
      "item",
      {ic("i_id"), ic("i_im_id"), tc("i_name", 14), dc("i_price"), tc("i_data", 26)},
      {"i_id"},
      {}});

  // One row per customer; real CH-benCHmark history is keyless, but every
  // table needs a primary key in this data model.
  out.push_back(TableSchema{
      "history",
      {ic("h_c_w_id"), ic("h_c_d_id"), ic("h_c_id"), ts("h_date"), dc("h_amount"),
       tc("h_data", 24)},
      {"h_c_w_id", "h_c_d_id", "h_c_id"},
      {{{"h_c_w_id", "h_c_d_id", "h_c_id"}, "customer", {"c_w_id", "c_d_id", "c_id"}}}});

  out.push_back(TableSchema{
      "region",
      {ic("r_regionkey"), tc("r_name", 12), tc("r_comment", 32)},
      {"r_regionkey"},
      {}});

  out.push_back(TableSchema{
      "nation",
      {ic("n_nationkey"), tc("n_name", 12), ic("n_regionkey")},
      {"n_nationkey"},
      {{{"n_regionkey"}, "region", {"r_regionkey"}}}});

  out.push_back(TableSchema{
      "supplier",
      {ic("su_suppkey"), tc("su_name", 18), ic("su_nationkey"), dc("su_acctbal")},
      {"su_suppkey"},
      {{{"su_nationkey"}, "nation", {"n_nationkey"}}}});

  return out;
}

const TableSchema* find_table(const std::vector<TableSchema>& tables, std::string_view name) {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

}  // namespace branchbench
