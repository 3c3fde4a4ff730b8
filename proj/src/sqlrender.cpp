// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/sqlrender.hpp"

#include <fmt/format.h>

namespace branchbench {

namespace {

std::string key_tuple(const std::vector<std::string>& cols, std::size_t n) {
  std::string out = "(";
  for (std::size_t i = 0; i < n && i < cols.size(); ++i) {
    if (i) out += ", ";
    out += cols[i];
  }
  out += ")";
  return out;
}

std::string value_tuple(const Key& k) {
  std::string out = "(";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) out += ", ";
    out += fmt::format("{}", k[i]);
  }
  out += ")";
  return out;
}

// Key predicates need the table's PK column names; descriptors carry only
// the table name, so the renderer looks them up in the base schema. Tables
// created outside the fixed schema never appear in rendered workloads.
Result<std::vector<std::string>> pk_columns(const std::string& table) {
  static const std::vector<TableSchema> schema = ch_schema();
  const auto* t = find_table(schema, table);
  if (!t)
    return make_error(ErrorClass::unsupported_operation,
                      fmt::format("cannot render key predicate for unknown table {}", table));
  return t->primary_key;
}

Result<std::string> render_predicate(const std::string& table, const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::always_true:
      return std::string{};
    case Predicate::Kind::key_equals: {
      auto pk = pk_columns(table);
      if (!pk) return pk.take_error();
      std::string out;
      for (std::size_t i = 0; i < p.key.size() && i < pk.value().size(); ++i) {
        if (i) out += " AND ";
        out += fmt::format("{} = {}", pk.value()[i], p.key[i]);
      }
      return out;
    }
    case Predicate::Kind::key_range: {
      auto pk = pk_columns(table);
      if (!pk) return pk.take_error();
      const std::size_t n = std::min(p.lo.size(), pk.value().size());
      return fmt::format("{} >= {} AND {} <= {}", key_tuple(pk.value(), n), value_tuple(p.lo),
                         key_tuple(pk.value(), n), value_tuple(p.hi));
    }
    case Predicate::Kind::is_null:
      return fmt::format("{} IS NULL", p.column);
    case Predicate::Kind::not_null:
      return fmt::format("{} IS NOT NULL", p.column);
    case Predicate::Kind::compare:
      return fmt::format("{} {} {}", p.column, cmp_op_sql(p.op), sql_literal(p.rhs));
  }
  return std::string{};
}

Result<std::string> colref_name(const ColumnRef& c) {
  if (c.latest_prefix)
    return make_error(ErrorClass::unsupported_operation,
                      fmt::format("unresolved latest-prefix column reference '{}'", c.name));
  return c.name;
}

Result<std::string> render_agg_expr(const std::string& table, const AggExpr& e) {
  switch (e.fn) {
    case AggFn::count:
      return std::string("COUNT(*)");
    case AggFn::count_where: {
      auto f = render_predicate(table, e.filter);
      if (!f) return f.take_error();
      if (f.value().empty()) return std::string("COUNT(*)");
      return fmt::format("COUNT(*) FILTER (WHERE {})", f.value());
    }
    case AggFn::sum:
    case AggFn::avg:
    case AggFn::min:
    case AggFn::max: {
      auto c = colref_name(e.column);
      if (!c) return c.take_error();
      const char* fn = e.fn == AggFn::sum   ? "SUM"
                       : e.fn == AggFn::avg ? "AVG"
                       : e.fn == AggFn::min ? "MIN"
                                            : "MAX";
      return fmt::format("{}({})", fn, c.value());
    }
    case AggFn::spread: {
      auto c = colref_name(e.column);
      if (!c) return c.take_error();
      return fmt::format("(MAX({0}) - MIN({0}))", c.value());
    }
  }
  return std::string("COUNT(*)");
}

std::string render_set_item(const SetItem& s) {
  switch (s.kind) {
    case SetItem::Kind::constant:
      return fmt::format("{} = {}", s.column, sql_literal(s.constant));
    case SetItem::Kind::case_thresholds: {
      std::string out = fmt::format("{} = CASE", s.column);
      for (std::size_t i = 0; i < s.thresholds.size(); ++i)
        out += fmt::format(" WHEN {} < {} THEN {}", s.source,
                           value_to_text(Value{s.thresholds[i]}),
                           sql_literal(s.outputs[i]));
      out += fmt::format(" ELSE {} END", sql_literal(s.outputs.back()));
      return out;
    }
    case SetItem::Kind::add:
      return fmt::format("{0} = {0} + {1}", s.column, value_to_text(Value{s.delta}));
  }
  return {};
}

Result<std::string> render_aggregate(const AggregateSpec& a) {
  std::string cols;
  for (const auto& g : a.group_by) {
    auto c = colref_name(g);
    if (!c) return c.take_error();
    if (!cols.empty()) cols += ", ";
    cols += c.value();
  }
  std::vector<std::string> agg_texts;
  for (const auto& e : a.aggs) {
    auto t = render_agg_expr(a.table, e);
    if (!t) return t.take_error();
    if (!cols.empty() || !agg_texts.empty()) cols += ", ";
    cols += fmt::format("{} AS {}", t.value(), e.alias);
    agg_texts.push_back(t.take());
  }
  std::string sql = fmt::format("SELECT {} FROM {}", cols, a.table);
  if (a.join) {
    std::string on;
    for (std::size_t i = 0; i < a.join->on.size(); ++i) {
      if (i) on += " AND ";
      on += fmt::format("{}.{} = {}.{}", a.table, a.join->on[i].first, a.join->table,
                        a.join->on[i].second);
    }
    sql += fmt::format(" JOIN {} ON {}", a.join->table, on);
  }
  auto where = render_predicate(a.table, a.where);
  if (!where) return where.take_error();
  if (!where.value().empty()) sql += fmt::format(" WHERE {}", where.value());
  if (!a.group_by.empty()) {
    std::string gb;
    for (const auto& g : a.group_by) {
      if (!gb.empty()) gb += ", ";
      gb += g.name;
    }
    sql += fmt::format(" GROUP BY {}", gb);
  }
  if (a.having) {
    const auto& h = *a.having;
    if (h.agg_index >= agg_texts.size())
      return make_error(ErrorClass::unsupported_operation, "having references missing aggregate");
    const std::string rhs = h.rhs_is_column ? h.rhs_column : sql_literal(h.rhs);
    sql += fmt::format(" HAVING {} {} {}", agg_texts[h.agg_index], cmp_op_sql(h.op), rhs);
  }
  if (!a.group_by.empty()) {
    std::string gb;
    for (const auto& g : a.group_by) {
      if (!gb.empty()) gb += ", ";
      gb += g.name;
    }
    sql += fmt::format(" ORDER BY {}", gb);
  }
  return sql;
}

}  // namespace

std::string render_sql_type(ColumnType t, std::uint32_t text_length) {
  switch (t) {
    case ColumnType::integer: return "BIGINT";
    case ColumnType::decimal: return "DOUBLE PRECISION";
    case ColumnType::text: return fmt::format("VARCHAR({})", std::max(text_length, 1u));
    case ColumnType::boolean: return "BOOLEAN";
    case ColumnType::timestamp: return "BIGINT";
  }
  return "BIGINT";
}

Result<std::string> render_sql(const OperationDescriptor& op) {
  switch (op.kind) {
    case OpKind::add_column: {
      std::string sql = fmt::format("ALTER TABLE {} ADD COLUMN {} {}", op.table,
                                    op.column.name, render_sql_type(op.column.type,
                                                                    op.column.text_length));
      if (!is_null(op.column.default_value))
        sql += fmt::format(" DEFAULT {}", sql_literal(op.column.default_value));
      if (!op.column.nullable) sql += " NOT NULL";
      return sql;
    }
    case OpKind::drop_column:
      return fmt::format("ALTER TABLE {} DROP COLUMN {}", op.table, op.column_name);
    case OpKind::create_index: {
      std::string cols;
      for (std::size_t i = 0; i < op.index_columns.size(); ++i) {
        if (i) cols += ", ";
        cols += op.index_columns[i];
      }
      return fmt::format("CREATE INDEX {} ON {} ({})", op.index_name, op.table, cols);
    }
    case OpKind::insert_rows: {
      std::string cols;
      for (std::size_t i = 0; i < op.insert_columns.size(); ++i) {
        if (i) cols += ", ";
        cols += op.insert_columns[i];
      }
      std::string vals;
      for (std::size_t r = 0; r < op.insert_values.size(); ++r) {
        if (r) vals += ", ";
        vals += '(';
        for (std::size_t i = 0; i < op.insert_values[r].size(); ++i) {
          if (i) vals += ", ";
          vals += sql_literal(op.insert_values[r][i]);
        }
        vals += ')';
      }
      return fmt::format("INSERT INTO {} ({}) VALUES {}", op.table, cols, vals);
    }
    case OpKind::update_where: {
      std::string sets;
      for (std::size_t i = 0; i < op.set_items.size(); ++i) {
        if (i) sets += ", ";
        sets += render_set_item(op.set_items[i]);
      }
      auto where = render_predicate(op.table, op.where);
      if (!where) return where.take_error();
      std::string sql = fmt::format("UPDATE {} SET {}", op.table, sets);
      if (!where.value().empty()) sql += fmt::format(" WHERE {}", where.value());
      return sql;
    }
    case OpKind::delete_where: {
      auto where = render_predicate(op.table, op.where);
      if (!where) return where.take_error();
      std::string sql = fmt::format("DELETE FROM {}", op.table);
      if (!where.value().empty()) sql += fmt::format(" WHERE {}", where.value());
      return sql;
    }
    case OpKind::point_read: {
      auto where = render_predicate(op.table, Predicate::key_eq(op.key));
      if (!where) return where.take_error();
      return fmt::format("SELECT * FROM {} WHERE {}", op.table, where.value());
    }
    case OpKind::range_read: {
      auto pk = pk_columns(op.table);
      if (!pk) return pk.take_error();
      const std::size_t n = std::min(op.lo.size(), pk.value().size());
      std::string order;
      for (std::size_t i = 0; i < pk.value().size(); ++i) {
        if (i) order += ", ";
        order += pk.value()[i];
      }
      return fmt::format("SELECT * FROM {} WHERE {} >= {} ORDER BY {} LIMIT {}", op.table,
                         key_tuple(pk.value(), n), value_tuple(op.lo), order, op.limit);
    }
    case OpKind::aggregate:
      return render_aggregate(op.agg);
    case OpKind::cross_branch_aggregate:
      return make_error(ErrorClass::unsupported_operation,
                        "cross-branch aggregate has no single-connection SQL form");
  }
  return make_error(ErrorClass::internal, "unhandled op kind");
}

std::string render_create_table(const TableSchema& t) {
  std::string cols;
  for (const auto& c : t.columns) {
    if (!cols.empty()) cols += ", ";
    cols += fmt::format("{} {}", c.name, render_sql_type(c.type, c.text_length));
    if (!c.nullable) cols += " NOT NULL";
  }
  std::string pk;
  for (std::size_t i = 0; i < t.primary_key.size(); ++i) {
    if (i) pk += ", ";
    pk += t.primary_key[i];
  }
  return fmt::format("CREATE TABLE {} ({}, PRIMARY KEY ({}))", t.name, cols, pk);
}

std::string render_insert(const TableSchema& t, const std::vector<std::pair<Key, Row>>& rows,
                          std::size_t begin, std::size_t end) {
  std::string cols;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) cols += ", ";
    cols += t.columns[i].name;
  }
  std::string vals;
  for (std::size_t r = begin; r < end && r < rows.size(); ++r) {
    if (r != begin) vals += ", ";
    vals += '(';
    const Row& row = rows[r].second;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) vals += ", ";
      vals += sql_literal(row[i]);
    }
    vals += ')';
  }
  return fmt::format("INSERT INTO {} ({}) VALUES {}", t.name, cols, vals);
}

}  // namespace branchbench
