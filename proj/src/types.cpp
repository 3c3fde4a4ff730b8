// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/types.hpp"

#include <fmt/format.h>

#include "branchbench/error.hpp"

namespace branchbench {

std::string_view column_type_name(ColumnType t) {
  switch (t) {
    case ColumnType::integer: return "integer";
    case ColumnType::decimal: return "decimal";
    case ColumnType::text: return "text";
    case ColumnType::boolean: return "boolean";
    case ColumnType::timestamp: return "timestamp";
  }
  return "integer";
}

std::optional<ColumnType> column_type_from_name(std::string_view s) {
  if (s == "integer") return ColumnType::integer;
  if (s == "decimal") return ColumnType::decimal;
  if (s == "text") return ColumnType::text;
  if (s == "boolean") return ColumnType::boolean;
  if (s == "timestamp") return ColumnType::timestamp;
  return std::nullopt;
}

std::string_view cmp_op_name(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "eq";
    case CmpOp::ne: return "ne";
    case CmpOp::lt: return "lt";
    case CmpOp::le: return "le";
    case CmpOp::gt: return "gt";
    case CmpOp::ge: return "ge";
  }
  return "eq";
}

std::optional<CmpOp> cmp_op_from_name(std::string_view s) {
  if (s == "eq") return CmpOp::eq;
  if (s == "ne") return CmpOp::ne;
  if (s == "lt") return CmpOp::lt;
  if (s == "le") return CmpOp::le;
  if (s == "gt") return CmpOp::gt;
  if (s == "ge") return CmpOp::ge;
  return std::nullopt;
}

std::string_view cmp_op_sql(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "=";
    case CmpOp::ne: return "<>";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
  }
  return "=";
}

std::optional<double> numeric_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  return std::nullopt;
}

int compare_values(const Value& a, const Value& b) {
  const bool an = is_null(a), bn = is_null(b);
  if (an || bn) return an == bn ? 0 : (an ? -1 : 1);
  // Numeric alternatives compare by value so int64(5) == double(5.0).
  const auto da = numeric_value(a);
  const auto db = numeric_value(b);
  if (da && db) {
    if (*da < *db) return -1;
    if (*da > *db) return 1;
    return 0;
  }
  const auto* sa = std::get_if<std::string>(&a);
  const auto* sb = std::get_if<std::string>(&b);
  if (sa && sb) return sa->compare(*sb) < 0 ? -1 : (*sa == *sb ? 0 : 1);
  // Mixed string/numeric: order by variant index, stable but arbitrary.
  return a.index() < b.index() ? -1 : (a.index() == b.index() ? 0 : 1);
}

bool values_equal(const Value& a, const Value& b) { return compare_values(a, b) == 0; }

bool eval_compare(const Value& lhs, CmpOp op, const Value& rhs) {
  if (is_null(lhs) || is_null(rhs)) return false;
  const int c = compare_values(lhs, rhs);
  switch (op) {
    case CmpOp::eq: return c == 0;
    case CmpOp::ne: return c != 0;
    case CmpOp::lt: return c < 0;
    case CmpOp::le: return c <= 0;
    case CmpOp::gt: return c > 0;
    case CmpOp::ge: return c >= 0;
  }
  return false;
}

std::uint64_t value_bytes(const Value& v) {
  struct V {
    std::uint64_t operator()(std::monostate) const { return 1; }
    std::uint64_t operator()(std::int64_t) const { return 8; }
    std::uint64_t operator()(double) const { return 8; }
    std::uint64_t operator()(const std::string& s) const { return s.size(); }
    std::uint64_t operator()(bool) const { return 1; }
  };
  return std::visit(V{}, v);
}

std::uint64_t row_bytes(const Row& r) {
  std::uint64_t n = 0;
  for (const auto& v : r) n += value_bytes(v);
  return n;
}

std::string value_to_text(const Value& v) {
  struct V {
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(std::int64_t i) const { return fmt::format("{}", i); }
    std::string operator()(double d) const { return fmt::format("{}", d); }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  };
  return std::visit(V{}, v);
}

static bool csv_needs_quoting(const std::string& s) {
  if (s.empty()) return true;
  for (char c : s)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') return true;
  return false;
}

std::string csv_field(const Value& v) {
  if (is_null(v)) return "\\N";
  if (const auto* s = std::get_if<std::string>(&v)) {
    if (!csv_needs_quoting(*s) && *s != "\\N") return *s;
    std::string out = "\"";
    for (char c : *s) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
    return out;
  }
  return value_to_text(v);
}

std::string sql_literal(const Value& v) {
  if (is_null(v)) return "NULL";
  if (const auto* s = std::get_if<std::string>(&v)) {
    std::string out = "'";
    for (char c : *s) {
      if (c == '\'') out += '\'';
      out += c;
    }
    out += '\'';
    return out;
  }
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "TRUE" : "FALSE";
  return value_to_text(v);
}

std::string key_to_text(const Key& k) {
  std::string out = "(";
  for (size_t i = 0; i < k.size(); ++i) {
    if (i) out += ',';
    out += fmt::format("{}", k[i]);
  }
  out += ')';
  return out;
}

bool row_less(const std::pair<Key, Row>& a, const std::pair<Key, Row>& b) {
  return a.first < b.first;
}

std::string_view error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::none: return "none";
    case ErrorClass::rate_limited: return "rate_limited";
    case ErrorClass::branch_limit_exceeded: return "branch_limit_exceeded";
    case ErrorClass::timeout: return "timeout";
    case ErrorClass::not_found: return "not_found";
    case ErrorClass::unsupported_operation: return "unsupported_operation";
    case ErrorClass::conflict: return "conflict";
    case ErrorClass::internal: return "internal";
    case ErrorClass::configuration: return "configuration";
    case ErrorClass::precondition: return "precondition";
    case ErrorClass::io: return "io";
  }
  return "internal";
}

std::optional<ErrorClass> error_class_from_name(std::string_view s) {
  for (ErrorClass c : {ErrorClass::none, ErrorClass::rate_limited, ErrorClass::branch_limit_exceeded,
                       ErrorClass::timeout, ErrorClass::not_found, ErrorClass::unsupported_operation,
                       ErrorClass::conflict, ErrorClass::internal, ErrorClass::configuration,
                       ErrorClass::precondition, ErrorClass::io}) {
    if (error_class_name(c) == s) return c;
  }
  return std::nullopt;
}

std::string Error::to_string() const {
  return fmt::format("{}: {}", error_class_name(cls), message);
}

}  // namespace branchbench
