// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace branchbench {

enum class ColumnType { integer, decimal, text, boolean, timestamp };

std::string_view column_type_name(ColumnType t);
std::optional<ColumnType> column_type_from_name(std::string_view s);

// Cell value. Timestamps are stored as int64 epoch seconds; decimals as
// binary doubles (amounts are generated in whole cents so equality is exact).
using Value = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

// Primary keys are integer-only in this data model; lexicographic order.
using Key = std::vector<std::int64_t>;
using Row = std::vector<Value>;

enum class CmpOp { eq, ne, lt, le, gt, ge };

std::string_view cmp_op_name(CmpOp op);
std::optional<CmpOp> cmp_op_from_name(std::string_view s);
std::string_view cmp_op_sql(CmpOp op);

// Numeric-aware comparison: int64 vs double compares as double. Null compares
// equal to null and less than everything else (used only for ordering, not
// for predicate truth; predicates treat null per eval_compare below).
int compare_values(const Value& a, const Value& b);
bool values_equal(const Value& a, const Value& b);

// SQL-style predicate comparison: any null operand yields false.
bool eval_compare(const Value& lhs, CmpOp op, const Value& rhs);

std::optional<double> numeric_value(const Value& v);

// Logical byte accounting: null=1, int/decimal/timestamp=8, bool=1,
// text=payload length.
std::uint64_t value_bytes(const Value& v);
std::uint64_t row_bytes(const Row& r);
inline std::uint64_t key_bytes(const Key& k) { return 8u * k.size(); }

// Shortest round-trip text form. Doubles use fmt "{}" so that equal doubles
// always render identically; used by canonical dumps, CSV, and SQL rendering.
std::string value_to_text(const Value& v);

// CSV field form: null is \N, text is quoted only when needed.
std::string csv_field(const Value& v);

// SQL literal form: null is NULL, text is single-quoted with '' escaping,
// booleans are TRUE/FALSE.
std::string sql_literal(const Value& v);

std::string key_to_text(const Key& k);

bool row_less(const std::pair<Key, Row>& a, const std::pair<Key, Row>& b);

}  // namespace branchbench
