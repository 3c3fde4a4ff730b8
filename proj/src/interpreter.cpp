// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/interpreter.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace branchbench {

namespace {

Error unknown_table(std::string_view t) {
  return make_error(ErrorClass::not_found, fmt::format("unknown table {}", t));
}

Error unknown_column(std::string_view t, std::string_view c) {
  return make_error(ErrorClass::unsupported_operation,
                    fmt::format("unknown column {}.{}", t, c));
}

// Writes are normalized so equal logical values have one stored form:
// integers destined for decimal columns become doubles.
Value normalize_for(const Column& col, Value v) {
  if (col.type == ColumnType::decimal) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return Value{static_cast<double>(*i)};
  }
  return v;
}

std::vector<std::string> schema_column_names(const TableSchema& s) {
  std::vector<std::string> out;
  out.reserve(s.columns.size());
  for (const auto& c : s.columns) out.push_back(c.name);
  return out;
}

// ---- single-table predicate evaluation -------------------------------------

bool key_in_range(const Key& k, const Key& lo, const Key& hi) {
  // Inclusive prefix bounds: compare only the prefix length given.
  const std::size_t n = std::min(lo.size(), k.size());
  Key prefix(k.begin(), k.begin() + static_cast<std::ptrdiff_t>(n));
  Key lo_p(lo.begin(), lo.begin() + static_cast<std::ptrdiff_t>(n));
  if (prefix < lo_p) return false;
  const std::size_t m = std::min(hi.size(), k.size());
  Key prefix2(k.begin(), k.begin() + static_cast<std::ptrdiff_t>(m));
  Key hi_p(hi.begin(), hi.begin() + static_cast<std::ptrdiff_t>(m));
  return !(hi_p < prefix2);
}

Result<void> check_pred_columns(const Predicate& p, const TableSchema& s) {
  if (p.kind == Predicate::Kind::is_null || p.kind == Predicate::Kind::not_null ||
      p.kind == Predicate::Kind::compare) {
    if (s.column_index(p.column) < 0) return unknown_column(s.name, p.column);
  }
  return {};
}

bool eval_predicate(const Predicate& p, const TableSchema& s, const Key& key, const Row& row) {
  switch (p.kind) {
    case Predicate::Kind::always_true: return true;
    case Predicate::Kind::key_equals: return key == p.key;
    case Predicate::Kind::key_range: return key_in_range(key, p.lo, p.hi);
    case Predicate::Kind::is_null: {
      const int i = s.column_index(p.column);
      return i >= 0 && is_null(row[static_cast<std::size_t>(i)]);
    }
    case Predicate::Kind::not_null: {
      const int i = s.column_index(p.column);
      return i >= 0 && !is_null(row[static_cast<std::size_t>(i)]);
    }
    case Predicate::Kind::compare: {
      const int i = s.column_index(p.column);
      return i >= 0 && eval_compare(row[static_cast<std::size_t>(i)], p.op, p.rhs);
    }
  }
  return false;
}

// Scan bounds for key-based predicates so updates/deletes stay cheap.
void predicate_bounds(const Predicate& p, std::optional<Key>& lo, std::optional<Key>& hi) {
  if (p.kind == Predicate::Kind::key_equals) {
    lo = p.key;
    hi = p.key;
  } else if (p.kind == Predicate::Kind::key_range) {
    lo = p.lo;
    hi = p.hi;
  }
}

// ---- mutations --------------------------------------------------------------

Result<OpResult> run_insert(const OperationDescriptor& op, BranchAccess& branch) {
  const TableView* view = branch.table(op.table);
  if (!view) return unknown_table(op.table);
  const TableSchema& s = view->schema();

  std::vector<int> target(op.insert_columns.size());
  for (std::size_t i = 0; i < op.insert_columns.size(); ++i) {
    target[i] = s.column_index(op.insert_columns[i]);
    if (target[i] < 0) return unknown_column(s.name, op.insert_columns[i]);
  }

  OpResult res;
  for (const auto& values : op.insert_values) {
    if (values.size() != op.insert_columns.size())
      return make_error(ErrorClass::unsupported_operation, "insert width mismatch");
    Row full(s.columns.size());
    std::vector<bool> set(s.columns.size(), false);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto idx = static_cast<std::size_t>(target[i]);
      full[idx] = normalize_for(s.columns[idx], values[i]);
      set[idx] = true;
    }
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
      if (set[i]) continue;
      const Column& c = s.columns[i];
      if (!is_null(c.default_value))
        full[i] = c.default_value;
      else if (!c.nullable)
        return make_error(ErrorClass::unsupported_operation,
                          fmt::format("insert into {} omits required column {}", s.name, c.name));
    }
    for (std::size_t i = 0; i < s.columns.size(); ++i)
      if (auto v = check_value(s.columns[i], full[i]); !v) return v.take_error();
    Key key = key_of_row(s, full);
    if (auto r = branch.insert_row(op.table, std::move(key), std::move(full)); !r)
      return r.take_error();
    ++res.affected;
  }
  return res;
}

Result<Value> apply_set_item(const SetItem& item, const TableSchema& s, const Row& row) {
  switch (item.kind) {
    case SetItem::Kind::constant:
      return item.constant;
    case SetItem::Kind::case_thresholds: {
      const int src = s.column_index(item.source);
      if (src < 0) return unknown_column(s.name, item.source);
      const Value& v = row[static_cast<std::size_t>(src)];
      const auto num = numeric_value(v);
      if (!num) return item.outputs.back();  // null source falls to ELSE
      for (std::size_t i = 0; i < item.thresholds.size(); ++i)
        if (*num < item.thresholds[i]) return item.outputs[i];
      return item.outputs.back();
    }
    case SetItem::Kind::add: {
      const int src = s.column_index(item.column);
      if (src < 0) return unknown_column(s.name, item.column);
      const Value& v = row[static_cast<std::size_t>(src)];
      if (is_null(v)) return Value{};  // null + delta stays null
      if (const auto* i = std::get_if<std::int64_t>(&v))
        return Value{*i + static_cast<std::int64_t>(std::llround(item.delta))};
      if (const auto* d = std::get_if<double>(&v)) return Value{*d + item.delta};
      return make_error(ErrorClass::unsupported_operation,
                        fmt::format("additive update on non-numeric column {}", item.column));
    }
  }
  return Value{};
}

Result<OpResult> run_update(const OperationDescriptor& op, BranchAccess& branch) {
  const TableView* view = branch.table(op.table);
  if (!view) return unknown_table(op.table);
  const TableSchema& s = view->schema();
  if (auto c = check_pred_columns(op.where, s); !c) return c.take_error();

  std::vector<int> targets(op.set_items.size());
  for (std::size_t i = 0; i < op.set_items.size(); ++i) {
    targets[i] = s.column_index(op.set_items[i].column);
    if (targets[i] < 0) return unknown_column(s.name, op.set_items[i].column);
    if (s.is_pk_column(op.set_items[i].column))
      return make_error(ErrorClass::unsupported_operation,
                        fmt::format("cannot update key column {}", op.set_items[i].column));
  }

  // Collect matches first so the scan never sees its own writes.
  std::vector<std::pair<Key, Row>> matched;
  std::optional<Key> lo, hi;
  predicate_bounds(op.where, lo, hi);
  view->scan(lo, hi, [&](const Key& k, const Row& r) {
    if (eval_predicate(op.where, s, k, r)) matched.emplace_back(k, r);
    return true;
  });

  OpResult res;
  for (auto& [key, row] : matched) {
    Row next = row;
    for (std::size_t i = 0; i < op.set_items.size(); ++i) {
      auto v = apply_set_item(op.set_items[i], s, row);
      if (!v) return v.take_error();
      const auto idx = static_cast<std::size_t>(targets[i]);
      next[idx] = normalize_for(s.columns[idx], v.take());
      if (auto chk = check_value(s.columns[idx], next[idx]); !chk) return chk.take_error();
    }
    auto r = branch.update_row(op.table, key, std::move(next));
    if (!r) return r.take_error();
    res.affected += r.value();
  }
  return res;
}

Result<OpResult> run_delete(const OperationDescriptor& op, BranchAccess& branch) {
  const TableView* view = branch.table(op.table);
  if (!view) return unknown_table(op.table);
  const TableSchema& s = view->schema();
  if (auto c = check_pred_columns(op.where, s); !c) return c.take_error();

  std::vector<Key> matched;
  std::optional<Key> lo, hi;
  predicate_bounds(op.where, lo, hi);
  view->scan(lo, hi, [&](const Key& k, const Row& r) {
    if (eval_predicate(op.where, s, k, r)) matched.push_back(k);
    return true;
  });

  OpResult res;
  for (const Key& k : matched) {
    auto r = branch.erase_row(op.table, k);
    if (!r) return r.take_error();
    res.affected += r.value();
  }
  return res;
}

// ---- reads ------------------------------------------------------------------

Result<OpResult> run_point_read(const OperationDescriptor& op, BranchAccess& branch) {
  const TableView* view = branch.table(op.table);
  if (!view) return unknown_table(op.table);
  OpResult res;
  res.columns = schema_column_names(view->schema());
  if (auto row = view->get(op.key)) {
    res.rows.push_back(std::move(*row));
    res.affected = 1;
  }
  return res;
}

Result<OpResult> run_range_read(const OperationDescriptor& op, BranchAccess& branch) {
  const TableView* view = branch.table(op.table);
  if (!view) return unknown_table(op.table);
  OpResult res;
  res.columns = schema_column_names(view->schema());
  view->scan(op.lo, std::nullopt, [&](const Key&, const Row& r) {
    if (res.rows.size() >= op.limit) return false;
    res.rows.push_back(r);
    return res.rows.size() < op.limit;
  });
  res.affected = static_cast<std::int64_t>(res.rows.size());
  return res;
}

// ---- aggregate --------------------------------------------------------------

struct ColumnSlot {
  bool from_right = false;
  std::size_t index = 0;
};

// Column scope over the (optionally joined) row pair; left shadows right.
struct Scope {
  const TableSchema* left = nullptr;
  const TableSchema* right = nullptr;

  std::optional<ColumnSlot> find(std::string_view name) const {
    const int li = left->column_index(name);
    if (li >= 0) return ColumnSlot{false, static_cast<std::size_t>(li)};
    if (right) {
      const int ri = right->column_index(name);
      if (ri >= 0) return ColumnSlot{true, static_cast<std::size_t>(ri)};
    }
    return std::nullopt;
  }

  Result<std::string> resolve(const ColumnRef& ref) const {
    if (!ref.latest_prefix) {
      if (!find(ref.name)) return unknown_column(left->name, ref.name);
      return ref.name;
    }
    // Latest = highest physical position; left table scope wins.
    for (const TableSchema* s : {left, right}) {
      if (!s) continue;
      for (auto it = s->columns.rbegin(); it != s->columns.rend(); ++it)
        if (it->name.rfind(ref.name, 0) == 0) return it->name;
    }
    return make_error(ErrorClass::unsupported_operation,
                      fmt::format("no column with prefix '{}'", ref.name));
  }
};

Result<void> check_scope_pred(const Predicate& p, const Scope& scope) {
  if (p.kind == Predicate::Kind::is_null || p.kind == Predicate::Kind::not_null ||
      p.kind == Predicate::Kind::compare) {
    if (!scope.find(p.column)) return unknown_column(scope.left->name, p.column);
  }
  return {};
}

struct JoinedRow {
  const Key* left_key;
  const Row* left;
  const Row* right;  // null when no join
};

Value slot_value(const JoinedRow& jr, const ColumnSlot& slot) {
  const Row* r = slot.from_right ? jr.right : jr.left;
  if (!r) return Value{};
  return (*r)[slot.index];
}

bool eval_joined_predicate(const Predicate& p, const Scope& scope, const JoinedRow& jr) {
  switch (p.kind) {
    case Predicate::Kind::always_true: return true;
    case Predicate::Kind::key_equals: return *jr.left_key == p.key;
    case Predicate::Kind::key_range: return key_in_range(*jr.left_key, p.lo, p.hi);
    case Predicate::Kind::is_null:
    case Predicate::Kind::not_null: {
      const auto slot = scope.find(p.column);
      if (!slot) return false;
      const bool null = is_null(slot_value(jr, *slot));
      return p.kind == Predicate::Kind::is_null ? null : !null;
    }
    case Predicate::Kind::compare: {
      const auto slot = scope.find(p.column);
      return slot && eval_compare(slot_value(jr, *slot), p.op, p.rhs);
    }
  }
  return false;
}

struct AggAccum {
  std::int64_t count = 0;     // matching rows (count / count_where)
  std::int64_t non_null = 0;  // rows contributing a value
  double sum = 0;
  Value min_v, max_v;

  void feed(const Value& v) {
    if (is_null(v)) return;
    ++non_null;
    if (const auto n = numeric_value(v)) sum += *n;
    if (non_null == 1) {
      min_v = v;
      max_v = v;
    } else {
      if (compare_values(v, min_v) < 0) min_v = v;
      if (compare_values(max_v, v) < 0) max_v = v;
    }
  }

  Value finish(AggFn fn) const {
    switch (fn) {
      case AggFn::count:
      case AggFn::count_where:
        return Value{count};
      case AggFn::sum:
        return non_null ? Value{sum} : Value{};
      case AggFn::avg:
        return non_null ? Value{sum / static_cast<double>(non_null)} : Value{};
      case AggFn::min:
        return non_null ? min_v : Value{};
      case AggFn::max:
        return non_null ? max_v : Value{};
      case AggFn::spread: {
        if (!non_null) return Value{};
        const auto lo = numeric_value(min_v), hi = numeric_value(max_v);
        if (!lo || !hi) return Value{};
        return Value{*hi - *lo};
      }
    }
    return Value{};
  }
};

Result<OpResult> run_aggregate(const AggregateSpec& spec, BranchAccess& branch) {
  const TableView* left = branch.table(spec.table);
  if (!left) return unknown_table(spec.table);
  const TableView* right = nullptr;
  if (spec.join) {
    right = branch.table(spec.join->table);
    if (!right) return unknown_table(spec.join->table);
  }
  Scope scope{&left->schema(), right ? &right->schema() : nullptr};

  // Resolve references up front.
  std::vector<ColumnSlot> group_slots;
  std::vector<std::string> group_names;
  for (const auto& g : spec.group_by) {
    auto name = scope.resolve(g);
    if (!name) return name.take_error();
    group_slots.push_back(*scope.find(name.value()));
    group_names.push_back(g.latest_prefix ? g.name + "*" : name.take());
  }
  struct AggPlan {
    AggFn fn;
    std::optional<ColumnSlot> slot;
    const Predicate* filter = nullptr;
  };
  std::vector<AggPlan> plans;
  for (const auto& e : spec.aggs) {
    AggPlan p{e.fn, std::nullopt, nullptr};
    if (e.fn != AggFn::count && e.fn != AggFn::count_where) {
      auto name = scope.resolve(e.column);
      if (!name) return name.take_error();
      p.slot = scope.find(name.value());
    }
    if (e.fn == AggFn::count_where) {
      if (auto c = check_scope_pred(e.filter, scope); !c) return c.take_error();
      p.filter = &e.filter;
    }
    plans.push_back(p);
  }
  if (auto c = check_scope_pred(spec.where, scope); !c) return c.take_error();
  std::optional<std::size_t> having_col;
  if (spec.having) {
    if (spec.having->agg_index >= plans.size())
      return make_error(ErrorClass::unsupported_operation,
                        "having references missing aggregate");
    if (spec.having->rhs_is_column) {
      for (std::size_t i = 0; i < group_names.size(); ++i)
        if (group_names[i] == spec.having->rhs_column) having_col = i;
      if (!having_col)
        return make_error(ErrorClass::unsupported_operation,
                          "having column must be part of group by");
    }
  }

  // Hash join: bucket right rows by join key, stream left rows in key order.
  std::unordered_map<std::string, std::vector<const Row*>> right_index;
  std::vector<ColumnSlot> left_join_slots;
  if (spec.join) {
    std::vector<int> right_cols;
    for (const auto& [lc, rc] : spec.join->on) {
      const int li = scope.left->column_index(lc);
      if (li < 0) return unknown_column(scope.left->name, lc);
      left_join_slots.push_back(ColumnSlot{false, static_cast<std::size_t>(li)});
      const int ri = scope.right->column_index(rc);
      if (ri < 0) return unknown_column(scope.right->name, rc);
      right_cols.push_back(ri);
    }
    right->scan(std::nullopt, std::nullopt, [&](const Key&, const Row& r) {
      std::string key;
      for (int ci : right_cols) {
        key += value_to_text(r[static_cast<std::size_t>(ci)]);
        key += '\x1f';
      }
      right_index[key].push_back(&r);
      return true;
    });
  }

  // Group accumulation. Ordered map keeps canonical group-key order.
  struct GroupState {
    std::vector<Value> key;
    std::vector<AggAccum> accums;
  };
  struct VecLess {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
      const std::size_t n = std::min(a.size(), b.size());
      for (std::size_t i = 0; i < n; ++i) {
        const int c = compare_values(a[i], b[i]);
        if (c) return c < 0;
      }
      return a.size() < b.size();
    }
  };
  std::map<std::vector<Value>, std::vector<AggAccum>, VecLess> groups;

  auto feed_row = [&](const JoinedRow& jr) {
    if (!eval_joined_predicate(spec.where, scope, jr)) return;
    std::vector<Value> gkey;
    gkey.reserve(group_slots.size());
    for (const auto& slot : group_slots) gkey.push_back(slot_value(jr, slot));
    auto it = groups.find(gkey);
    if (it == groups.end())
      it = groups.emplace(std::move(gkey), std::vector<AggAccum>(plans.size())).first;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      auto& acc = it->second[i];
      switch (plans[i].fn) {
        case AggFn::count:
          ++acc.count;
          break;
        case AggFn::count_where:
          if (eval_joined_predicate(*plans[i].filter, scope, jr)) ++acc.count;
          break;
        default:
          acc.feed(slot_value(jr, *plans[i].slot));
      }
    }
  };

  // NOTE: scan bounds from key predicates apply to the left table.
  std::optional<Key> lo, hi;
  predicate_bounds(spec.where, lo, hi);
  left->scan(lo, hi, [&](const Key& k, const Row& l) {
    if (!spec.join) {
      feed_row(JoinedRow{&k, &l, nullptr});
      return true;
    }
    std::string jkey;
    for (const auto& slot : left_join_slots) {
      jkey += value_to_text(l[slot.index]);
      jkey += '\x1f';
    }
    auto it = right_index.find(jkey);
    if (it != right_index.end())
      for (const Row* r : it->second) feed_row(JoinedRow{&k, &l, r});
    return true;
  });

  // SQL shape: no GROUP BY yields exactly one row even over empty input.
  if (spec.group_by.empty() && groups.empty())
    groups.emplace(std::vector<Value>{}, std::vector<AggAccum>(plans.size()));

  OpResult res;
  res.columns = group_names;
  for (const auto& e : spec.aggs) res.columns.push_back(e.alias);
  for (const auto& [gkey, accums] : groups) {
    std::vector<Value> agg_values;
    agg_values.reserve(plans.size());
    for (std::size_t i = 0; i < plans.size(); ++i)
      agg_values.push_back(accums[i].finish(plans[i].fn));
    if (spec.having) {
      const Value& lhs = agg_values[spec.having->agg_index];
      const Value rhs = spec.having->rhs_is_column ? gkey[*having_col] : spec.having->rhs;
      if (!eval_compare(lhs, spec.having->op, rhs)) continue;
    }
    Row out = gkey;
    for (auto& v : agg_values) out.push_back(std::move(v));
    res.rows.push_back(std::move(out));
  }
  res.affected = static_cast<std::int64_t>(res.rows.size());
  return res;
}

}  // namespace

Result<std::string> resolve_column_ref(const ColumnRef& ref, const TableSchema& schema) {
  if (!ref.latest_prefix) {
    if (schema.column_index(ref.name) < 0) return unknown_column(schema.name, ref.name);
    return ref.name;
  }
  for (auto it = schema.columns.rbegin(); it != schema.columns.rend(); ++it)
    if (it->name.rfind(ref.name, 0) == 0) return it->name;
  return make_error(ErrorClass::unsupported_operation,
                    fmt::format("no column with prefix '{}' in {}", ref.name, schema.name));
}

Result<OpResult> interpret(const OperationDescriptor& op, BranchAccess& branch) {
  switch (op.kind) {
    case OpKind::add_column: {
      const TableView* view = branch.table(op.table);
      if (!view) return unknown_table(op.table);
      const TableSchema& s = view->schema();
      if (s.column_index(op.column.name) >= 0)
        return make_error(ErrorClass::conflict,
                          fmt::format("column {}.{} already exists", op.table, op.column.name));
      if (!op.column.nullable && is_null(op.column.default_value))
        return make_error(ErrorClass::unsupported_operation,
                          "non-nullable added column needs a default");
      if (auto r = branch.add_column(op.table, op.column); !r) return r.take_error();
      return OpResult{};
    }
    case OpKind::drop_column: {
      const TableView* view = branch.table(op.table);
      if (!view) return unknown_table(op.table);
      const TableSchema& s = view->schema();
      if (s.column_index(op.column_name) < 0) return unknown_column(op.table, op.column_name);
      if (s.is_pk_column(op.column_name))
        return make_error(ErrorClass::unsupported_operation,
                          fmt::format("cannot drop key column {}", op.column_name));
      if (auto r = branch.drop_column(op.table, op.column_name); !r) return r.take_error();
      return OpResult{};
    }
    case OpKind::create_index: {
      const TableView* view = branch.table(op.table);
      if (!view) return unknown_table(op.table);
      for (const auto& c : op.index_columns)
        if (view->schema().column_index(c) < 0) return unknown_column(op.table, c);
      if (auto r = branch.create_index(op.table, op.index_name, op.index_columns); !r)
        return r.take_error();
      return OpResult{};
    }
    case OpKind::insert_rows:
      return run_insert(op, branch);
    case OpKind::update_where:
      return run_update(op, branch);
    case OpKind::delete_where:
      return run_delete(op, branch);
    case OpKind::point_read:
      return run_point_read(op, branch);
    case OpKind::range_read:
      return run_range_read(op, branch);
    case OpKind::aggregate:
      return run_aggregate(op.agg, branch);
    case OpKind::cross_branch_aggregate:
      return make_error(ErrorClass::unsupported_operation,
                        "cross-branch aggregate requires a branch resolver");
  }
  return make_error(ErrorClass::internal, "unhandled op kind");
}

Result<OpResult> interpret_cross(const OperationDescriptor& op, const BranchResolver& resolve) {
  if (op.kind != OpKind::cross_branch_aggregate)
    return make_error(ErrorClass::internal, "interpret_cross on non-cross op");
  OpResult merged;
  merged.columns.push_back("branch");
  bool have_header = false;
  for (const auto& sel : op.branches) {
    BranchAccess* access = resolve(sel);
    if (!access)
      return make_error(ErrorClass::not_found,
                        fmt::format("cross-branch target '{}' unavailable", sel.label));
    auto inner = run_aggregate(op.agg, *access);
    if (!inner) {
      auto err = inner.take_error();
      err.message = fmt::format("branch '{}': {}", sel.label, err.message);
      return err;
    }
    if (!have_header) {
      for (const auto& c : inner.value().columns) merged.columns.push_back(c);
      have_header = true;
    }
    for (auto& row : inner.value().rows) {
      Row out;
      out.reserve(row.size() + 1);
      out.push_back(Value{sel.label});
      for (auto& v : row) out.push_back(std::move(v));
      merged.rows.push_back(std::move(out));
    }
  }
  merged.affected = static_cast<std::int64_t>(merged.rows.size());
  return merged;
}

}  // namespace branchbench
