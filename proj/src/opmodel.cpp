// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/opmodel.hpp"

#include <fmt/format.h>

#include <nlohmann/json.hpp>

namespace branchbench {

using nlohmann::json;

std::string_view op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::add_column: return "add_column";
    case OpKind::drop_column: return "drop_column";
    case OpKind::create_index: return "create_index";
    case OpKind::insert_rows: return "insert_rows";
    case OpKind::update_where: return "update_where";
    case OpKind::delete_where: return "delete_where";
    case OpKind::point_read: return "point_read";
    case OpKind::range_read: return "range_read";
    case OpKind::aggregate: return "aggregate";
    case OpKind::cross_branch_aggregate: return "cross_branch_aggregate";
  }
  return "point_read";
}

bool op_is_read(OpKind k) {
  return k == OpKind::point_read || k == OpKind::range_read || k == OpKind::aggregate ||
         k == OpKind::cross_branch_aggregate;
}

bool op_is_schema(OpKind k) {
  return k == OpKind::add_column || k == OpKind::drop_column || k == OpKind::create_index;
}

std::string_view op_phase_name(OpPhase p) {
  switch (p) {
    case OpPhase::load: return "load";
    case OpPhase::branch: return "branch";
    case OpPhase::mutate: return "mutate";
    case OpPhase::evaluate: return "evaluate";
    case OpPhase::cross: return "cross";
  }
  return "mutate";
}

std::uint64_t pack_op_id(std::uint32_t worker, std::uint32_t step, OpPhase phase,
                         std::uint32_t ordinal) {
  return (static_cast<std::uint64_t>(worker & 0xFFFFu) << 48) |
         (static_cast<std::uint64_t>(step & 0xFFFFFFu) << 24) |
         (static_cast<std::uint64_t>(static_cast<std::uint8_t>(phase) & 0xFu) << 20) |
         (ordinal & 0xFFFFFu);
}

OpIdParts unpack_op_id(std::uint64_t id) {
  OpIdParts p;
  p.worker = static_cast<std::uint32_t>((id >> 48) & 0xFFFFu);
  p.step = static_cast<std::uint32_t>((id >> 24) & 0xFFFFFFu);
  p.phase = static_cast<OpPhase>((id >> 20) & 0xFu);
  p.ordinal = static_cast<std::uint32_t>(id & 0xFFFFFu);
  return p;
}

std::string op_id_suffix(std::uint64_t id) { return fmt::format("{:x}", id); }

Predicate Predicate::key_eq(Key k) {
  Predicate p;
  p.kind = Kind::key_equals;
  p.key = std::move(k);
  return p;
}

Predicate Predicate::key_between(Key lo, Key hi) {
  Predicate p;
  p.kind = Kind::key_range;
  p.lo = std::move(lo);
  p.hi = std::move(hi);
  return p;
}

Predicate Predicate::null(std::string col) {
  Predicate p;
  p.kind = Kind::is_null;
  p.column = std::move(col);
  return p;
}

Predicate Predicate::not_null_p(std::string col) {
  Predicate p;
  p.kind = Kind::not_null;
  p.column = std::move(col);
  return p;
}

Predicate Predicate::cmp(std::string col, CmpOp op, Value rhs) {
  Predicate p;
  p.kind = Kind::compare;
  p.column = std::move(col);
  p.op = op;
  p.rhs = std::move(rhs);
  return p;
}

SetItem SetItem::set(std::string col, Value v) {
  SetItem s;
  s.kind = Kind::constant;
  s.column = std::move(col);
  s.constant = std::move(v);
  return s;
}

SetItem SetItem::case_of(std::string col, std::string src, std::vector<double> thresholds,
                         std::vector<Value> outputs) {
  SetItem s;
  s.kind = Kind::case_thresholds;
  s.column = std::move(col);
  s.source = std::move(src);
  s.thresholds = std::move(thresholds);
  s.outputs = std::move(outputs);
  return s;
}

SetItem SetItem::add(std::string col, double delta) {
  SetItem s;
  s.kind = Kind::add;
  s.column = std::move(col);
  s.source = s.column;
  s.delta = delta;
  return s;
}

std::string_view agg_fn_name(AggFn f) {
  switch (f) {
    case AggFn::count: return "count";
    case AggFn::count_where: return "count_where";
    case AggFn::sum: return "sum";
    case AggFn::avg: return "avg";
    case AggFn::min: return "min";
    case AggFn::max: return "max";
    case AggFn::spread: return "spread";
  }
  return "count";
}

std::string result_to_text(const OpResult& r) {
  std::string out;
  out += fmt::format("affected={}\n", r.affected);
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    if (i) out += ',';
    out += r.columns[i];
  }
  if (!r.columns.empty()) out += '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

namespace {

json value_json(const Value& v) {
  struct V {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(std::int64_t i) const { return i; }
    json operator()(double d) const { return d; }
    json operator()(const std::string& s) const { return s; }
    json operator()(bool b) const { return b; }
  };
  return std::visit(V{}, v);
}

json pred_json(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::always_true: return json{{"kind", "true"}};
    case Predicate::Kind::key_equals: return json{{"kind", "key_eq"}, {"key", p.key}};
    case Predicate::Kind::key_range:
      return json{{"kind", "key_range"}, {"lo", p.lo}, {"hi", p.hi}};
    case Predicate::Kind::is_null: return json{{"kind", "is_null"}, {"column", p.column}};
    case Predicate::Kind::not_null: return json{{"kind", "not_null"}, {"column", p.column}};
    case Predicate::Kind::compare:
      return json{{"kind", "compare"},
                  {"column", p.column},
                  {"op", std::string(cmp_op_name(p.op))},
                  {"rhs", value_json(p.rhs)}};
  }
  return json{{"kind", "true"}};
}

json colref_json(const ColumnRef& c) {
  if (c.latest_prefix) return json{{"latest_prefix", c.name}};
  return json(c.name);
}

}  // namespace

std::string descriptor_to_json(const OperationDescriptor& op) {
  json j{{"kind", std::string(op_kind_name(op.kind))},
         {"op_id", op.op_id},
         {"table", op.table}};
  j["provenance"] = json{{"workflow", op.provenance.workflow},
                         {"worker", op.provenance.worker},
                         {"step", op.provenance.step},
                         {"phase", std::string(op_phase_name(op.provenance.phase))},
                         {"ordinal", op.provenance.ordinal}};
  switch (op.kind) {
    case OpKind::add_column:
      j["column"] = json{{"name", op.column.name},
                         {"type", std::string(column_type_name(op.column.type))},
                         {"nullable", op.column.nullable},
                         {"default", value_json(op.column.default_value)}};
      break;
    case OpKind::drop_column:
      j["column_name"] = op.column_name;
      break;
    case OpKind::create_index:
      j["index_name"] = op.index_name;
      j["index_columns"] = op.index_columns;
      break;
    case OpKind::insert_rows: {
      j["columns"] = op.insert_columns;
      json rows = json::array();
      for (const auto& r : op.insert_values) {
        json row = json::array();
        for (const auto& v : r) row.push_back(value_json(v));
        rows.push_back(std::move(row));
      }
      j["values"] = std::move(rows);
      break;
    }
    case OpKind::update_where: {
      json items = json::array();
      for (const auto& s : op.set_items) {
        json sj{{"column", s.column}};
        switch (s.kind) {
          case SetItem::Kind::constant: sj["set"] = value_json(s.constant); break;
          case SetItem::Kind::case_thresholds: {
            sj["case_source"] = s.source;
            sj["thresholds"] = s.thresholds;
            json outs = json::array();
            for (const auto& v : s.outputs) outs.push_back(value_json(v));
            sj["outputs"] = std::move(outs);
            break;
          }
          case SetItem::Kind::add: sj["add"] = s.delta; break;
        }
        items.push_back(std::move(sj));
      }
      j["set"] = std::move(items);
      j["where"] = pred_json(op.where);
      break;
    }
    case OpKind::delete_where:
      j["where"] = pred_json(op.where);
      break;
    case OpKind::point_read:
      j["key"] = op.key;
      break;
    case OpKind::range_read:
      j["lo"] = op.lo;
      j["limit"] = op.limit;
      break;
    case OpKind::aggregate:
    case OpKind::cross_branch_aggregate: {
      json a{{"table", op.agg.table}};
      if (op.agg.join) {
        json on = json::array();
        for (const auto& [l, r] : op.agg.join->on) on.push_back(json::array({l, r}));
        a["join"] = json{{"table", op.agg.join->table}, {"on", std::move(on)}};
      }
      a["where"] = pred_json(op.agg.where);
      json gb = json::array();
      for (const auto& g : op.agg.group_by) gb.push_back(colref_json(g));
      a["group_by"] = std::move(gb);
      json aggs = json::array();
      for (const auto& e : op.agg.aggs) {
        json ej{{"fn", std::string(agg_fn_name(e.fn))}, {"alias", e.alias}};
        if (e.fn != AggFn::count) ej["column"] = colref_json(e.column);
        if (e.fn == AggFn::count_where) ej["filter"] = pred_json(e.filter);
        aggs.push_back(std::move(ej));
      }
      a["aggs"] = std::move(aggs);
      if (op.agg.having) {
        json h{{"agg_index", op.agg.having->agg_index},
               {"op", std::string(cmp_op_name(op.agg.having->op))}};
        if (op.agg.having->rhs_is_column)
          h["rhs_column"] = op.agg.having->rhs_column;
        else
          h["rhs"] = value_json(op.agg.having->rhs);
        a["having"] = std::move(h);
      }
      j["aggregate"] = std::move(a);
      if (op.kind == OpKind::cross_branch_aggregate) {
        json bs = json::array();
        for (const auto& b : op.branches)
          bs.push_back(json{{"branch", b.backend_branch}, {"label", b.label}});
        j["branches"] = std::move(bs);
      }
      break;
    }
  }
  return j.dump();
}

}  // namespace branchbench
