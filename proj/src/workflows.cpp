// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/workflows.hpp"

#include <fmt/format.h>

#include "branchbench/rng.hpp"

namespace branchbench {

std::string_view workflow_name(WorkflowKind k) {
  switch (k) {
    case WorkflowKind::software_dev: return "software_dev";
    case WorkflowKind::failure_repro: return "failure_repro";
    case WorkflowKind::data_cleaning: return "data_cleaning";
    case WorkflowKind::mcts: return "mcts";
    case WorkflowKind::simulation: return "simulation";
  }
  return "software_dev";
}

std::optional<WorkflowKind> workflow_from_name(std::string_view s) {
  for (WorkflowKind k : all_workflows())
    if (workflow_name(k) == s) return k;
  return std::nullopt;
}

std::vector<WorkflowKind> all_workflows() {
  return {WorkflowKind::software_dev, WorkflowKind::failure_repro, WorkflowKind::data_cleaning,
          WorkflowKind::mcts, WorkflowKind::simulation};
}

namespace {

// Quartile boundaries of the generated c_ytd_payment bulk range [0, 6000].
constexpr double kYtdQ1 = 1500.0, kYtdQ2 = 3000.0, kYtdQ3 = 4500.0;
constexpr double kYtdCap = 6000.0;
constexpr std::int64_t kStockoutThreshold = 10;

std::uint64_t wtag(WorkflowKind k) { return 0xBB00 + static_cast<std::uint64_t>(k); }

struct StepGen {
  const StepContext& ctx;

  std::uint64_t bits(std::uint32_t ordinal, std::uint32_t use) const {
    return counter_hash(ctx.seed ^ wtag(ctx.workflow), ctx.worker, ctx.step,
                        (static_cast<std::uint64_t>(ordinal) << 8) | use);
  }
  std::int64_t pick(std::uint32_t ordinal, std::uint32_t use, std::int64_t lo,
                    std::int64_t hi) const {
    return lo + static_cast<std::int64_t>(bits(ordinal, use) %
                                          static_cast<std::uint64_t>(hi - lo + 1));
  }
  std::int64_t warehouse(std::uint32_t ordinal, std::uint32_t use = 0) const {
    return pick(ordinal, use, 1, ctx.data.warehouses);
  }
  std::int64_t district(std::uint32_t ordinal, std::uint32_t use = 1) const {
    return pick(ordinal, use, 1, ctx.data.m.districts_per_warehouse);
  }
  double cents(std::uint32_t ordinal, std::uint32_t use, std::int64_t lo_c,
               std::int64_t hi_c) const {
    return static_cast<double>(pick(ordinal, use, lo_c, hi_c)) / 100.0;
  }
  std::string text(std::uint32_t ordinal, std::uint32_t use, std::uint32_t len) const {
    static constexpr char alpha[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    std::string out;
    out.reserve(len);
    std::uint64_t h = 0;
    for (std::uint32_t j = 0; j < len; ++j) {
      if (j % 8 == 0) h = bits(ordinal, use + 0x40 + j / 8);
      out += alpha[h % 62];
      h /= 62;
    }
    return out;
  }

  // Synthetic order ids for inserts: unique across all (worker, step, n)
  // so inserts never collide along any branch lineage.
  std::int64_t synthetic_order_id(std::uint32_t n) const {
    const std::uint64_t slot =
        (static_cast<std::uint64_t>(ctx.worker) * ctx.total_steps + ctx.step) * 4096 + n;
    return static_cast<std::int64_t>(ctx.data.m.orders_per_district) + 1 +
           static_cast<std::int64_t>(slot);
  }

  OperationDescriptor base_op(OpKind kind, OpPhase phase, std::uint32_t ordinal,
                              std::string table) const {
    OperationDescriptor op;
    op.kind = kind;
    op.op_id = pack_op_id(ctx.worker, ctx.step, phase, ordinal);
    op.provenance = {std::string(workflow_name(ctx.workflow)), ctx.worker, ctx.step, phase,
                     ordinal};
    op.table = std::move(table);
    return op;
  }

  std::string suffixed(std::string_view stem, const OperationDescriptor& op) const {
    return fmt::format("{}_{}", stem, op_id_suffix(op.op_id));
  }
};

Key district_lo(std::int64_t w, std::int64_t d) { return {w, d, 1}; }
Key district_hi(std::int64_t w, std::int64_t d, std::int64_t last) { return {w, d, last}; }

OperationDescriptor generic_add_column(const StepGen& g, std::uint32_t ordinal) {
  auto op = g.base_op(OpKind::add_column, OpPhase::mutate, ordinal, "stock");
  op.column = Column{g.suffixed("s_note", op), ColumnType::text, true, Value{}, 8};
  return op;
}

// Pads evaluate lists beyond a workflow's native queries.
OperationDescriptor generic_read(const StepGen& g, std::uint32_t ordinal) {
  const auto& m = g.ctx.data.m;
  switch (ordinal % 3) {
    case 0: {
      auto op = g.base_op(OpKind::point_read, OpPhase::evaluate, ordinal, "customer");
      op.key = {g.warehouse(ordinal), g.district(ordinal),
                g.pick(ordinal, 2, 1, m.customers_per_district)};
      return op;
    }
    case 1: {
      auto op = g.base_op(OpKind::range_read, OpPhase::evaluate, ordinal, "orders");
      op.lo = {g.warehouse(ordinal), g.district(ordinal), 1};
      op.limit = 20;
      return op;
    }
    default: {
      auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, ordinal, "district");
      op.agg.table = "district";
      const std::int64_t w = g.warehouse(ordinal);
      op.agg.where = Predicate::key_between({w, 1}, {w, m.districts_per_warehouse});
      op.agg.aggs = {AggExpr{AggFn::sum, ColumnRef::named("d_ytd"), {}, "district_ytd"},
                     AggExpr{AggFn::count, {}, {}, "districts"}};
      return op;
    }
  }
}

void pad_evaluate(const StepGen& g, std::vector<OperationDescriptor>& evaluate) {
  while (evaluate.size() < g.ctx.read_queries)
    evaluate.push_back(generic_read(g, static_cast<std::uint32_t>(evaluate.size())));
  if (evaluate.size() > g.ctx.read_queries) evaluate.resize(g.ctx.read_queries);
  // Re-number ordinals after truncation so op ids stay dense.
  for (std::uint32_t i = 0; i < evaluate.size(); ++i) {
    evaluate[i].op_id = pack_op_id(g.ctx.worker, g.ctx.step, OpPhase::evaluate, i);
    evaluate[i].provenance.ordinal = i;
  }
}

// Developer workflow: add a loyalty tier column, backfill it from spending
// quartiles, inspect the tier distribution.
StepOps step_software_dev(const StepGen& g) {
  StepOps out;
  const auto& ctx = g.ctx;
  std::string tier_col;
  for (std::uint32_t i = 0; i < ctx.schema_ops; ++i) {
    auto op = g.base_op(OpKind::add_column, OpPhase::mutate, i, "customer");
    tier_col = g.suffixed("loyalty_tier", op);
    op.column = Column{tier_col, ColumnType::integer, false, Value{std::int64_t{0}}, 0};
    out.mutate.push_back(std::move(op));
  }
  for (std::uint32_t j = 0; j < ctx.data_mutations; ++j) {
    const std::uint32_t ordinal = ctx.schema_ops + j;
    if (j == 0 && !tier_col.empty()) {
      auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "customer");
      op.set_items = {SetItem::case_of(
          tier_col, "c_ytd_payment", {kYtdQ1, kYtdQ2, kYtdQ3},
          {Value{std::int64_t{0}}, Value{std::int64_t{1}}, Value{std::int64_t{2}},
           Value{std::int64_t{3}}})};
      op.where = Predicate::all();
      out.mutate.push_back(std::move(op));
      continue;
    }
    auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "customer");
    const std::int64_t w = g.warehouse(ordinal), d = g.district(ordinal);
    op.set_items = {SetItem::add("c_payment_cnt", 1.0)};
    op.where = Predicate::key_between(district_lo(w, d),
                                      district_hi(w, d, ctx.data.m.customers_per_district));
    out.mutate.push_back(std::move(op));
  }

  const ColumnRef tier_ref =
      tier_col.empty() ? ColumnRef::named("c_credit") : ColumnRef::named(tier_col);
  {
    auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, 0, "customer");
    op.agg.table = "customer";
    op.agg.group_by = {tier_ref};
    op.agg.aggs = {AggExpr{AggFn::count, {}, {}, "customers"}};
    out.evaluate.push_back(std::move(op));
  }
  {
    auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, 1, "customer");
    op.agg.table = "customer";
    op.agg.group_by = {tier_ref};
    op.agg.aggs = {AggExpr{AggFn::avg, ColumnRef::named("c_balance"), {}, "avg_balance"},
                   AggExpr{AggFn::min, ColumnRef::named("c_balance"), {}, "min_balance"},
                   AggExpr{AggFn::max, ColumnRef::named("c_balance"), {}, "max_balance"}};
    out.evaluate.push_back(std::move(op));
  }
  pad_evaluate(g, out.evaluate);
  return out;
}

// Replay workflow: re-applies a slice of a synthetic DDL+DML log, then runs
// the order/order_line count consistency check.
StepOps step_failure_repro(const StepGen& g) {
  StepOps out;
  const auto& ctx = g.ctx;
  const auto& m = ctx.data.m;
  std::string first_added;  // orders column added at schema ordinal 0, if any
  for (std::uint32_t i = 0; i < ctx.schema_ops; ++i) {
    switch (i % 5) {
      case 0: {
        auto op = g.base_op(OpKind::add_column, OpPhase::mutate, i, "orders");
        op.column =
            Column{g.suffixed("o_priority", op), ColumnType::integer, false,
                   Value{std::int64_t{0}}, 0};
        if (first_added.empty()) first_added = op.column.name;
        out.mutate.push_back(std::move(op));
        break;
      }
      case 1: {
        auto op = g.base_op(OpKind::add_column, OpPhase::mutate, i, "order_line");
        op.column = Column{g.suffixed("ol_note", op), ColumnType::text, true, Value{}, 12};
        out.mutate.push_back(std::move(op));
        break;
      }
      case 2: {
        auto op = g.base_op(OpKind::add_column, OpPhase::mutate, i, "customer");
        op.column =
            Column{g.suffixed("c_seg", op), ColumnType::boolean, false, Value{false}, 0};
        out.mutate.push_back(std::move(op));
        break;
      }
      case 3: {
        auto op = g.base_op(OpKind::create_index, OpPhase::mutate, i, "orders");
        op.index_columns = {"o_c_id"};
        op.index_name = g.suffixed("ix_orders_cust", op);
        out.mutate.push_back(std::move(op));
        break;
      }
      default: {
        // Replays an add-then-drop pair within the same step.
        auto op = g.base_op(OpKind::drop_column, OpPhase::mutate, i, "orders");
        op.column_name = first_added;
        out.mutate.push_back(std::move(op));
        first_added.clear();
        break;
      }
    }
  }

  const std::uint64_t log_base =
      static_cast<std::uint64_t>(ctx.step) * (ctx.schema_ops + ctx.data_mutations);
  for (std::uint32_t j = 0; j < ctx.data_mutations; ++j) {
    const std::uint32_t ordinal = ctx.schema_ops + j;
    std::uint32_t variant = static_cast<std::uint32_t>((log_base + ctx.schema_ops + j) % 9);
    if (variant == 1 && (j == 0 || out.mutate.back().kind != OpKind::insert_rows)) variant = 2;
    const std::int64_t w = g.warehouse(ordinal), d = g.district(ordinal);
    switch (variant) {
      case 0: {
        auto op = g.base_op(OpKind::insert_rows, OpPhase::mutate, ordinal, "orders");
        op.insert_columns = {"o_w_id", "o_d_id", "o_id",     "o_c_id",
                             "o_entry_d", "o_ol_cnt", "o_all_local"};
        op.insert_values = {{w, d, g.synthetic_order_id(ordinal),
                             g.pick(ordinal, 2, 1, m.customers_per_district),
                             std::int64_t{1600000000} + g.pick(ordinal, 3, 0, 1000000),
                             std::int64_t{1}, true}};
        out.mutate.push_back(std::move(op));
        break;
      }
      case 1: {
        // Line for the order inserted by the previous mutation.
        const auto& prev = out.mutate.back();
        const std::int64_t pw = std::get<std::int64_t>(prev.insert_values[0][0]);
        const std::int64_t pd = std::get<std::int64_t>(prev.insert_values[0][1]);
        const std::int64_t po = std::get<std::int64_t>(prev.insert_values[0][2]);
        auto op = g.base_op(OpKind::insert_rows, OpPhase::mutate, ordinal, "order_line");
        op.insert_columns = {"ol_w_id", "ol_d_id", "ol_o_id", "ol_number", "ol_i_id",
                             "ol_supply_w_id", "ol_quantity", "ol_amount", "ol_dist_info"};
        op.insert_values = {{pw, pd, po, std::int64_t{1},
                             g.pick(ordinal, 2, 1, m.stock_per_warehouse), pw,
                             g.pick(ordinal, 3, 1, 10), g.cents(ordinal, 4, 1, 999999),
                             g.text(ordinal, 5, 24)}};
        out.mutate.push_back(std::move(op));
        break;
      }
      case 2: {
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "orders");
        op.set_items = {
            SetItem::set("o_carrier_id", Value{g.pick(ordinal, 2, 1, 10)})};
        op.where = Predicate::key_eq({w, d, g.pick(ordinal, 3, 1, m.orders_per_district)});
        out.mutate.push_back(std::move(op));
        break;
      }
      case 3: {
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "customer");
        op.set_items = {SetItem::add("c_balance", g.cents(ordinal, 2, -5000, 5000))};
        op.where = Predicate::key_between(district_lo(w, d),
                                          district_hi(w, d, m.customers_per_district));
        out.mutate.push_back(std::move(op));
        break;
      }
      case 4: {
        auto op = g.base_op(OpKind::delete_where, OpPhase::mutate, ordinal, "new_order");
        const std::int64_t o =
            g.pick(ordinal, 2, m.orders_per_district - m.new_orders_per_district + 1,
                   m.orders_per_district);
        op.where = Predicate::key_eq({w, d, o});
        out.mutate.push_back(std::move(op));
        break;
      }
      case 5: {
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "stock");
        const std::int64_t i0 = g.pick(
            ordinal, 2, 1,
            std::max<std::int64_t>(1, static_cast<std::int64_t>(m.stock_per_warehouse) - 19));
        op.set_items = {SetItem::add("s_quantity", -static_cast<double>(g.pick(ordinal, 3, 1, 5)))};
        op.where = Predicate::key_between({w, i0}, {w, i0 + 19});
        out.mutate.push_back(std::move(op));
        break;
      }
      case 6: {
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "warehouse");
        op.set_items = {SetItem::add("w_ytd", g.cents(ordinal, 2, 100, 100000))};
        op.where = Predicate::key_eq({w});
        out.mutate.push_back(std::move(op));
        break;
      }
      case 7: {
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "district");
        op.set_items = {SetItem::add("d_ytd", g.cents(ordinal, 2, 100, 100000))};
        op.where = Predicate::key_eq({w, d});
        out.mutate.push_back(std::move(op));
        break;
      }
      default: {
        auto op = g.base_op(OpKind::delete_where, OpPhase::mutate, ordinal, "order_line");
        op.where = Predicate::key_eq({w, d, g.pick(ordinal, 2, 1, m.orders_per_district),
                                      g.pick(ordinal, 3, 1, m.order_lines_per_order)});
        out.mutate.push_back(std::move(op));
        break;
      }
    }
  }

  {
    // Orders whose line count disagrees with o_ol_cnt.
    auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, 0, "orders");
    op.agg.table = "orders";
    op.agg.join = JoinSpec{"order_line",
                           {{"o_w_id", "ol_w_id"}, {"o_d_id", "ol_d_id"}, {"o_id", "ol_o_id"}}};
    op.agg.group_by = {ColumnRef::named("o_w_id"), ColumnRef::named("o_d_id"),
                       ColumnRef::named("o_id"), ColumnRef::named("o_ol_cnt")};
    op.agg.aggs = {AggExpr{AggFn::count, {}, {}, "line_count"}};
    op.agg.having = Having{0, CmpOp::ne, true, Value{}, "o_ol_cnt"};
    out.evaluate.push_back(std::move(op));
  }
  pad_evaluate(g, out.evaluate);
  return out;
}

// Cleaning workflow: flag column plus one of three null/outlier strategies,
// then a data-quality summary.
StepOps step_data_cleaning(const StepGen& g) {
  StepOps out;
  const auto& ctx = g.ctx;
  std::string clean_col;
  for (std::uint32_t i = 0; i < ctx.schema_ops; ++i) {
    auto op = g.base_op(OpKind::add_column, OpPhase::mutate, i, "customer");
    clean_col = g.suffixed("c_clean", op);
    op.column = Column{clean_col, ColumnType::boolean, false, Value{false}, 0};
    out.mutate.push_back(std::move(op));
  }
  for (std::uint32_t j = 0; j < ctx.data_mutations; ++j) {
    const std::uint32_t ordinal = ctx.schema_ops + j;
    switch ((ctx.step + ctx.worker + j) % 3) {
      case 0: {  // impute nulls with zero
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "customer");
        op.set_items = {SetItem::set("c_balance", Value{0.0})};
        if (!clean_col.empty()) op.set_items.push_back(SetItem::set(clean_col, Value{true}));
        op.where = Predicate::null("c_balance");
        out.mutate.push_back(std::move(op));
        break;
      }
      case 1: {  // drop rows with null balance
        auto op = g.base_op(OpKind::delete_where, OpPhase::mutate, ordinal, "customer");
        op.where = Predicate::null("c_balance");
        out.mutate.push_back(std::move(op));
        break;
      }
      default: {  // clip payment outliers to the bulk range cap
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "customer");
        op.set_items = {SetItem::set("c_ytd_payment", Value{kYtdCap})};
        if (!clean_col.empty()) op.set_items.push_back(SetItem::set(clean_col, Value{true}));
        op.where = Predicate::cmp("c_ytd_payment", CmpOp::gt, Value{kYtdCap});
        out.mutate.push_back(std::move(op));
        break;
      }
    }
  }
  {
    auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, 0, "customer");
    op.agg.table = "customer";
    op.agg.aggs = {AggExpr{AggFn::count, {}, {}, "customers"},
                   AggExpr{AggFn::count_where, {}, Predicate::null("c_balance"), "null_balances"},
                   AggExpr{AggFn::avg, ColumnRef::named("c_balance"), {}, "avg_balance"},
                   AggExpr{AggFn::spread, ColumnRef::named("c_ytd_payment"), {}, "ytd_spread"}};
    out.evaluate.push_back(std::move(op));
  }
  pad_evaluate(g, out.evaluate);
  return out;
}

// Search workflow: consume stock along a rollout window, score the state.
StepOps step_mcts(const StepGen& g) {
  StepOps out;
  const auto& ctx = g.ctx;
  const auto& m = ctx.data.m;
  for (std::uint32_t i = 0; i < ctx.schema_ops; ++i)
    out.mutate.push_back(generic_add_column(g, i));
  for (std::uint32_t j = 0; j < ctx.data_mutations; ++j) {
    const std::uint32_t ordinal = ctx.schema_ops + j;
    auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "stock");
    const std::int64_t w = g.warehouse(ordinal);
    const std::int64_t i0 =
        g.pick(ordinal, 2, 1, std::max<std::int64_t>(1, static_cast<std::int64_t>(m.stock_per_warehouse) - 9));
    op.set_items = {SetItem::add("s_quantity", -static_cast<double>(g.pick(ordinal, 3, 1, 3))),
                    SetItem::add("s_ytd", g.cents(ordinal, 4, 100, 10000))};
    op.where = Predicate::key_between({w, i0}, {w, i0 + 9});
    out.mutate.push_back(std::move(op));
  }
  if (ctx.step % 4 == 3) {
    auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, 0, "order_line");
    op.agg.table = "order_line";
    op.agg.join = JoinSpec{"stock", {{"ol_supply_w_id", "s_w_id"}, {"ol_i_id", "s_i_id"}}};
    op.agg.aggs = {
        AggExpr{AggFn::sum, ColumnRef::named("ol_amount"), {}, "exposure"},
        AggExpr{AggFn::count_where, {},
                Predicate::cmp("s_quantity", CmpOp::lt, Value{kStockoutThreshold}),
                "lines_at_risk"}};
    out.evaluate.push_back(std::move(op));
  } else {
    auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, 0, "stock");
    op.agg.table = "stock";
    const std::int64_t w = g.warehouse(ctx.schema_ops);
    const std::int64_t i0 = g.pick(ctx.schema_ops, 2, 1,
                                   std::max<std::int64_t>(1, static_cast<std::int64_t>(m.stock_per_warehouse) - 9));
    op.agg.where = Predicate::key_between({w, i0}, {w, i0 + 9});
    op.agg.aggs = {
        AggExpr{AggFn::sum, ColumnRef::named("s_quantity"), {}, "window_quantity"},
        AggExpr{AggFn::count_where, {},
                Predicate::cmp("s_quantity", CmpOp::lt, Value{kStockoutThreshold}),
                "stockouts"},
        AggExpr{AggFn::min, ColumnRef::named("s_quantity"), {}, "min_quantity"}};
    out.evaluate.push_back(std::move(op));
  }
  pad_evaluate(g, out.evaluate);
  return out;
}

// What-if workflow: a burst of order/stock churn, then cost + stockout score.
StepOps step_simulation(const StepGen& g) {
  StepOps out;
  const auto& ctx = g.ctx;
  const auto& m = ctx.data.m;
  for (std::uint32_t i = 0; i < ctx.schema_ops; ++i)
    out.mutate.push_back(generic_add_column(g, i));
  std::int64_t last_order_w = 0, last_order_d = 0, last_order_id = 0;
  for (std::uint32_t j = 0; j < ctx.data_mutations; ++j) {
    const std::uint32_t ordinal = ctx.schema_ops + j;
    std::uint32_t variant = j % 5;
    if (variant == 1 && last_order_id == 0) variant = 2;
    if (variant == 3 && last_order_id == 0) variant = 4;
    const std::int64_t w = g.warehouse(ordinal), d = g.district(ordinal);
    switch (variant) {
      case 0: {
        auto op = g.base_op(OpKind::insert_rows, OpPhase::mutate, ordinal, "orders");
        last_order_w = w;
        last_order_d = d;
        last_order_id = g.synthetic_order_id(ordinal);
        op.insert_columns = {"o_w_id", "o_d_id", "o_id",     "o_c_id",
                             "o_entry_d", "o_ol_cnt", "o_all_local"};
        op.insert_values = {{w, d, last_order_id,
                             g.pick(ordinal, 2, 1, m.customers_per_district),
                             std::int64_t{1600000000} + g.pick(ordinal, 3, 0, 1000000),
                             std::int64_t{1}, true}};
        out.mutate.push_back(std::move(op));
        break;
      }
      case 1: {
        auto op = g.base_op(OpKind::insert_rows, OpPhase::mutate, ordinal, "order_line");
        op.insert_columns = {"ol_w_id", "ol_d_id", "ol_o_id", "ol_number", "ol_i_id",
                             "ol_supply_w_id", "ol_quantity", "ol_amount", "ol_dist_info"};
        op.insert_values = {{last_order_w, last_order_d, last_order_id, std::int64_t{1},
                             g.pick(ordinal, 2, 1, m.stock_per_warehouse), last_order_w,
                             g.pick(ordinal, 3, 1, 10), g.cents(ordinal, 4, 1, 999999),
                             g.text(ordinal, 5, 24)}};
        out.mutate.push_back(std::move(op));
        break;
      }
      case 2: {
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "stock");
        const std::int64_t i0 =
            g.pick(ordinal, 2, 1, std::max<std::int64_t>(1, static_cast<std::int64_t>(m.stock_per_warehouse) - 4));
        op.set_items = {
            SetItem::add("s_quantity", -static_cast<double>(g.pick(ordinal, 3, 1, 5))),
            SetItem::add("s_order_cnt", 1.0)};
        op.where = Predicate::key_between({w, i0}, {w, i0 + 4});
        out.mutate.push_back(std::move(op));
        break;
      }
      case 3: {
        auto op = g.base_op(OpKind::insert_rows, OpPhase::mutate, ordinal, "new_order");
        op.insert_columns = {"no_w_id", "no_d_id", "no_o_id"};
        op.insert_values = {{last_order_w, last_order_d, last_order_id}};
        last_order_id = 0;  // one new_order row per synthetic order
        out.mutate.push_back(std::move(op));
        break;
      }
      default: {
        auto op = g.base_op(OpKind::update_where, OpPhase::mutate, ordinal, "district");
        op.set_items = {SetItem::add("d_ytd", g.cents(ordinal, 2, 100, 100000))};
        op.where = Predicate::key_eq({w, d});
        out.mutate.push_back(std::move(op));
        break;
      }
    }
  }
  {
    auto op = g.base_op(OpKind::aggregate, OpPhase::evaluate, 0, "order_line");
    op.agg.table = "order_line";
    op.agg.join = JoinSpec{"stock", {{"ol_supply_w_id", "s_w_id"}, {"ol_i_id", "s_i_id"}}};
    op.agg.aggs = {
        AggExpr{AggFn::sum, ColumnRef::named("ol_amount"), {}, "total_cost"},
        AggExpr{AggFn::count_where, {},
                Predicate::cmp("s_quantity", CmpOp::lt, Value{kStockoutThreshold}),
                "stockout_lines"}};
    out.evaluate.push_back(std::move(op));
  }
  pad_evaluate(g, out.evaluate);
  return out;
}

}  // namespace

StepOps instantiate_step(const StepContext& ctx) {
  StepGen g{ctx};
  switch (ctx.workflow) {
    case WorkflowKind::software_dev: return step_software_dev(g);
    case WorkflowKind::failure_repro: return step_failure_repro(g);
    case WorkflowKind::data_cleaning: return step_data_cleaning(g);
    case WorkflowKind::mcts: return step_mcts(g);
    case WorkflowKind::simulation: return step_simulation(g);
  }
  return {};
}

OperationDescriptor instantiate_cross_branch(WorkflowKind kind, std::uint64_t seed,
                                             std::uint32_t query_index,
                                             std::vector<BranchSel> branches,
                                             const DataGenConfig& data,
                                             std::uint32_t schema_ops) {
  (void)seed;
  (void)data;
  OperationDescriptor op;
  op.kind = OpKind::cross_branch_aggregate;
  // Cross queries use a dedicated worker lane (0xFFFF) in the op id space.
  op.op_id = pack_op_id(0xFFFF, query_index, OpPhase::cross, 0);
  op.provenance = {std::string(workflow_name(kind)), 0xFFFF, query_index, OpPhase::cross, 0};
  op.branches = std::move(branches);
  switch (kind) {
    case WorkflowKind::software_dev:
      op.table = "customer";
      op.agg.table = "customer";
      // Without schema ops no branch ever grows a tier column; compare the
      // base credit segmentation instead.
      op.agg.group_by = {schema_ops > 0 ? ColumnRef::latest("loyalty_tier_")
                                        : ColumnRef::named("c_credit")};
      op.agg.aggs = {AggExpr{AggFn::count, {}, {}, "customers"}};
      break;
    case WorkflowKind::failure_repro:
      op.table = "orders";
      op.agg.table = "orders";
      op.agg.aggs = {AggExpr{AggFn::count, {}, {}, "orders"},
                     AggExpr{AggFn::max, ColumnRef::named("o_id"), {}, "max_order_id"}};
      break;
    case WorkflowKind::data_cleaning:
      op.table = "customer";
      op.agg.table = "customer";
      op.agg.aggs = {
          AggExpr{AggFn::count, {}, {}, "customers"},
          AggExpr{AggFn::count_where, {}, Predicate::null("c_balance"), "null_balances"},
          AggExpr{AggFn::avg, ColumnRef::named("c_balance"), {}, "avg_balance"},
          AggExpr{AggFn::spread, ColumnRef::named("c_ytd_payment"), {}, "ytd_spread"}};
      break;
    case WorkflowKind::mcts:
      op.table = "stock";
      op.agg.table = "stock";
      op.agg.aggs = {AggExpr{AggFn::sum, ColumnRef::named("s_quantity"), {}, "total_quantity"},
                     AggExpr{AggFn::count_where, {},
                             Predicate::cmp("s_quantity", CmpOp::lt, Value{kStockoutThreshold}),
                             "stockouts"}};
      break;
    case WorkflowKind::simulation:
      op.table = "order_line";
      op.agg.table = "order_line";
      op.agg.aggs = {AggExpr{AggFn::avg, ColumnRef::named("ol_amount"), {}, "avg_amount"},
                     AggExpr{AggFn::count, {}, {}, "lines"}};
      break;
  }
  return op;
}

}  // namespace branchbench
