// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>
#include <string>

#include <fmt/format.h>

#include "branchbench/backend.hpp"
#include "branchbench/datagen.hpp"
#include "branchbench/fullcopy.hpp"
#include "branchbench/workflows.hpp"
#include "test_util.hpp"

using namespace branchbench;

TEST_SUITE_BEGIN("workflows");

namespace {

DataGenConfig small_config() {
  DataGenConfig cfg;
  cfg.warehouses = 1;
  cfg.seed = 4321;
  cfg.m.districts_per_warehouse = 2;
  cfg.m.customers_per_district = 8;
  cfg.m.orders_per_district = 6;
  cfg.m.order_lines_per_order = 3;
  cfg.m.new_orders_per_district = 2;
  cfg.m.stock_per_warehouse = 25;
  cfg.m.items = 25;
  cfg.m.suppliers = 5;
  return cfg;
}

StepContext make_ctx(WorkflowKind wf, std::uint32_t worker, std::uint32_t step,
                     std::uint32_t ms, std::uint32_t md, std::uint32_t qv) {
  StepContext ctx;
  ctx.workflow = wf;
  ctx.worker = worker;
  ctx.step = step;
  ctx.total_steps = 10;
  ctx.schema_ops = ms;
  ctx.data_mutations = md;
  ctx.read_queries = qv;
  ctx.seed = 777;
  ctx.data = small_config();
  return ctx;
}

std::string ops_json(const StepOps& ops) {
  std::string out;
  for (const auto& op : ops.mutate) out += descriptor_to_json(op) + "\n";
  for (const auto& op : ops.evaluate) out += descriptor_to_json(op) + "\n";
  return out;
}

// Closure check: collect every column an op references and require it to be
// a base column of its table or one added earlier in the same step.
void collect_refs(const OperationDescriptor& op,
                  std::vector<std::pair<std::string, std::string>>& refs) {
  auto pred = [&](const std::string& table, const Predicate& p) {
    if (p.kind == Predicate::Kind::is_null || p.kind == Predicate::Kind::not_null ||
        p.kind == Predicate::Kind::compare)
      refs.emplace_back(table, p.column);
  };
  switch (op.kind) {
    case OpKind::drop_column:
      refs.emplace_back(op.table, op.column_name);
      break;
    case OpKind::create_index:
      for (const auto& c : op.index_columns) refs.emplace_back(op.table, c);
      break;
    case OpKind::insert_rows:
      for (const auto& c : op.insert_columns) refs.emplace_back(op.table, c);
      break;
    case OpKind::update_where:
      for (const auto& s : op.set_items) {
        refs.emplace_back(op.table, s.column);
        if (s.kind == SetItem::Kind::case_thresholds) refs.emplace_back(op.table, s.source);
      }
      pred(op.table, op.where);
      break;
    case OpKind::delete_where:
      pred(op.table, op.where);
      break;
    case OpKind::aggregate:
    case OpKind::cross_branch_aggregate: {
      const auto& a = op.agg;
      for (const auto& g : a.group_by)
        if (!g.latest_prefix) refs.emplace_back(a.table, g.name);
      for (const auto& e : a.aggs) {
        if (e.fn != AggFn::count && e.fn != AggFn::count_where && !e.column.latest_prefix)
          refs.emplace_back(a.table, e.column.name);
        if (e.fn == AggFn::count_where) pred(a.table, e.filter);
      }
      pred(a.table, a.where);
      if (a.having && a.having->rhs_is_column) refs.emplace_back(a.table, a.having->rhs_column);
      break;
    }
    default:
      break;
  }
}

bool is_base_column(const std::vector<TableSchema>& base, const std::string& col) {
  // Joined scopes expose both tables' columns; accept a hit in any table.
  for (const auto& t : base)
    if (t.column_index(col) >= 0) return true;
  return false;
}

}  // namespace

TEST_CASE("step instantiation is deterministic and seed-sensitive") {
  for (WorkflowKind wf : all_workflows()) {
    auto ctx = make_ctx(wf, 2, 5, 1, 3, 2);
    const std::string a = ops_json(instantiate_step(ctx));
    const std::string b = ops_json(instantiate_step(ctx));
    REQUIRE(a == b);
    ctx.seed = 778;
    const std::string c = ops_json(instantiate_step(ctx));
    REQUIRE(a != c);
  }
}

TEST_CASE("step shape: M_s schema ops, M_d mutations, Q_v reads, ordered ids") {
  for (WorkflowKind wf : all_workflows()) {
    for (std::uint32_t ms : {0u, 1u, 3u}) {
      for (std::uint32_t md : {1u, 5u}) {
        for (std::uint32_t qv : {1u, 4u}) {
          auto ctx = make_ctx(wf, 1, 2, ms, md, qv);
          const StepOps ops = instantiate_step(ctx);
          REQUIRE(ops.mutate.size() == ms + md);
          REQUIRE(ops.evaluate.size() == qv);
          for (std::size_t i = 0; i < ops.mutate.size(); ++i) {
            const auto& op = ops.mutate[i];
            if (i < ms) REQUIRE(op_is_schema(op.kind));
            if (i >= ms) REQUIRE(!op_is_read(op.kind));
            REQUIRE(op.provenance.workflow == workflow_name(wf));
            REQUIRE(op.provenance.worker == 1);
            REQUIRE(op.provenance.step == 2);
            const auto parts = unpack_op_id(op.op_id);
            REQUIRE(parts.worker == 1);
            REQUIRE(parts.step == 2);
            REQUIRE(parts.phase == OpPhase::mutate);
            REQUIRE(parts.ordinal == i);
          }
          for (std::size_t i = 0; i < ops.evaluate.size(); ++i) {
            REQUIRE(op_is_read(ops.evaluate[i].kind));
            REQUIRE(unpack_op_id(ops.evaluate[i].op_id).phase == OpPhase::evaluate);
            REQUIRE(unpack_op_id(ops.evaluate[i].op_id).ordinal == i);
          }
        }
      }
    }
  }
}

TEST_CASE("per-step closure: referenced columns are base or added this step") {
  static const std::vector<TableSchema> base = ch_schema();
  for (WorkflowKind wf : all_workflows()) {
    for (std::uint32_t worker : {0u, 3u}) {
      for (std::uint32_t step : {0u, 1u, 7u}) {
        auto ctx = make_ctx(wf, worker, step, 2, 6, 3);
        const StepOps ops = instantiate_step(ctx);
        std::set<std::string> added;
        auto check = [&](const OperationDescriptor& op) {
          std::vector<std::pair<std::string, std::string>> refs;
          collect_refs(op, refs);
          for (const auto& [table, col] : refs) {
            (void)table;
            const bool ok = is_base_column(base, col) || added.count(col) > 0;
            REQUIRE_MESSAGE(ok, "column " << col << " referenced before add in "
                                          << descriptor_to_json(op));
          }
          if (op.kind == OpKind::add_column) added.insert(op.column.name);
        };
        for (const auto& op : ops.mutate) check(op);
        for (const auto& op : ops.evaluate) check(op);
      }
    }
  }
}

TEST_CASE("generated column names carry the op id suffix") {
  auto ctx = make_ctx(WorkflowKind::software_dev, 4, 9, 1, 1, 2);
  const StepOps ops = instantiate_step(ctx);
  REQUIRE(ops.mutate[0].kind == OpKind::add_column);
  const std::string& name = ops.mutate[0].column.name;
  const std::string sfx = op_id_suffix(ops.mutate[0].op_id);
  REQUIRE(name.size() > sfx.size());
  REQUIRE(name.substr(name.size() - sfx.size()) == sfx);

  // A different (worker, step) yields a different generated name.
  auto ctx2 = make_ctx(WorkflowKind::software_dev, 5, 9, 1, 1, 2);
  REQUIRE(instantiate_step(ctx2).mutate[0].column.name != name);
}

TEST_CASE("every workflow's steps apply cleanly on a branch and on skips") {
  auto ds = generate_dataset(small_config()).take();
  for (WorkflowKind wf : all_workflows()) {
    CAPTURE(workflow_name(wf));
    FullCopyBackend backend;
    REQUIRE_MESSAGE(load_dataset(ds, backend).ok(), "load");

    // Lineage branch: steps 0..4 applied in order.
    const BranchId lineage = backend.create_branch(kRootBranch).take();
    auto ls = backend.connect_branch(lineage).take();
    for (std::uint32_t step = 0; step < 5; ++step) {
      auto ctx = make_ctx(wf, 0, step, 1, 4, 2);
      const StepOps ops = instantiate_step(ctx);
      for (const auto& op : ops.mutate) {
        auto r = ls->execute(op);
        REQUIRE_MESSAGE(r.ok(), workflow_name(wf) << " step " << step << ": " << err_text(r)
                                                  << " op " << descriptor_to_json(op));
      }
      for (const auto& op : ops.evaluate) {
        auto r = ls->execute(op);
        REQUIRE_MESSAGE(r.ok(), workflow_name(wf) << " eval " << step << ": " << err_text(r));
      }
    }

    // Skip branch: step 3 of another worker applied directly on fresh data;
    // closure makes it valid without steps 0..2.
    const BranchId skip = backend.create_branch(kRootBranch).take();
    auto ss = backend.connect_branch(skip).take();
    auto ctx = make_ctx(wf, 2, 3, 1, 4, 2);
    const StepOps ops = instantiate_step(ctx);
    for (const auto& op : ops.mutate) {
      auto r = ss->execute(op);
      REQUIRE_MESSAGE(r.ok(), workflow_name(wf) << " skip: " << err_text(r) << " op "
                                                << descriptor_to_json(op));
    }
    for (const auto& op : ops.evaluate) REQUIRE(ss->execute(op).ok());
  }
}

TEST_CASE("insert keys never collide across workers, steps, or reruns") {
  auto ds = generate_dataset(small_config()).take();
  for (WorkflowKind wf : {WorkflowKind::failure_repro, WorkflowKind::simulation}) {
    CAPTURE(workflow_name(wf));
    FullCopyBackend backend;
    REQUIRE(load_dataset(ds, backend).ok());
    const BranchId b = backend.create_branch(kRootBranch).take();
    auto s = backend.connect_branch(b).take();
    // Pile many workers' steps onto ONE branch; synthetic keys must not
    // collide with the dataset or each other.
    for (std::uint32_t worker : {0u, 1u, 2u}) {
      for (std::uint32_t step = 0; step < 4; ++step) {
        auto ctx = make_ctx(wf, worker, step, 1, 6, 1);
        for (const auto& op : instantiate_step(ctx).mutate) {
          auto r = s->execute(op);
          REQUIRE_MESSAGE(r.ok(), "worker " << worker << " step " << step << ": " << err_text(r)
                                            << " op " << descriptor_to_json(op));
        }
      }
    }
  }
}

TEST_CASE("cross-branch queries execute against diverged branches") {
  auto ds = generate_dataset(small_config()).take();
  for (WorkflowKind wf : all_workflows()) {
    CAPTURE(workflow_name(wf));
    FullCopyBackend backend;
    REQUIRE(load_dataset(ds, backend).ok());
    std::vector<BranchSel> sel;
    for (std::uint32_t worker = 0; worker < 2; ++worker) {
      const BranchId b = backend.create_branch(kRootBranch).take();
      auto s = backend.connect_branch(b).take();
      auto ctx = make_ctx(wf, worker, 0, 1, 3, 1);
      for (const auto& op : instantiate_step(ctx).mutate) REQUIRE(s->execute(op).ok());
      sel.push_back(BranchSel{b, fmt::format("n{}", worker + 1)});
    }
    auto op = instantiate_cross_branch(wf, 777, 0, sel, small_config(), 1);
    auto r = backend.execute_on(sel[0].backend_branch, op);
    REQUIRE_MESSAGE(r.ok(), workflow_name(wf) << ": " << err_text(r));
    REQUIRE(r.value().columns.front() == "branch");
    REQUIRE(!r.value().rows.empty());
    // Every row is tagged with one of the requested labels.
    for (const auto& row : r.value().rows) {
      const std::string& label = std::get<std::string>(row[0]);
      REQUIRE((label == "n1" || label == "n2"));
    }
  }
}

TEST_CASE("software_dev cross query without schema ops falls back to base columns") {
  auto ds = generate_dataset(small_config()).take();
  FullCopyBackend backend;
  REQUIRE(load_dataset(ds, backend).ok());
  const BranchId b = backend.create_branch(kRootBranch).take();
  auto op = instantiate_cross_branch(WorkflowKind::software_dev, 1, 0, {{b, "n1"}},
                                     small_config(), 0);
  REQUIRE(!op.agg.group_by.empty());
  REQUIRE(!op.agg.group_by[0].latest_prefix);
  auto r = backend.execute_on(b, op);
  REQUIRE_MESSAGE(r.ok(), err_text(r));
}

TEST_SUITE_END();
