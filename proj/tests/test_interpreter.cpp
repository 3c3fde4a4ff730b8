// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "branchbench/backend.hpp"
#include "branchbench/datagen.hpp"
#include "branchbench/fullcopy.hpp"
#include "branchbench/rng.hpp"
#include "test_util.hpp"

using namespace branchbench;

TEST_SUITE_BEGIN("interpreter");

namespace {

DataGenConfig small_config() {
  DataGenConfig cfg;
  cfg.warehouses = 1;
  cfg.seed = 1234;
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

struct Fixture {
  Dataset ds;
  FullCopyBackend backend;
  BranchId branch = 0;
  std::shared_ptr<Session> session;

  Fixture() {
    auto d = generate_dataset(small_config());
    REQUIRE_MESSAGE(d.ok(), err_text(d));
    ds = d.take();
    auto l = load_dataset(ds, backend);
    REQUIRE_MESSAGE(l.ok(), err_text(l));
    auto b = backend.create_branch(kRootBranch);
    REQUIRE_MESSAGE(b.ok(), err_text(b));
    branch = b.value();
    auto s = backend.connect_branch(branch);
    REQUIRE_MESSAGE(s.ok(), err_text(s));
    session = s.take();
  }

  OpResult run(const OperationDescriptor& op) {
    auto r = session->execute(op);
    REQUIRE_MESSAGE(r.ok(), err_text(r));
    return r.take();
  }
};

OperationDescriptor point_read(std::string table, Key key) {
  OperationDescriptor op;
  op.kind = OpKind::point_read;
  op.table = std::move(table);
  op.key = std::move(key);
  return op;
}

OperationDescriptor range_read(std::string table, Key lo, std::uint32_t limit) {
  OperationDescriptor op;
  op.kind = OpKind::range_read;
  op.table = std::move(table);
  op.lo = std::move(lo);
  op.limit = limit;
  return op;
}

int column_of(const OpResult& r, std::string_view name) {
  for (std::size_t i = 0; i < r.columns.size(); ++i)
    if (r.columns[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

TEST_CASE("point read returns the loaded row, misses are empty") {
  Fixture fx;
  const auto& cust = *fx.ds.table("customer");
  const auto& [key, row] = cust.rows[3];
  auto res = fx.run(point_read("customer", key));
  REQUIRE(res.affected == 1);
  REQUIRE(res.rows.size() == 1);
  REQUIRE(res.columns.size() == cust.schema.columns.size());
  for (std::size_t i = 0; i < row.size(); ++i)
    REQUIRE(compare_values(res.rows[0][i], row[i]) == 0);

  auto miss = fx.run(point_read("customer", {99, 99, 99}));
  REQUIRE(miss.affected == 0);
  REQUIRE(miss.rows.empty());

  auto bad = fx.session->execute(point_read("nonexistent", {1}));
  REQUIRE(!bad.ok());
  REQUIRE(bad.error().cls == ErrorClass::not_found);
}

TEST_CASE("range read is key-ordered from lo and capped by limit") {
  Fixture fx;
  const auto& orders = *fx.ds.table("orders");
  auto res = fx.run(range_read("orders", {1, 2, 1}, 4));
  REQUIRE(res.rows.size() == 4);
  // Expect exactly the four orders (1,2,1)..(1,2,4) in key order.
  std::vector<Key> expect;
  for (const auto& [k, r] : orders.rows)
    if (k >= Key{1, 2, 1} && expect.size() < 4) expect.push_back(k);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(std::get<std::int64_t>(res.rows[i][0]) == expect[i][0]);
    REQUIRE(std::get<std::int64_t>(res.rows[i][1]) == expect[i][1]);
    REQUIRE(std::get<std::int64_t>(res.rows[i][2]) == expect[i][2]);
  }
}

TEST_CASE("insert then read back; duplicate key is a conflict") {
  Fixture fx;
  OperationDescriptor ins;
  ins.kind = OpKind::insert_rows;
  ins.table = "new_order";
  ins.insert_columns = {"no_w_id", "no_d_id", "no_o_id"};
  ins.insert_values = {{Value{std::int64_t{1}}, Value{std::int64_t{1}}, Value{std::int64_t{777}}}};
  auto res = fx.run(ins);
  REQUIRE(res.affected == 1);

  auto back = fx.run(point_read("new_order", {1, 1, 777}));
  REQUIRE(back.affected == 1);

  auto dup = fx.session->execute(ins);
  REQUIRE(!dup.ok());
  REQUIRE(dup.error().cls == ErrorClass::conflict);
}

TEST_CASE("insert with column subset fills defaults and rejects missing required") {
  Fixture fx;
  OperationDescriptor ins;
  ins.kind = OpKind::insert_rows;
  ins.table = "orders";
  // o_carrier_id is nullable and omitted; o_entry_d etc. are required.
  ins.insert_columns = {"o_w_id", "o_d_id", "o_id", "o_c_id", "o_entry_d", "o_ol_cnt",
                        "o_all_local"};
  ins.insert_values = {{Value{std::int64_t{1}}, Value{std::int64_t{1}}, Value{std::int64_t{9001}},
                        Value{std::int64_t{1}}, Value{std::int64_t{1600000000}},
                        Value{std::int64_t{0}}, Value{true}}};
  auto ok = fx.run(ins);
  REQUIRE(ok.affected == 1);
  auto back = fx.run(point_read("orders", {1, 1, 9001}));
  const int carrier = column_of(back, "o_carrier_id");
  REQUIRE(carrier >= 0);
  REQUIRE(is_null(back.rows[0][static_cast<std::size_t>(carrier)]));

  OperationDescriptor bad = ins;
  bad.insert_columns = {"o_w_id", "o_d_id", "o_id"};
  bad.insert_values = {{Value{std::int64_t{1}}, Value{std::int64_t{1}}, Value{std::int64_t{9002}}}};
  auto r = fx.session->execute(bad);
  REQUIRE(!r.ok());
}

TEST_CASE("update with constant, add, and case items") {
  Fixture fx;
  const Key key{1, 1, 2};
  auto before = fx.run(point_read("customer", key));
  const int bal = column_of(before, "c_balance");
  const int cnt = column_of(before, "c_payment_cnt");
  REQUIRE(bal >= 0);
  REQUIRE(cnt >= 0);

  OperationDescriptor up;
  up.kind = OpKind::update_where;
  up.table = "customer";
  up.where = Predicate::key_eq(key);
  up.set_items = {SetItem::set("c_payment_cnt", Value{std::int64_t{55}}),
                  SetItem::add("c_balance", 10.0)};
  auto res = fx.run(up);
  REQUIRE(res.affected == 1);

  auto after = fx.run(point_read("customer", key));
  REQUIRE(std::get<std::int64_t>(after.rows[0][static_cast<std::size_t>(cnt)]) == 55);
  const Value& b0 = before.rows[0][static_cast<std::size_t>(bal)];
  const Value& b1 = after.rows[0][static_cast<std::size_t>(bal)];
  if (is_null(b0)) {
    // NULL + delta stays NULL, SQL style.
    REQUIRE(is_null(b1));
  } else {
    REQUIRE(std::get<double>(b1) ==
            doctest::Approx(std::get<double>(b0) + 10.0).epsilon(1e-12));
  }
}

TEST_CASE("update where-range touches exactly the keys in range") {
  Fixture fx;
  OperationDescriptor up;
  up.kind = OpKind::update_where;
  up.table = "stock";
  up.where = Predicate::key_between({1, 5}, {1, 9});
  up.set_items = {SetItem::add("s_ytd", 1.0)};
  auto res = fx.run(up);
  REQUIRE(res.affected == 5);
}

TEST_CASE("delete removes rows and point reads go missing") {
  Fixture fx;
  OperationDescriptor del;
  del.kind = OpKind::delete_where;
  del.table = "new_order";
  del.where = Predicate::key_eq({1, 1, 5});
  const auto had = fx.run(point_read("new_order", {1, 1, 5})).affected;
  auto res = fx.run(del);
  REQUIRE(res.affected == had);
  REQUIRE(fx.run(point_read("new_order", {1, 1, 5})).affected == 0);
  // Deleting again is a no-op, not an error.
  REQUIRE(fx.run(del).affected == 0);
}

TEST_CASE("schema evolution: add, read defaults, drop, re-add") {
  Fixture fx;
  OperationDescriptor add;
  add.kind = OpKind::add_column;
  add.table = "customer";
  add.column = Column{"tier_x", ColumnType::integer, false, Value{std::int64_t{7}}, 0};
  fx.run(add);

  auto read = fx.run(point_read("customer", {1, 1, 1}));
  const int tier = column_of(read, "tier_x");
  REQUIRE(tier >= 0);
  REQUIRE(std::get<std::int64_t>(read.rows[0][static_cast<std::size_t>(tier)]) == 7);

  auto dup = fx.session->execute(add);
  REQUIRE(!dup.ok());
  REQUIRE(dup.error().cls == ErrorClass::conflict);

  OperationDescriptor nodefault;
  nodefault.kind = OpKind::add_column;
  nodefault.table = "customer";
  nodefault.column = Column{"tier_y", ColumnType::integer, false, Value{}, 0};
  auto nd = fx.session->execute(nodefault);
  REQUIRE(!nd.ok());
  REQUIRE(nd.error().cls == ErrorClass::unsupported_operation);

  OperationDescriptor drop;
  drop.kind = OpKind::drop_column;
  drop.table = "customer";
  drop.column_name = "tier_x";
  fx.run(drop);
  REQUIRE(column_of(fx.run(point_read("customer", {1, 1, 1})), "tier_x") == -1);

  OperationDescriptor droppk;
  droppk.kind = OpKind::drop_column;
  droppk.table = "customer";
  droppk.column_name = "c_id";
  auto dp = fx.session->execute(droppk);
  REQUIRE(!dp.ok());
  REQUIRE(dp.error().cls == ErrorClass::unsupported_operation);

  // Same name can come back after a drop.
  add.column.default_value = Value{std::int64_t{9}};
  fx.run(add);
  auto again = fx.run(point_read("customer", {1, 1, 1}));
  const int tier2 = column_of(again, "tier_x");
  REQUIRE(tier2 >= 0);
  REQUIRE(std::get<std::int64_t>(again.rows[0][static_cast<std::size_t>(tier2)]) == 9);
}

TEST_CASE("case backfill splits customers by balance thresholds") {
  Fixture fx;
  OperationDescriptor add;
  add.kind = OpKind::add_column;
  add.table = "customer";
  add.column = Column{"tier_z", ColumnType::integer, false, Value{std::int64_t{0}}, 0};
  fx.run(add);

  OperationDescriptor up;
  up.kind = OpKind::update_where;
  up.table = "customer";
  up.where = Predicate::all();
  up.set_items = {SetItem::case_of("tier_z", "c_balance", {0.0, 2000.0},
                                   {Value{std::int64_t{0}}, Value{std::int64_t{1}},
                                    Value{std::int64_t{2}}})};
  fx.run(up);

  // Every customer must land in the bucket its balance dictates; null
  // balances take the ELSE arm.
  auto all = fx.run(range_read("customer", {1, 1, 1}, 1000));
  const int bal = column_of(all, "c_balance");
  const int tier = column_of(all, "tier_z");
  for (const auto& row : all.rows) {
    const Value& b = row[static_cast<std::size_t>(bal)];
    const std::int64_t t = std::get<std::int64_t>(row[static_cast<std::size_t>(tier)]);
    if (is_null(b)) {
      REQUIRE(t == 2);
    } else {
      const double d = std::get<double>(b);
      REQUIRE(t == (d < 0.0 ? 0 : d < 2000.0 ? 1 : 2));
    }
  }
}

// Brute-force oracle for single-table aggregates, written independently of
// the interpreter: materialize rows via range_read, then fold by hand.
namespace {

struct OracleAgg {
  bool has = false;
  double sum = 0;
  double mn = 0, mx = 0;
  std::int64_t count = 0;

  void feed(const Value& v) {
    auto n = numeric_value(v);
    if (!n) return;
    if (!has) {
      mn = mx = *n;
      has = true;
    } else {
      mn = std::min(mn, *n);
      mx = std::max(mx, *n);
    }
    sum += *n;
    ++count;
  }
};

}  // namespace

TEST_CASE("single-table aggregates match a brute-force oracle") {
  Fixture fx;
  auto all = fx.run(range_read("customer", {1, 1, 1}, 100000));
  const int credit = column_of(all, "c_credit");
  const int bal = column_of(all, "c_balance");
  const int ytd = column_of(all, "c_ytd_payment");

  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    OperationDescriptor op;
    op.kind = OpKind::aggregate;
    op.table = "customer";
    op.agg.table = "customer";
    const bool grouped = rng.chance(0.5);
    if (grouped) op.agg.group_by = {ColumnRef::named("c_credit")};
    const bool filtered = rng.chance(0.5);
    if (filtered) op.agg.where = Predicate::not_null_p("c_balance");
    const std::string value_col = rng.chance(0.5) ? "c_balance" : "c_ytd_payment";
    const int vslot = value_col == "c_balance" ? bal : ytd;
    op.agg.aggs = {{AggFn::count, {}, {}, "n"},
                   {AggFn::sum, ColumnRef::named(value_col), {}, "s"},
                   {AggFn::avg, ColumnRef::named(value_col), {}, "a"},
                   {AggFn::min, ColumnRef::named(value_col), {}, "lo"},
                   {AggFn::max, ColumnRef::named(value_col), {}, "hi"},
                   {AggFn::spread, ColumnRef::named(value_col), {}, "w"},
                   {AggFn::count_where, {}, Predicate::null("c_balance"), "nulls"}};

    // Oracle fold in group-key order.
    std::map<std::string, std::pair<std::int64_t, OracleAgg>> groups;
    std::map<std::string, std::int64_t> null_counts;
    for (const auto& row : all.rows) {
      if (filtered && is_null(row[static_cast<std::size_t>(bal)])) continue;
      const std::string gk =
          grouped ? std::get<std::string>(row[static_cast<std::size_t>(credit)]) : "";
      auto& [cnt, acc] = groups[gk];
      cnt += 1;
      acc.feed(row[static_cast<std::size_t>(vslot)]);
      if (is_null(row[static_cast<std::size_t>(bal)])) null_counts[gk] += 1;
    }
    if (!grouped && groups.empty()) groups[""] = {0, {}};

    auto res = fx.run(op);
    REQUIRE(res.rows.size() == groups.size());
    std::size_t i = 0;
    const std::size_t base = grouped ? 1 : 0;
    for (const auto& [gk, st] : groups) {
      const auto& row = res.rows[i++];
      if (grouped) REQUIRE(std::get<std::string>(row[0]) == gk);
      REQUIRE(std::get<std::int64_t>(row[base + 0]) == st.first);
      if (st.second.count == 0) {
        REQUIRE(is_null(row[base + 1]));  // sum of nothing is NULL
        REQUIRE(is_null(row[base + 2]));
        REQUIRE(is_null(row[base + 3]));
        REQUIRE(is_null(row[base + 4]));
        REQUIRE(is_null(row[base + 5]));
      } else {
        REQUIRE(std::get<double>(row[base + 1]) == doctest::Approx(st.second.sum).epsilon(1e-9));
        REQUIRE(std::get<double>(row[base + 2]) ==
                doctest::Approx(st.second.sum / static_cast<double>(st.second.count))
                    .epsilon(1e-9));
        REQUIRE(std::get<double>(row[base + 3]) == doctest::Approx(st.second.mn).epsilon(1e-9));
        REQUIRE(std::get<double>(row[base + 4]) == doctest::Approx(st.second.mx).epsilon(1e-9));
        REQUIRE(std::get<double>(row[base + 5]) ==
                doctest::Approx(st.second.mx - st.second.mn).epsilon(1e-9));
      }
      const auto nit = null_counts.find(gk);
      REQUIRE(std::get<std::int64_t>(row[base + 6]) ==
              (nit == null_counts.end() ? 0 : nit->second));
    }
  }
}

TEST_CASE("join aggregate matches a nested-loop oracle") {
  Fixture fx;
  auto orders = fx.run(range_read("orders", {1, 1, 1}, 100000));
  auto lines = fx.run(range_read("order_line", {1, 1, 1, 1}, 100000));
  const int ow = column_of(orders, "o_w_id");
  const int od = column_of(orders, "o_d_id");
  const int oid = column_of(orders, "o_id");
  const int lw = column_of(lines, "ol_w_id");
  const int ld = column_of(lines, "ol_d_id");
  const int lo = column_of(lines, "ol_o_id");
  const int amt = column_of(lines, "ol_amount");

  OperationDescriptor op;
  op.kind = OpKind::aggregate;
  op.table = "orders";
  op.agg.table = "orders";
  op.agg.join = JoinSpec{"order_line",
                         {{"o_w_id", "ol_w_id"}, {"o_d_id", "ol_d_id"}, {"o_id", "ol_o_id"}}};
  op.agg.group_by = {ColumnRef::named("o_d_id")};
  op.agg.aggs = {{AggFn::count, {}, {}, "n"},
                 {AggFn::sum, ColumnRef::named("ol_amount"), {}, "total"}};
  auto res = fx.run(op);

  std::map<std::int64_t, std::pair<std::int64_t, double>> oracle;
  for (const auto& orow : orders.rows) {
    for (const auto& lrow : lines.rows) {
      if (std::get<std::int64_t>(orow[static_cast<std::size_t>(ow)]) !=
              std::get<std::int64_t>(lrow[static_cast<std::size_t>(lw)]) ||
          std::get<std::int64_t>(orow[static_cast<std::size_t>(od)]) !=
              std::get<std::int64_t>(lrow[static_cast<std::size_t>(ld)]) ||
          std::get<std::int64_t>(orow[static_cast<std::size_t>(oid)]) !=
              std::get<std::int64_t>(lrow[static_cast<std::size_t>(lo)]))
        continue;
      auto& [n, total] = oracle[std::get<std::int64_t>(orow[static_cast<std::size_t>(od)])];
      n += 1;
      total += std::get<double>(lrow[static_cast<std::size_t>(amt)]);
    }
  }
  REQUIRE(res.rows.size() == oracle.size());
  std::size_t i = 0;
  for (const auto& [d, st] : oracle) {
    REQUIRE(std::get<std::int64_t>(res.rows[i][0]) == d);
    REQUIRE(std::get<std::int64_t>(res.rows[i][1]) == st.first);
    REQUIRE(std::get<double>(res.rows[i][2]) == doctest::Approx(st.second).epsilon(1e-9));
    ++i;
  }
}

TEST_CASE("having filters groups against constants and group columns") {
  Fixture fx;
  // Pristine data: every order has exactly ol-multiplier lines, so
  // count <> o_ol_cnt yields nothing.
  OperationDescriptor op;
  op.kind = OpKind::aggregate;
  op.table = "orders";
  op.agg.table = "orders";
  op.agg.join = JoinSpec{"order_line",
                         {{"o_w_id", "ol_w_id"}, {"o_d_id", "ol_d_id"}, {"o_id", "ol_o_id"}}};
  op.agg.group_by = {ColumnRef::named("o_w_id"), ColumnRef::named("o_d_id"),
                     ColumnRef::named("o_id"), ColumnRef::named("o_ol_cnt")};
  op.agg.aggs = {{AggFn::count, {}, {}, "n"}};
  op.agg.having = Having{0, CmpOp::ne, true, Value{}, "o_ol_cnt"};
  REQUIRE(fx.run(op).rows.empty());

  OperationDescriptor del;
  del.kind = OpKind::delete_where;
  del.table = "order_line";
  del.where = Predicate::key_eq({1, 2, 3, 1});
  REQUIRE(fx.run(del).affected == 1);
  auto res = fx.run(op);
  REQUIRE(res.rows.size() == 1);
  REQUIRE(std::get<std::int64_t>(res.rows[0][0]) == 1);  // o_w_id
  REQUIRE(std::get<std::int64_t>(res.rows[0][1]) == 2);  // o_d_id
  REQUIRE(std::get<std::int64_t>(res.rows[0][2]) == 3);  // o_id
}

TEST_CASE("latest-prefix references resolve to the newest matching column") {
  Fixture fx;
  for (const char* name : {"loyalty_tier_a1", "loyalty_tier_b2"}) {
    OperationDescriptor add;
    add.kind = OpKind::add_column;
    add.table = "customer";
    add.column = Column{name, ColumnType::integer, false, Value{std::int64_t{0}}, 0};
    fx.run(add);
  }
  // Distinguish the two: set the newer one to 1 everywhere.
  OperationDescriptor up;
  up.kind = OpKind::update_where;
  up.table = "customer";
  up.where = Predicate::all();
  up.set_items = {SetItem::set("loyalty_tier_b2", Value{std::int64_t{1}})};
  fx.run(up);

  OperationDescriptor agg;
  agg.kind = OpKind::aggregate;
  agg.table = "customer";
  agg.agg.table = "customer";
  agg.agg.group_by = {ColumnRef::latest("loyalty_tier_")};
  agg.agg.aggs = {{AggFn::count, {}, {}, "n"}};
  auto res = fx.run(agg);
  REQUIRE(res.columns[0] == "loyalty_tier_*");
  REQUIRE(res.rows.size() == 1);  // all rows have value 1 in the newest column
  REQUIRE(std::get<std::int64_t>(res.rows[0][0]) == 1);

  OperationDescriptor missing;
  missing.kind = OpKind::aggregate;
  missing.table = "customer";
  missing.agg.table = "customer";
  missing.agg.group_by = {ColumnRef::latest("no_such_prefix_")};
  missing.agg.aggs = {{AggFn::count, {}, {}, "n"}};
  auto err = fx.session->execute(missing);
  REQUIRE(!err.ok());
  REQUIRE(err.error().cls == ErrorClass::unsupported_operation);
}

TEST_CASE("empty ungrouped aggregate yields one all-null-except-count row") {
  Fixture fx;
  OperationDescriptor op;
  op.kind = OpKind::aggregate;
  op.table = "customer";
  op.agg.table = "customer";
  op.agg.where = Predicate::cmp("c_ytd_payment", CmpOp::lt, Value{-1.0});
  op.agg.aggs = {{AggFn::count, {}, {}, "n"},
                 {AggFn::sum, ColumnRef::named("c_balance"), {}, "s"}};
  auto res = fx.run(op);
  REQUIRE(res.rows.size() == 1);
  REQUIRE(std::get<std::int64_t>(res.rows[0][0]) == 0);
  REQUIRE(is_null(res.rows[0][1]));
}

TEST_CASE("cross-branch aggregate merges labeled per-branch results") {
  Fixture fx;
  auto b2r = fx.backend.create_branch(kRootBranch);
  REQUIRE_MESSAGE(b2r.ok(), err_text(b2r));
  const BranchId b2 = b2r.value();
  auto s2 = fx.backend.connect_branch(b2).take();

  // Differentiate the branches.
  OperationDescriptor del;
  del.kind = OpKind::delete_where;
  del.table = "new_order";
  del.where = Predicate::key_between({1, 1, 1}, {1, 1, 99999});
  REQUIRE_MESSAGE(s2->execute(del).ok(), "delete on second branch");

  OperationDescriptor op;
  op.kind = OpKind::cross_branch_aggregate;
  op.table = "new_order";
  op.agg.table = "new_order";
  op.agg.aggs = {{AggFn::count, {}, {}, "pending"}};
  op.branches = {{fx.branch, "n3"}, {b2, "n7"}};
  auto res = fx.backend.execute_on(fx.branch, op);
  REQUIRE_MESSAGE(res.ok(), err_text(res));
  REQUIRE(res.value().columns.front() == "branch");
  REQUIRE(res.value().rows.size() == 2);
  REQUIRE(std::get<std::string>(res.value().rows[0][0]) == "n3");
  REQUIRE(std::get<std::string>(res.value().rows[1][0]) == "n7");
  const std::int64_t full = std::get<std::int64_t>(res.value().rows[0][1]);
  const std::int64_t empt = std::get<std::int64_t>(res.value().rows[1][1]);
  REQUIRE(full > 0);
  REQUIRE(empt < full);

  // A dead target branch surfaces as not_found with the label in the text.
  op.branches = {{fx.branch, "n3"}, {987654, "gone"}};
  auto bad = fx.backend.execute_on(fx.branch, op);
  REQUIRE(!bad.ok());
  REQUIRE(bad.error().cls == ErrorClass::not_found);
  REQUIRE(bad.error().message.find("gone") != std::string::npos);
}

TEST_CASE("collect-then-apply: update predicates see pre-update state") {
  Fixture fx;
  // Shift every s_quantity down; if the scan observed its own writes the
  // predicate could double-hit rows. Affected must equal the pre-state count.
  OperationDescriptor count;
  count.kind = OpKind::aggregate;
  count.table = "stock";
  count.agg.table = "stock";
  count.agg.where = Predicate::cmp("s_quantity", CmpOp::ge, Value{std::int64_t{0}});
  count.agg.aggs = {{AggFn::count, {}, {}, "n"}};
  const std::int64_t total = std::get<std::int64_t>(fx.run(count).rows[0][0]);

  OperationDescriptor up;
  up.kind = OpKind::update_where;
  up.table = "stock";
  up.where = Predicate::cmp("s_quantity", CmpOp::ge, Value{std::int64_t{0}});
  up.set_items = {SetItem::add("s_quantity", -1.0)};
  REQUIRE(fx.run(up).affected == total);
}

TEST_CASE("session close turns executes into precondition errors") {
  Fixture fx;
  fx.session->close();
  auto r = fx.session->execute(point_read("item", {1}));
  REQUIRE(!r.ok());
  REQUIRE(r.error().cls == ErrorClass::precondition);
}

TEST_SUITE_END();
