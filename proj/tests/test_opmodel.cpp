// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "branchbench/opmodel.hpp"
#include "branchbench/rng.hpp"
#include "branchbench/sqlrender.hpp"
#include "test_util.hpp"

using namespace branchbench;

TEST_SUITE_BEGIN("opmodel");

TEST_CASE("op ids round-trip through the packed layout") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto worker = static_cast<std::uint32_t>(rng.uniform(1u << 16));
    const auto step = static_cast<std::uint32_t>(rng.uniform(1u << 24));
    const auto phase = static_cast<OpPhase>(rng.uniform(5));
    const auto ordinal = static_cast<std::uint32_t>(rng.uniform(1u << 20));
    const std::uint64_t id = pack_op_id(worker, step, phase, ordinal);
    const OpIdParts p = unpack_op_id(id);
    REQUIRE(p.worker == worker);
    REQUIRE(p.step == step);
    REQUIRE(p.phase == phase);
    REQUIRE(p.ordinal == ordinal);
  }
}

TEST_CASE("op id suffixes are hex and collision-free across a step grid") {
  std::set<std::string> seen;
  for (std::uint32_t w = 0; w < 8; ++w)
    for (std::uint32_t s = 0; s < 8; ++s)
      for (std::uint32_t o = 0; o < 8; ++o) {
        const std::string sfx = op_id_suffix(pack_op_id(w, s, OpPhase::mutate, o));
        REQUIRE(!sfx.empty());
        for (char c : sfx) REQUIRE(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
        REQUIRE(seen.insert(sfx).second);
      }
}

TEST_CASE("predicate factories fill the right variant") {
  const auto pk = Predicate::key_eq({1, 2, 3});
  REQUIRE(pk.kind == Predicate::Kind::key_equals);
  REQUIRE(pk.key == Key{1, 2, 3});

  const auto pr = Predicate::key_between({1}, {9});
  REQUIRE(pr.kind == Predicate::Kind::key_range);
  REQUIRE(pr.lo == Key{1});
  REQUIRE(pr.hi == Key{9});

  const auto pn = Predicate::null("c_balance");
  REQUIRE(pn.kind == Predicate::Kind::is_null);
  REQUIRE(pn.column == "c_balance");

  const auto pc = Predicate::cmp("s_quantity", CmpOp::lt, Value{std::int64_t{10}});
  REQUIRE(pc.kind == Predicate::Kind::compare);
  REQUIRE(pc.op == CmpOp::lt);
}

TEST_CASE("descriptor json is parseable and carries provenance") {
  OperationDescriptor op;
  op.kind = OpKind::update_where;
  op.op_id = pack_op_id(3, 14, OpPhase::mutate, 2);
  op.provenance = {"software_dev", 3, 14, OpPhase::mutate, 2};
  op.table = "customer";
  op.set_items.push_back(SetItem::add("c_balance", 12.5));
  op.where = Predicate::key_between({1, 1, 1}, {1, 1, 30});

  const auto j = nlohmann::json::parse(descriptor_to_json(op));
  REQUIRE(j.at("kind").get<std::string>() == "update_where");
  REQUIRE(j.at("table").get<std::string>() == "customer");
  REQUIRE(j.at("provenance").at("workflow").get<std::string>() == "software_dev");
  REQUIRE(j.at("provenance").at("step").get<int>() == 14);
  REQUIRE(j.at("set").size() == 1);
  REQUIRE(descriptor_to_json(op).find('\n') == std::string::npos);
}

TEST_CASE("result text is stable and null-aware") {
  OpResult r;
  r.affected = 2;
  r.columns = {"a", "b"};
  r.rows = {{Value{std::int64_t{1}}, Value{}}, {Value{2.5}, Value{std::string{"x,y"}}}};
  const std::string t = result_to_text(r);
  REQUIRE(t.find("affected=2") != std::string::npos);
  REQUIRE(t.find("\\N") != std::string::npos);
  REQUIRE(t.find("\"x,y\"") != std::string::npos);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("sqlrender");

namespace {

OperationDescriptor base_op(OpKind kind, std::string table) {
  OperationDescriptor op;
  op.kind = kind;
  op.table = std::move(table);
  return op;
}

}  // namespace

TEST_CASE("ddl statements") {
  auto op = base_op(OpKind::add_column, "customer");
  op.column = Column{"loyalty_tier_ab12", ColumnType::integer, false, Value{std::int64_t{0}}, 0};
  auto sql = render_sql(op);
  REQUIRE_MESSAGE(sql.ok(), err_text(sql));
  REQUIRE(sql.value() ==
          "ALTER TABLE customer ADD COLUMN loyalty_tier_ab12 BIGINT DEFAULT 0 NOT NULL");

  op = base_op(OpKind::drop_column, "customer");
  op.column_name = "c_credit";
  REQUIRE(render_sql(op).value() == "ALTER TABLE customer DROP COLUMN c_credit");

  op = base_op(OpKind::create_index, "orders");
  op.index_name = "ix_orders_carrier_77";
  op.index_columns = {"o_w_id", "o_carrier_id"};
  REQUIRE(render_sql(op).value() ==
          "CREATE INDEX ix_orders_carrier_77 ON orders (o_w_id, o_carrier_id)");
}

TEST_CASE("dml statements") {
  auto op = base_op(OpKind::insert_rows, "new_order");
  op.insert_columns = {"no_w_id", "no_d_id", "no_o_id"};
  op.insert_values = {{Value{std::int64_t{1}}, Value{std::int64_t{2}}, Value{std::int64_t{3}}}};
  REQUIRE(render_sql(op).value() ==
          "INSERT INTO new_order (no_w_id, no_d_id, no_o_id) VALUES (1, 2, 3)");

  op = base_op(OpKind::update_where, "customer");
  op.set_items = {SetItem::set("c_credit", Value{std::string{"BC"}}),
                  SetItem::add("c_balance", -2.5)};
  op.where = Predicate::key_eq({1, 4, 9});
  REQUIRE(render_sql(op).value() ==
          "UPDATE customer SET c_credit = 'BC', c_balance = c_balance + -2.5 "
          "WHERE c_w_id = 1 AND c_d_id = 4 AND c_id = 9");

  op = base_op(OpKind::update_where, "customer");
  op.set_items = {SetItem::case_of("tier", "c_balance", {1500.0, 3000.0},
                                   {Value{std::int64_t{0}}, Value{std::int64_t{1}},
                                    Value{std::int64_t{2}}})};
  op.where = Predicate::all();
  const std::string cs = render_sql(op).value();
  REQUIRE(cs ==
          "UPDATE customer SET tier = CASE WHEN c_balance < 1500 THEN 0 WHEN c_balance < 3000 "
          "THEN 1 ELSE 2 END");

  op = base_op(OpKind::delete_where, "new_order");
  op.where = Predicate::key_between({1, 1, 1}, {1, 1, 5});
  REQUIRE(render_sql(op).value() ==
          "DELETE FROM new_order WHERE (no_w_id, no_d_id, no_o_id) >= (1, 1, 1) AND "
          "(no_w_id, no_d_id, no_o_id) <= (1, 1, 5)");
}

TEST_CASE("read statements") {
  auto op = base_op(OpKind::point_read, "item");
  op.key = {42};
  REQUIRE(render_sql(op).value() == "SELECT * FROM item WHERE i_id = 42");

  op = base_op(OpKind::range_read, "orders");
  op.lo = {1, 2, 10};
  op.limit = 20;
  REQUIRE(render_sql(op).value() ==
          "SELECT * FROM orders WHERE (o_w_id, o_d_id, o_id) >= (1, 2, 10) "
          "ORDER BY o_w_id, o_d_id, o_id LIMIT 20");
}

TEST_CASE("aggregate statements") {
  auto op = base_op(OpKind::aggregate, "customer");
  op.agg.table = "customer";
  op.agg.where = Predicate::not_null_p("c_balance");
  op.agg.group_by = {ColumnRef::named("c_credit")};
  op.agg.aggs = {{AggFn::count, {}, {}, "n"},
                 {AggFn::avg, ColumnRef::named("c_balance"), {}, "avg_bal"},
                 {AggFn::count_where, {}, Predicate::null("c_balance"), "nulls"}};
  const std::string sql = render_sql(op).value();
  REQUIRE(sql ==
          "SELECT c_credit, COUNT(*) AS n, AVG(c_balance) AS avg_bal, COUNT(*) FILTER (WHERE "
          "c_balance IS NULL) AS nulls FROM customer WHERE c_balance IS NOT NULL GROUP BY "
          "c_credit ORDER BY c_credit");

  auto join = base_op(OpKind::aggregate, "orders");
  join.agg.table = "orders";
  join.agg.join = JoinSpec{"order_line",
                           {{"o_w_id", "ol_w_id"}, {"o_d_id", "ol_d_id"}, {"o_id", "ol_o_id"}}};
  join.agg.group_by = {ColumnRef::named("o_w_id")};
  join.agg.aggs = {{AggFn::sum, ColumnRef::named("ol_amount"), {}, "total"}};
  join.agg.having = Having{0, CmpOp::gt, false, Value{1000.0}, ""};
  const std::string js = render_sql(join).value();
  REQUIRE(js ==
          "SELECT o_w_id, SUM(ol_amount) AS total FROM orders JOIN order_line ON "
          "orders.o_w_id = order_line.ol_w_id AND orders.o_d_id = order_line.ol_d_id AND "
          "orders.o_id = order_line.ol_o_id GROUP BY o_w_id HAVING SUM(ol_amount) > 1000 "
          "ORDER BY o_w_id");
}

TEST_CASE("spread and having-vs-column forms") {
  auto op = base_op(OpKind::aggregate, "customer");
  op.agg.table = "customer";
  op.agg.aggs = {{AggFn::spread, ColumnRef::named("c_ytd_payment"), {}, "spread_pay"}};
  REQUIRE(render_sql(op).value() ==
          "SELECT (MAX(c_ytd_payment) - MIN(c_ytd_payment)) AS spread_pay FROM customer");

  auto hv = base_op(OpKind::aggregate, "orders");
  hv.agg.table = "orders";
  hv.agg.group_by = {ColumnRef::named("o_w_id"), ColumnRef::named("o_ol_cnt")};
  hv.agg.aggs = {{AggFn::count, {}, {}, "n"}};
  hv.agg.having = Having{0, CmpOp::ne, true, Value{}, "o_ol_cnt"};
  REQUIRE(render_sql(hv).value() ==
          "SELECT o_w_id, o_ol_cnt, COUNT(*) AS n FROM orders GROUP BY o_w_id, o_ol_cnt "
          "HAVING COUNT(*) <> o_ol_cnt ORDER BY o_w_id, o_ol_cnt");
}

TEST_CASE("unrenderable forms are rejected") {
  auto op = base_op(OpKind::cross_branch_aggregate, "customer");
  auto r = render_sql(op);
  REQUIRE(!r.ok());
  REQUIRE(r.error().cls == ErrorClass::unsupported_operation);

  auto latest = base_op(OpKind::aggregate, "customer");
  latest.agg.table = "customer";
  latest.agg.group_by = {ColumnRef::latest("loyalty_tier_")};
  latest.agg.aggs = {{AggFn::count, {}, {}, "n"}};
  auto lr = render_sql(latest);
  REQUIRE(!lr.ok());
  REQUIRE(lr.error().cls == ErrorClass::unsupported_operation);
}

TEST_CASE("create table and bulk insert ddl") {
  const auto& tables = ch_schema();
  const TableSchema* item = nullptr;
  for (const auto& t : tables)
    if (t.name == "item") item = &t;
  REQUIRE(item != nullptr);
  const std::string ddl = render_create_table(*item);
  REQUIRE(ddl.find("CREATE TABLE item (") == 0);
  REQUIRE(ddl.find("i_id BIGINT NOT NULL") != std::string::npos);
  REQUIRE(ddl.find("PRIMARY KEY (i_id)") != std::string::npos);

  std::vector<std::pair<Key, Row>> rows = {
      {{1}, {Value{std::int64_t{1}}, Value{std::string{"thing"}}, Value{9.99}}},
      {{2}, {Value{std::int64_t{2}}, Value{std::string{"it's"}}, Value{1.5}}},
  };
  const std::string ins = render_insert(*item, rows, 0, rows.size());
  REQUIRE(ins.find("INSERT INTO item") == 0);
  REQUIRE(ins.find("'it''s'") != std::string::npos);
}

TEST_SUITE_END();
