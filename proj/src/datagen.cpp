// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/datagen.hpp"

#include <fmt/format.h>

#include <cstddef>

#include "branchbench/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace branchbench {

std::uint64_t TableData::data_bytes() const {
  std::uint64_t n = 0;
  for (const auto& [k, r] : rows) n += key_bytes(k) + row_bytes(r);
  return n;
}

const TableData* Dataset::table(std::string_view name) const {
  for (const auto& t : tables)
    if (t.schema.name == name) return &t;
  return nullptr;
}

std::uint64_t Dataset::data_bytes() const {
  std::uint64_t n = 0;
  for (const auto& t : tables) n += t.data_bytes();
  return n;
}

std::uint64_t Dataset::row_count() const {
  std::uint64_t n = 0;
  for (const auto& t : tables) n += t.rows.size();
  return n;
}

Result<void> validate_config(const DataGenConfig& cfg) {
  const auto& m = cfg.m;
  struct Check {
    const char* name;
    std::uint64_t v;
  };
  const Check checks[] = {
      {"warehouses", cfg.warehouses},
      {"districts_per_warehouse", m.districts_per_warehouse},
      {"customers_per_district", m.customers_per_district},
      {"orders_per_district", m.orders_per_district},
      {"order_lines_per_order", m.order_lines_per_order},
      {"new_orders_per_district", m.new_orders_per_district},
      {"stock_per_warehouse", m.stock_per_warehouse},
      {"items", m.items},
      {"regions", m.regions},
      {"nations", m.nations},
      {"suppliers", m.suppliers},
  };
  for (const auto& c : checks)
    if (c.v == 0)
      return make_error(ErrorClass::configuration, fmt::format("{} must be >= 1", c.name));
  if (m.stock_per_warehouse > m.items)
    return make_error(ErrorClass::configuration,
                      "stock_per_warehouse exceeds items (stock would reference missing items)");
  if (m.new_orders_per_district > m.orders_per_district)
    return make_error(ErrorClass::configuration,
                      "new_orders_per_district exceeds orders_per_district");
  return {};
}

namespace {

// Table ids feed the counter hash; stable across runs by construction.
enum TableId : std::uint64_t {
  T_WAREHOUSE = 1,
  T_DISTRICT,
  T_CUSTOMER,
  T_ORDERS,
  T_ORDER_LINE,
  T_NEW_ORDER,
  T_STOCK,
  T_ITEM,
  T_HISTORY,
  T_REGION,
  T_NATION,
  T_SUPPLIER,
};

constexpr std::int64_t kBaseEpoch = 1577836800;  // 2020-01-01T00:00:00Z

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

struct CellGen {
  std::uint64_t seed;
  std::uint64_t table;
  std::uint64_t row;

  std::uint64_t bits(std::uint64_t col) const { return counter_hash(seed, table, row, col); }

  std::int64_t ival(std::uint64_t col, std::int64_t lo, std::int64_t hi) const {
    return lo + static_cast<std::int64_t>(bits(col) % static_cast<std::uint64_t>(hi - lo + 1));
  }

  // Decimal with two fractional digits, exact in binary cents/100 semantics.
  double cents(std::uint64_t col, std::int64_t lo_cents, std::int64_t hi_cents) const {
    return static_cast<double>(ival(col, lo_cents, hi_cents)) / 100.0;
  }

  // Four fractional digits (tax, discount rates).
  double rate(std::uint64_t col, std::int64_t lo_e4, std::int64_t hi_e4) const {
    return static_cast<double>(ival(col, lo_e4, hi_e4)) / 10000.0;
  }

  std::string text(std::uint64_t col, std::uint32_t len) const {
    std::string out;
    out.reserve(len);
    std::uint64_t h = 0;
    for (std::uint32_t j = 0; j < len; ++j) {
      if (j % 8 == 0) h = counter_hash(seed, table, row, col + 0x1000 + j / 8);
      out += kAlphabet[h % 62];
      h /= 62;
    }
    return out;
  }

  std::int64_t stamp(std::uint64_t col) const {
    return kBaseEpoch + ival(col, 0, 100000000);
  }

  bool coin(std::uint64_t col) const { return (bits(col) & 1) != 0; }

  // True for roughly one row in `denom`.
  bool one_in(std::uint64_t col, std::uint64_t denom) const { return bits(col) % denom == 0; }
};

struct GenContext {
  DataGenConfig cfg;
  std::vector<TableSchema> schema;
};

using RowFn = std::pair<Key, Row> (*)(const GenContext&, std::uint64_t);

std::pair<Key, Row> gen_warehouse(const GenContext& g, std::uint64_t i) {
  const std::int64_t w = static_cast<std::int64_t>(i) + 1;
  CellGen c{g.cfg.seed, T_WAREHOUSE, i};
  return {{w},
          {w, c.text(1, 10), c.text(2, 2), c.rate(3, 0, 2000), c.cents(4, 1000000, 50000000)}};
}

std::pair<Key, Row> gen_district(const GenContext& g, std::uint64_t i) {
  const auto dpw = g.cfg.m.districts_per_warehouse;
  const std::int64_t w = static_cast<std::int64_t>(i / dpw) + 1;
  const std::int64_t d = static_cast<std::int64_t>(i % dpw) + 1;
  CellGen c{g.cfg.seed, T_DISTRICT, i};
  return {{w, d},
          {w, d, c.text(2, 10), c.rate(3, 0, 2000), c.cents(4, 100000, 5000000),
           static_cast<std::int64_t>(g.cfg.m.orders_per_district) + 1}};
}

std::pair<Key, Row> gen_customer(const GenContext& g, std::uint64_t i) {
  const auto dpw = g.cfg.m.districts_per_warehouse;
  const auto cpd = g.cfg.m.customers_per_district;
  const std::int64_t w = static_cast<std::int64_t>(i / (static_cast<std::uint64_t>(dpw) * cpd)) + 1;
  const std::int64_t d = static_cast<std::int64_t>((i / cpd) % dpw) + 1;
  const std::int64_t cu = static_cast<std::int64_t>(i % cpd) + 1;
  CellGen c{g.cfg.seed, T_CUSTOMER, i};
  // ~5% null balances (cleaning workflows target these); ~2% payment outliers.
  Value balance = c.one_in(5, 20) ? Value{} : Value{c.cents(6, -50000, 500000)};
  const double ytd =
      c.one_in(7, 50) ? c.cents(8, 5000000, 50000000) : c.cents(8, 0, 600000);
  return {{w, d, cu},
          {w, d, cu, c.text(3, 16), c.text(4, 16), c.one_in(9, 10) ? "BC" : "GC", balance, ytd,
           c.ival(10, 1, 100), c.rate(11, 0, 5000), c.stamp(12)}};
}

std::pair<Key, Row> gen_orders(const GenContext& g, std::uint64_t i) {
  const auto dpw = g.cfg.m.districts_per_warehouse;
  const auto opd = g.cfg.m.orders_per_district;
  const std::int64_t w = static_cast<std::int64_t>(i / (static_cast<std::uint64_t>(dpw) * opd)) + 1;
  const std::int64_t d = static_cast<std::int64_t>((i / opd) % dpw) + 1;
  const std::int64_t o = static_cast<std::int64_t>(i % opd) + 1;
  CellGen c{g.cfg.seed, T_ORDERS, i};
  // The newest new_orders_per_district orders are undelivered: null carrier.
  const bool undelivered =
      o > static_cast<std::int64_t>(opd) - static_cast<std::int64_t>(g.cfg.m.new_orders_per_district);
  Value carrier = undelivered ? Value{} : Value{c.ival(5, 1, 10)};
  return {{w, d, o},
          {w, d, o, c.ival(3, 1, g.cfg.m.customers_per_district), c.stamp(4), carrier,
           static_cast<std::int64_t>(g.cfg.m.order_lines_per_order), c.coin(6)}};
}

std::pair<Key, Row> gen_order_line(const GenContext& g, std::uint64_t i) {
  const auto dpw = g.cfg.m.districts_per_warehouse;
  const auto opd = g.cfg.m.orders_per_district;
  const auto olo = g.cfg.m.order_lines_per_order;
  const std::uint64_t per_d = static_cast<std::uint64_t>(opd) * olo;
  const std::uint64_t per_w = per_d * dpw;
  const std::int64_t w = static_cast<std::int64_t>(i / per_w) + 1;
  const std::int64_t d = static_cast<std::int64_t>((i / per_d) % dpw) + 1;
  const std::int64_t o = static_cast<std::int64_t>((i / olo) % opd) + 1;
  const std::int64_t n = static_cast<std::int64_t>(i % olo) + 1;
  CellGen c{g.cfg.seed, T_ORDER_LINE, i};
  Value delivery = c.one_in(8, 10) ? Value{} : Value{c.stamp(9)};
  return {{w, d, o, n},
          {w, d, o, n, c.ival(4, 1, g.cfg.m.stock_per_warehouse),
           c.ival(5, 1, g.cfg.warehouses), c.ival(6, 1, 10), c.cents(7, 1, 999999), delivery,
           c.text(10, 24)}};
}

std::pair<Key, Row> gen_new_order(const GenContext& g, std::uint64_t i) {
  const auto dpw = g.cfg.m.districts_per_warehouse;
  const auto npd = g.cfg.m.new_orders_per_district;
  const std::int64_t w = static_cast<std::int64_t>(i / (static_cast<std::uint64_t>(dpw) * npd)) + 1;
  const std::int64_t d = static_cast<std::int64_t>((i / npd) % dpw) + 1;
  const std::int64_t o = static_cast<std::int64_t>(g.cfg.m.orders_per_district) -
                         static_cast<std::int64_t>(npd) + static_cast<std::int64_t>(i % npd) + 1;
  return {{w, d, o}, {w, d, o}};
}

std::pair<Key, Row> gen_stock(const GenContext& g, std::uint64_t i) {
  const auto spw = g.cfg.m.stock_per_warehouse;
  const std::int64_t w = static_cast<std::int64_t>(i / spw) + 1;
  const std::int64_t s = static_cast<std::int64_t>(i % spw) + 1;
  CellGen c{g.cfg.seed, T_STOCK, i};
  return {{w, s},
          {w, s, c.ival(2, 10, 100), c.cents(3, 0, 1000000), c.ival(4, 0, 100),
           c.ival(5, 0, 50), c.text(6, 24)}};
}

std::pair<Key, Row> gen_item(const GenContext& g, std::uint64_t i) {
  const std::int64_t id = static_cast<std::int64_t>(i) + 1;
  CellGen c{g.cfg.seed, T_ITEM, i};
  return {{id}, {id, c.ival(1, 1, 10000), c.text(2, 14), c.cents(3, 100, 10000), c.text(4, 26)}};
}

std::pair<Key, Row> gen_history(const GenContext& g, std::uint64_t i) {
  const auto dpw = g.cfg.m.districts_per_warehouse;
  const auto cpd = g.cfg.m.customers_per_district;
  const std::int64_t w = static_cast<std::int64_t>(i / (static_cast<std::uint64_t>(dpw) * cpd)) + 1;
  const std::int64_t d = static_cast<std::int64_t>((i / cpd) % dpw) + 1;
  const std::int64_t cu = static_cast<std::int64_t>(i % cpd) + 1;
  CellGen c{g.cfg.seed, T_HISTORY, i};
  return {{w, d, cu}, {w, d, cu, c.stamp(3), c.cents(4, 100, 500000), c.text(5, 24)}};
}

std::pair<Key, Row> gen_region(const GenContext& g, std::uint64_t i) {
  const std::int64_t id = static_cast<std::int64_t>(i) + 1;
  CellGen c{g.cfg.seed, T_REGION, i};
  return {{id}, {id, c.text(1, 12), c.text(2, 32)}};
}

std::pair<Key, Row> gen_nation(const GenContext& g, std::uint64_t i) {
  const std::int64_t id = static_cast<std::int64_t>(i) + 1;
  CellGen c{g.cfg.seed, T_NATION, i};
  const std::int64_t region = static_cast<std::int64_t>(i % g.cfg.m.regions) + 1;
  return {{id}, {id, c.text(1, 12), region}};
}

std::pair<Key, Row> gen_supplier(const GenContext& g, std::uint64_t i) {
  const std::int64_t id = static_cast<std::int64_t>(i) + 1;
  CellGen c{g.cfg.seed, T_SUPPLIER, i};
  const std::int64_t nation = static_cast<std::int64_t>(i % g.cfg.m.nations) + 1;
  return {{id}, {id, c.text(1, 18), nation, c.cents(3, -99999, 999999)}};
}

struct TableGen {
  const char* name;
  RowFn fn;
};

constexpr TableGen kGenerators[] = {
    {"warehouse", gen_warehouse}, {"district", gen_district},   {"customer", gen_customer},
    {"orders", gen_orders},       {"order_line", gen_order_line}, {"new_order", gen_new_order},
    {"stock", gen_stock},         {"item", gen_item},           {"history", gen_history},
    {"region", gen_region},       {"nation", gen_nation},       {"supplier", gen_supplier},
};

std::uint64_t rows_for(const DataGenConfig& cfg, std::string_view table) {
  const std::uint64_t W = cfg.warehouses;
  const auto& m = cfg.m;
  const std::uint64_t districts = W * m.districts_per_warehouse;
  if (table == "warehouse") return W;
  if (table == "district") return districts;
  if (table == "customer") return districts * m.customers_per_district;
  if (table == "orders") return districts * m.orders_per_district;
  if (table == "order_line")
    return districts * m.orders_per_district * m.order_lines_per_order;
  if (table == "new_order") return districts * m.new_orders_per_district;
  if (table == "stock") return W * m.stock_per_warehouse;
  if (table == "item") return m.items;
  if (table == "history") return districts * m.customers_per_district;
  if (table == "region") return m.regions;
  if (table == "nation") return m.nations;
  if (table == "supplier") return m.suppliers;
  return 0;
}

Result<Dataset> generate_impl(const DataGenConfig& cfg, bool parallel) {
  if (auto v = validate_config(cfg); !v) return v.take_error();

  GenContext g{cfg, ch_schema()};
  Dataset ds;
  ds.config = cfg;
  ds.tables.reserve(g.schema.size());

  for (const auto& schema : g.schema) {
    RowFn fn = nullptr;
    for (const auto& tg : kGenerators)
      if (schema.name == tg.name) fn = tg.fn;
    const std::uint64_t n = rows_for(cfg, schema.name);
    TableData td;
    td.schema = schema;
    td.rows.resize(n);
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        td.rows[static_cast<std::size_t>(i)] = fn(g, static_cast<std::uint64_t>(i));
    } else {
      for (std::uint64_t i = 0; i < n; ++i) td.rows[i] = fn(g, i);
    }
    ds.tables.push_back(std::move(td));
  }
  return ds;
}

}  // namespace

std::uint64_t table_row_count(const DataGenConfig& cfg, std::string_view table) {
  return rows_for(cfg, table);
}

Result<Dataset> generate_dataset(const DataGenConfig& cfg) { return generate_impl(cfg, true); }

Result<Dataset> generate_dataset_serial(const DataGenConfig& cfg) {
  return generate_impl(cfg, false);
}

namespace {

std::uint64_t hash_value(const Value& v) {
  struct V {
    std::uint64_t operator()(std::monostate) const { return 0x90; }
    std::uint64_t operator()(std::int64_t i) const { return mix64(static_cast<std::uint64_t>(i) ^ 0x91); }
    std::uint64_t operator()(double d) const {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(d));
      __builtin_memcpy(&bits, &d, sizeof(bits));
      return mix64(bits ^ 0x92);
    }
    std::uint64_t operator()(const std::string& s) const {
      std::uint64_t h = 0x93;
      for (unsigned char c : s) h = mix64(h ^ c);
      return h;
    }
    std::uint64_t operator()(bool b) const { return b ? 0x95 : 0x94; }
  };
  return std::visit(V{}, v);
}

}  // namespace

std::uint64_t dataset_digest(const Dataset& ds) {
  std::uint64_t h = mix64(0xD16E57ull);
  for (const auto& t : ds.tables) {
    for (unsigned char c : t.schema.name) h = mix64(h ^ c);
    for (const auto& [k, r] : t.rows) {
      for (std::int64_t part : k) h = mix64(h ^ static_cast<std::uint64_t>(part));
      for (const auto& v : r) h = mix64(h ^ hash_value(v));
    }
  }
  return h;
}

}  // namespace branchbench
