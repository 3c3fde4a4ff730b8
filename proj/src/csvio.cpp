// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/csvio.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "branchbench/rng.hpp"

namespace branchbench {

using nlohmann::json;

namespace {

constexpr std::string_view kDatasetSchemaVersion = "branchbench-dataset/1";

json column_to_json(const Column& c) {
  json j{{"name", c.name},
         {"type", std::string(column_type_name(c.type))},
         {"nullable", c.nullable}};
  if (c.type == ColumnType::text) j["text_length"] = c.text_length;
  if (!is_null(c.default_value)) j["default"] = value_to_text(c.default_value);
  return j;
}

Result<Column> column_from_json(const json& j) {
  Column c;
  c.name = j.at("name").get<std::string>();
  const auto t = column_type_from_name(j.at("type").get<std::string>());
  if (!t) return make_error(ErrorClass::io, "unknown column type in manifest");
  c.type = *t;
  c.nullable = j.value("nullable", false);
  c.text_length = j.value("text_length", 0u);
  return c;
}

json schema_to_json(const TableSchema& t) {
  json cols = json::array();
  for (const auto& c : t.columns) cols.push_back(column_to_json(c));
  json fks = json::array();
  for (const auto& fk : t.foreign_keys)
    fks.push_back(json{{"columns", fk.columns},
                       {"ref_table", fk.ref_table},
                       {"ref_columns", fk.ref_columns}});
  return json{{"name", t.name},
              {"columns", std::move(cols)},
              {"primary_key", t.primary_key},
              {"foreign_keys", std::move(fks)}};
}

Result<TableSchema> schema_from_json(const json& j) {
  TableSchema t;
  t.name = j.at("name").get<std::string>();
  for (const auto& cj : j.at("columns")) {
    auto c = column_from_json(cj);
    if (!c) return c.take_error();
    t.columns.push_back(c.take());
  }
  t.primary_key = j.at("primary_key").get<std::vector<std::string>>();
  for (const auto& fj : j.value("foreign_keys", json::array())) {
    ForeignKey fk;
    fk.columns = fj.at("columns").get<std::vector<std::string>>();
    fk.ref_table = fj.at("ref_table").get<std::string>();
    fk.ref_columns = fj.at("ref_columns").get<std::vector<std::string>>();
    t.foreign_keys.push_back(std::move(fk));
  }
  return t;
}

Result<Value> parse_field(const Column& col, std::string_view raw, bool quoted) {
  if (!quoted && raw == "\\N") {
    if (!col.nullable)
      return make_error(ErrorClass::io,
                        fmt::format("null in non-nullable column {}", col.name));
    return Value{};
  }
  switch (col.type) {
    case ColumnType::integer:
    case ColumnType::timestamp: {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc{} || p != raw.data() + raw.size())
        return make_error(ErrorClass::io, fmt::format("bad integer '{}' in {}", raw, col.name));
      return Value{v};
    }
    case ColumnType::decimal: {
      // std::from_chars for double is available on this toolchain.
      double v = 0;
      auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc{} || p != raw.data() + raw.size())
        return make_error(ErrorClass::io, fmt::format("bad decimal '{}' in {}", raw, col.name));
      return Value{v};
    }
    case ColumnType::boolean:
      if (raw == "true") return Value{true};
      if (raw == "false") return Value{false};
      return make_error(ErrorClass::io, fmt::format("bad boolean '{}' in {}", raw, col.name));
    case ColumnType::text:
      return Value{std::string(raw)};
  }
  return make_error(ErrorClass::io, "unreachable column type");
}

// Splits one CSV record; returns fields plus quoted-ness. Handles quoted
// fields with doubled quotes. Newlines inside quotes are not needed by our
// own output (generated text has no newlines) but are accepted.
struct CsvReader {
  std::string_view data;
  std::size_t pos = 0;

  bool done() const { return pos >= data.size(); }

  bool next_record(std::vector<std::pair<std::string, bool>>& out) {
    out.clear();
    if (done()) return false;
    std::string field;
    bool quoted = false;
    bool in_quotes = false;
    while (pos < data.size()) {
      const char ch = data[pos];
      if (in_quotes) {
        if (ch == '"') {
          if (pos + 1 < data.size() && data[pos + 1] == '"') {
            field += '"';
            ++pos;
          } else {
            in_quotes = false;
          }
        } else {
          field += ch;
        }
        ++pos;
        continue;
      }
      if (ch == '"' && field.empty()) {
        in_quotes = true;
        quoted = true;
        ++pos;
        continue;
      }
      if (ch == ',') {
        out.emplace_back(std::move(field), quoted);
        field.clear();
        quoted = false;
        ++pos;
        continue;
      }
      if (ch == '\n' || ch == '\r') {
        if (ch == '\r' && pos + 1 < data.size() && data[pos + 1] == '\n') ++pos;
        ++pos;
        out.emplace_back(std::move(field), quoted);
        return true;
      }
      field += ch;
      ++pos;
    }
    out.emplace_back(std::move(field), quoted);
    return true;
  }
};

}  // namespace

std::string table_to_csv(const TableData& td) {
  std::string out;
  for (std::size_t i = 0; i < td.schema.columns.size(); ++i) {
    if (i) out += ',';
    out += td.schema.columns[i].name;
  }
  out += '\n';
  for (const auto& [k, r] : td.rows) {
    (void)k;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += csv_field(r[i]);
    }
    out += '\n';
  }
  return out;
}

Result<TableData> table_from_csv(const TableSchema& schema, std::string_view csv) {
  TableData td;
  td.schema = schema;
  CsvReader reader{csv};
  std::vector<std::pair<std::string, bool>> fields;
  if (!reader.next_record(fields))
    return make_error(ErrorClass::io, fmt::format("{}: empty csv", schema.name));
  if (fields.size() != schema.columns.size())
    return make_error(ErrorClass::io, fmt::format("{}: header width mismatch", schema.name));
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].first != schema.columns[i].name)
      return make_error(ErrorClass::io,
                        fmt::format("{}: header column {} is '{}', expected '{}'", schema.name,
                                    i, fields[i].first, schema.columns[i].name));
  while (reader.next_record(fields)) {
    if (fields.size() == 1 && fields[0].first.empty() && !fields[0].second) continue;
    if (fields.size() != schema.columns.size())
      return make_error(ErrorClass::io, fmt::format("{}: row width mismatch", schema.name));
    Row row;
    row.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      auto v = parse_field(schema.columns[i], fields[i].first, fields[i].second);
      if (!v) return v.take_error();
      row.push_back(v.take());
    }
    Key key = key_of_row(schema, row);
    td.rows.emplace_back(std::move(key), std::move(row));
  }
  return td;
}

std::uint64_t table_digest(const TableData& td) {
  std::uint64_t h = mix64(0x7AB1Eull);
  for (unsigned char c : td.schema.name) h = mix64(h ^ c);
  for (const auto& [k, r] : td.rows) {
    for (std::int64_t part : k) h = mix64(h ^ static_cast<std::uint64_t>(part));
    for (const auto& v : r) {
      const std::string text = is_null(v) ? "\\N" : value_to_text(v);
      for (unsigned char c : text) h = mix64(h ^ c);
      h = mix64(h ^ 0x1F);
    }
  }
  return h;
}

Result<void> export_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return make_error(ErrorClass::io, fmt::format("mkdir {}: {}", dir.string(), ec.message()));

  json tables = json::array();
  for (const auto& td : ds.tables) {
    const auto path = dir / (td.schema.name + ".csv");
    std::ofstream f(path, std::ios::binary);
    if (!f) return make_error(ErrorClass::io, fmt::format("cannot open {}", path.string()));
    f << table_to_csv(td);
    if (!f) return make_error(ErrorClass::io, fmt::format("write failed: {}", path.string()));
    json tj = schema_to_json(td.schema);
    tj["rows"] = td.rows.size();
    tj["data_bytes"] = td.data_bytes();
    tj["digest"] = fmt::format("{:016x}", table_digest(td));
    tj["file"] = td.schema.name + ".csv";
    tables.push_back(std::move(tj));
  }

  json manifest{
      {"schema_version", std::string(kDatasetSchemaVersion)},
      {"seed", ds.config.seed},
      {"warehouses", ds.config.warehouses},
      {"multipliers",
       {{"districts_per_warehouse", ds.config.m.districts_per_warehouse},
        {"customers_per_district", ds.config.m.customers_per_district},
        {"orders_per_district", ds.config.m.orders_per_district},
        {"order_lines_per_order", ds.config.m.order_lines_per_order},
        {"new_orders_per_district", ds.config.m.new_orders_per_district},
        {"stock_per_warehouse", ds.config.m.stock_per_warehouse},
        {"items", ds.config.m.items},
        {"regions", ds.config.m.regions},
        {"nations", ds.config.m.nations},
        {"suppliers", ds.config.m.suppliers}}},
      {"total_rows", ds.row_count()},
      {"total_data_bytes", ds.data_bytes()},
      {"tables", std::move(tables)},
  };

  const auto mpath = dir / "manifest.json";
  std::ofstream mf(mpath, std::ios::binary);
  if (!mf) return make_error(ErrorClass::io, fmt::format("cannot open {}", mpath.string()));
  mf << manifest.dump(2) << '\n';
  if (!mf) return make_error(ErrorClass::io, fmt::format("write failed: {}", mpath.string()));
  return {};
}

Result<Dataset> import_dataset(const std::filesystem::path& dir) {
  const auto mpath = dir / "manifest.json";
  std::ifstream mf(mpath, std::ios::binary);
  if (!mf) return make_error(ErrorClass::io, fmt::format("cannot open {}", mpath.string()));
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    return make_error(ErrorClass::io, fmt::format("bad manifest: {}", e.what()));
  }
  if (manifest.value("schema_version", "") != kDatasetSchemaVersion)
    return make_error(ErrorClass::io, "unsupported dataset schema_version");

  Dataset ds;
  ds.config.seed = manifest.value("seed", 0ull);
  ds.config.warehouses = manifest.value("warehouses", 1u);
  const auto& m = manifest.at("multipliers");
  ds.config.m.districts_per_warehouse = m.value("districts_per_warehouse", 10u);
  ds.config.m.customers_per_district = m.value("customers_per_district", 30u);
  ds.config.m.orders_per_district = m.value("orders_per_district", 30u);
  ds.config.m.order_lines_per_order = m.value("order_lines_per_order", 10u);
  ds.config.m.new_orders_per_district = m.value("new_orders_per_district", 10u);
  ds.config.m.stock_per_warehouse = m.value("stock_per_warehouse", 1000u);
  ds.config.m.items = m.value("items", 1000u);
  ds.config.m.regions = m.value("regions", 5u);
  ds.config.m.nations = m.value("nations", 10u);
  ds.config.m.suppliers = m.value("suppliers", 20u);

  for (const auto& tj : manifest.at("tables")) {
    auto schema = schema_from_json(tj);
    if (!schema) return schema.take_error();
    const auto path = dir / tj.value("file", schema.value().name + ".csv");
    std::ifstream f(path, std::ios::binary);
    if (!f) return make_error(ErrorClass::io, fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << f.rdbuf();
    auto td = table_from_csv(schema.value(), buf.str());
    if (!td) return td.take_error();
    if (tj.contains("digest")) {
      const auto want = tj["digest"].get<std::string>();
      const auto got = fmt::format("{:016x}", table_digest(td.value()));
      if (want != got)
        return make_error(ErrorClass::io,
                          fmt::format("{}: digest mismatch (manifest {}, data {})",
                                      schema.value().name, want, got));
    }
    ds.tables.push_back(td.take());
  }
  return ds;
}

}  // namespace branchbench
