// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/fullcopy.hpp"

#include <fmt/format.h>

#include "branchbench/types.hpp"

namespace branchbench {

namespace {

std::uint64_t schema_bytes(const TableSchema& schema) {
  std::uint64_t n = 0;
  for (const auto& col : schema.columns) n += column_meta_bytes(col);
  return n;
}

}  // namespace

// Materialized logical view; rows always carry the full current width.
class FullCopyAccess final : public BranchAccess {
 public:
  FullCopyAccess(FullCopyBackend* backend, FullCopyBackend::BranchData* br)
      : backend_(backend), br_(br) {}

  std::vector<std::string> table_names() const override {
    std::vector<std::string> out;
    out.reserve(br_->tables.size());
    for (const auto& [name, t] : br_->tables) out.push_back(name);
    return out;
  }

  const TableView* table(std::string_view name) const override {
    auto it = br_->tables.find(std::string(name));
    if (it == br_->tables.end()) return nullptr;
    auto [vit, inserted] = views_.try_emplace(it->first, &it->second);
    return &vit->second;
  }

  Result<void> insert_row(std::string_view table, Key key, Row row) override {
    auto* t = find(table);
    if (!t) return no_table(table);
    const std::uint64_t added = row_bytes(row);
    auto [it, inserted] = t->rows.emplace(std::move(key), std::move(row));
    if (!inserted)
      return Error{ErrorClass::conflict,
                   fmt::format("duplicate key {} in '{}'", key_to_text(it->first), table)};
    backend_->note_bytes(*br_, static_cast<std::int64_t>(added));
    return {};
  }

  Result<std::int64_t> update_row(std::string_view table, const Key& key, Row row) override {
    auto* t = find(table);
    if (!t) return no_table(table);
    auto it = t->rows.find(key);
    if (it == t->rows.end()) return 0;
    const std::int64_t delta =
        static_cast<std::int64_t>(row_bytes(row)) - static_cast<std::int64_t>(row_bytes(it->second));
    it->second = std::move(row);
    backend_->note_bytes(*br_, delta);
    return 1;
  }

  Result<std::int64_t> erase_row(std::string_view table, const Key& key) override {
    auto* t = find(table);
    if (!t) return no_table(table);
    auto it = t->rows.find(key);
    if (it == t->rows.end()) return 0;
    const std::uint64_t freed = row_bytes(it->second);
    t->rows.erase(it);
    backend_->note_bytes(*br_, -static_cast<std::int64_t>(freed));
    return 1;
  }

  Result<void> add_column(std::string_view table, const Column& col) override {
    auto* t = find(table);
    if (!t) return no_table(table);
    t->schema.columns.push_back(col);
    std::int64_t delta = static_cast<std::int64_t>(column_meta_bytes(col));
    // Full materialization: every row is widened in place.
    for (auto& [key, row] : t->rows) {
      row.push_back(col.default_value);
      delta += static_cast<std::int64_t>(value_bytes(col.default_value));
    }
    backend_->note_bytes(*br_, delta);
    return {};
  }

  Result<void> drop_column(std::string_view table, std::string_view col) override {
    auto* t = find(table);
    if (!t) return no_table(table);
    const int idx = t->schema.column_index(col);
    if (idx < 0)
      return Error{ErrorClass::unsupported_operation,
                   fmt::format("no column '{}' in '{}'", col, table)};
    std::int64_t delta = -static_cast<std::int64_t>(column_meta_bytes(t->schema.columns[idx]));
    t->schema.columns.erase(t->schema.columns.begin() + idx);
    for (auto& [key, row] : t->rows) {
      delta -= static_cast<std::int64_t>(value_bytes(row[idx]));
      row.erase(row.begin() + idx);
    }
    backend_->note_bytes(*br_, delta);
    return {};
  }

  Result<void> create_index(std::string_view table, std::string_view index_name,
                            const std::vector<std::string>& columns) override {
    auto* t = find(table);
    if (!t) return no_table(table);
    IndexMeta ix{std::string(index_name), columns};
    backend_->note_bytes(*br_, static_cast<std::int64_t>(index_meta_bytes(ix)));
    t->indexes.push_back(std::move(ix));
    return {};
  }

 private:
  class View final : public TableView {
   public:
    explicit View(const FullCopyBackend::Table* t) : t_(t) {}
    const TableSchema& schema() const override { return t_->schema; }
    std::optional<Row> get(const Key& key) const override {
      auto it = t_->rows.find(key);
      if (it == t_->rows.end()) return std::nullopt;
      return it->second;
    }
    void scan(const std::optional<Key>& lo, const std::optional<Key>& hi,
              const std::function<bool(const Key&, const Row&)>& fn) const override {
      auto it = lo ? t_->rows.lower_bound(*lo) : t_->rows.begin();
      for (; it != t_->rows.end(); ++it) {
        if (hi && it->first > *hi) break;
        if (!fn(it->first, it->second)) break;
      }
    }
    std::uint64_t row_count() const override { return t_->rows.size(); }

   private:
    const FullCopyBackend::Table* t_;
  };

  FullCopyBackend::Table* find(std::string_view name) const {
    auto it = br_->tables.find(std::string(name));
    return it == br_->tables.end() ? nullptr : &it->second;
  }
  static Error no_table(std::string_view name) {
    return Error{ErrorClass::not_found, fmt::format("table '{}' does not exist", name)};
  }

  FullCopyBackend* backend_;
  FullCopyBackend::BranchData* br_;
  mutable std::map<std::string, View> views_;
};

void FullCopyBackend::note_bytes(BranchData& br, std::int64_t delta) {
  br.bytes = static_cast<std::uint64_t>(static_cast<std::int64_t>(br.bytes) + delta);
  live_total_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(live_total_) + delta);
  if (delta < 0) reclaimed_ += static_cast<std::uint64_t>(-delta);
  peak_live_ = std::max(peak_live_, live_total_);
}

Result<BranchId> FullCopyBackend::create_branch(BranchId parent) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  auto id = catalog_.create(parent);
  if (!id.ok()) return id;
  // The copy is the whole point: cost and footprint scale with the parent.
  BranchData copy = data_.at(parent);
  live_total_ += copy.bytes;
  peak_live_ = std::max(peak_live_, live_total_);
  data_.emplace(id.value(), std::move(copy));
  return id;
}

Result<void> FullCopyBackend::delete_branch(BranchId branch) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.remove(branch); !r.ok()) return r;
  auto it = data_.find(branch);
  live_total_ -= it->second.bytes;
  reclaimed_ += it->second.bytes;
  data_.erase(it);
  return {};
}

Result<StorageStats> FullCopyBackend::storage_stats() const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  StorageStats s;
  s.live_bytes = live_total_;
  s.reclaimable_bytes = 0;
  s.peak_live_bytes = peak_live_;
  s.reclaimed_bytes = reclaimed_;
  for (const auto& [id, br] : data_) s.per_branch_bytes[id] = br.bytes;
  return s;
}

Result<void> FullCopyBackend::create_table(BranchId branch, const TableSchema& schema) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  BranchData& br = data_.at(branch);
  if (br.tables.count(schema.name))
    return Error{ErrorClass::conflict, fmt::format("table '{}' already exists", schema.name)};
  br.tables[schema.name].schema = schema;
  note_bytes(br, static_cast<std::int64_t>(schema_bytes(schema)));
  return {};
}

Result<void> FullCopyBackend::bulk_load(BranchId branch, std::string_view table,
                                        const std::vector<std::pair<Key, Row>>& rows) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  BranchData& br = data_.at(branch);
  auto it = br.tables.find(std::string(table));
  if (it == br.tables.end())
    return Error{ErrorClass::not_found, fmt::format("table '{}' does not exist", table)};
  std::int64_t added = 0;
  for (const auto& [key, row] : rows) {
    auto [rit, inserted] = it->second.rows.emplace(key, row);
    if (!inserted)
      return Error{ErrorClass::conflict,
                   fmt::format("duplicate key {} in '{}'", key_to_text(key), table)};
    added += static_cast<std::int64_t>(row_bytes(row));
  }
  note_bytes(br, added);
  return {};
}

Result<std::uint64_t> FullCopyBackend::recounted_branch_bytes(BranchId branch) const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  auto it = data_.find(branch);
  if (it == data_.end())
    return Error{ErrorClass::not_found, fmt::format("branch {} does not exist", branch)};
  std::uint64_t total = 0;
  for (const auto& [name, t] : it->second.tables) {
    total += schema_bytes(t.schema);
    for (const auto& ix : t.indexes) total += index_meta_bytes(ix);
    for (const auto& [key, row] : t.rows) total += row_bytes(row);
  }
  return total;
}

Result<std::unique_ptr<BranchAccess>> FullCopyBackend::make_access(BranchId branch) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r.take_error();
  return std::unique_ptr<BranchAccess>(new FullCopyAccess(this, &data_.at(branch)));
}

}  // namespace branchbench
