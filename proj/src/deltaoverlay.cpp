// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/deltaoverlay.hpp"

#include <fmt/format.h>

#include "branchbench/types.hpp"

namespace branchbench {

namespace {

std::uint64_t record_bytes(const Key& key, const std::optional<Row>& row) {
  // A put stores the key plus the row; a tombstone stores the key plus a tag.
  return 8 * key.size() + (row ? row_bytes(*row) : 1);
}

}  // namespace

std::uint64_t DeltaOverlayBackend::BranchState::delta_bytes() const {
  std::uint64_t n = 0;
  for (const auto& [name, td] : deltas) n += td.bytes;
  return n;
}

class DeltaOverlayAccess final : public BranchAccess {
 public:
  DeltaOverlayAccess(DeltaOverlayBackend* backend, DeltaOverlayBackend::BranchState* self,
                     std::vector<const DeltaOverlayBackend::BranchState*> chain)
      : backend_(backend), self_(self), chain_(std::move(chain)) {}

  std::vector<std::string> table_names() const override {
    std::vector<std::string> out;
    out.reserve(self_->schemas.size());
    for (const auto& [name, s] : self_->schemas) out.push_back(name);
    return out;
  }

  const TableView* table(std::string_view name) const override {
    std::string key(name);
    auto sit = self_->schemas.find(key);
    if (sit == self_->schemas.end()) return nullptr;
    auto it = views_.find(key);
    if (it == views_.end())
      it = views_.emplace(key, View(this, key, &sit->second)).first;
    return &it->second;
  }

  Result<void> insert_row(std::string_view table, Key key, Row row) override {
    auto* schema = find_schema(table);
    if (!schema) return no_table(table);
    if (probe(std::string(table), key) == Hit::put)
      return Error{ErrorClass::conflict,
                   fmt::format("duplicate key {} in '{}'", key_to_text(key), table)};
    append(std::string(table), std::move(key), schema->physical_row(row));
    return {};
  }

  Result<std::int64_t> update_row(std::string_view table, const Key& key, Row row) override {
    auto* schema = find_schema(table);
    if (!schema) return no_table(table);
    if (probe(std::string(table), key) != Hit::put) return 0;
    append(std::string(table), key, schema->physical_row(row));
    return 1;
  }

  Result<std::int64_t> erase_row(std::string_view table, const Key& key) override {
    if (!find_schema(table)) return no_table(table);
    if (probe(std::string(table), key) != Hit::put) return 0;
    append_tombstone(std::string(table), key);
    return 1;
  }

  Result<void> add_column(std::string_view table, const Column& col) override {
    auto* schema = find_schema(table);
    if (!schema) return no_table(table);
    if (schema->name_in_use(col.name))
      return Error{ErrorClass::conflict,
                   fmt::format("column '{}' already exists in '{}'", col.name, table)};
    schema->slots.push_back(col);
    schema->dropped.push_back(false);
    self_->schema_delta_bytes += column_meta_bytes(col);
    backend_->note_bytes(static_cast<std::int64_t>(column_meta_bytes(col)));
    return {};
  }

  Result<void> drop_column(std::string_view table, std::string_view col) override {
    auto* schema = find_schema(table);
    if (!schema) return no_table(table);
    const int slot = schema->live_slot_of(col);
    if (slot < 0)
      return Error{ErrorClass::unsupported_operation,
                   fmt::format("no column '{}' in '{}'", col, table)};
    // The slot stays; readers on this branch project it out from any stored
    // width. 8 bytes model the catalog drop marker.
    schema->dropped[static_cast<std::size_t>(slot)] = true;
    self_->schema_delta_bytes += 8;
    backend_->note_bytes(8);
    return {};
  }

  Result<void> create_index(std::string_view table, std::string_view index_name,
                            const std::vector<std::string>& columns) override {
    auto* schema = find_schema(table);
    if (!schema) return no_table(table);
    IndexMeta ix{std::string(index_name), columns};
    self_->schema_delta_bytes += index_meta_bytes(ix);
    backend_->note_bytes(static_cast<std::int64_t>(index_meta_bytes(ix)));
    schema->indexes.push_back(std::move(ix));
    return {};
  }

 private:
  enum class Hit { miss, put, tombstone };

  // Newest record wins: probe each level's index leaf to root, then the
  // base. This walk is the mechanism's read amplification.
  Hit probe(const std::string& table, const Key& key, const Row** stored = nullptr) const {
    for (const auto* level : chain_) {
      auto dit = level->deltas.find(table);
      if (dit == level->deltas.end()) continue;
      auto lit = dit->second.latest.find(key);
      if (lit == dit->second.latest.end()) continue;
      const auto& rec = dit->second.records[lit->second].second;
      if (!rec) return Hit::tombstone;
      if (stored) *stored = &*rec;
      return Hit::put;
    }
    auto bit = backend_->base_.find(table);
    if (bit == backend_->base_.end()) return Hit::miss;
    auto rit = bit->second.rows.find(key);
    if (rit == bit->second.rows.end()) return Hit::miss;
    if (stored) *stored = &rit->second;
    return Hit::put;
  }

  void append(std::string table, Key key, Row stored) {
    auto& td = self_->deltas[table];
    const std::uint64_t bytes = record_bytes(key, stored);
    td.records.emplace_back(std::move(key), std::move(stored));
    td.latest[td.records.back().first] = td.records.size() - 1;
    td.bytes += bytes;
    backend_->note_bytes(static_cast<std::int64_t>(bytes));
    backend_->maybe_fold(td);
  }

  void append_tombstone(std::string table, Key key) {
    auto& td = self_->deltas[table];
    const std::uint64_t bytes = record_bytes(key, std::nullopt);
    td.records.emplace_back(std::move(key), std::nullopt);
    td.latest[td.records.back().first] = td.records.size() - 1;
    td.bytes += bytes;
    backend_->note_bytes(static_cast<std::int64_t>(bytes));
    backend_->maybe_fold(td);
  }

  SlotSchema* find_schema(std::string_view table) const {
    auto it = self_->schemas.find(std::string(table));
    return it == self_->schemas.end() ? nullptr : &it->second;
  }
  static Error no_table(std::string_view name) {
    return Error{ErrorClass::not_found, fmt::format("table '{}' does not exist", name)};
  }

  class View final : public TableView {
   public:
    View(const DeltaOverlayAccess* access, std::string table, const SlotSchema* schema)
        : access_(access), table_(std::move(table)), schema_(schema),
          logical_(schema->logical()) {}

    const TableSchema& schema() const override { return logical_; }

    std::optional<Row> get(const Key& key) const override {
      const Row* stored = nullptr;
      if (access_->probe(table_, key, &stored) != Hit::put) return std::nullopt;
      return schema_->logical_row(*stored);
    }

    void scan(const std::optional<Key>& lo, const std::optional<Key>& hi,
              const std::function<bool(const Key&, const Row&)>& fn) const override {
      // Overlay merge, oldest level first so newer records overwrite.
      std::map<Key, const Row*> merged;  // nullptr marks a tombstone
      auto bit = access_->backend_->base_.find(table_);
      if (bit != access_->backend_->base_.end()) {
        auto it = lo ? bit->second.rows.lower_bound(*lo) : bit->second.rows.begin();
        for (; it != bit->second.rows.end(); ++it) {
          if (hi && it->first > *hi) break;
          merged[it->first] = &it->second;
        }
      }
      for (auto level = access_->chain_.rbegin(); level != access_->chain_.rend(); ++level) {
        auto dit = (*level)->deltas.find(table_);
        if (dit == (*level)->deltas.end()) continue;
        const auto& td = dit->second;
        auto it = lo ? td.latest.lower_bound(*lo) : td.latest.begin();
        for (; it != td.latest.end(); ++it) {
          if (hi && it->first > *hi) break;
          const auto& rec = td.records[it->second].second;
          merged[it->first] = rec ? &*rec : nullptr;
        }
      }
      for (const auto& [key, stored] : merged) {
        if (!stored) continue;
        if (!fn(key, schema_->logical_row(*stored))) break;
      }
    }

    std::uint64_t row_count() const override {
      std::uint64_t n = 0;
      scan(std::nullopt, std::nullopt, [&](const Key&, const Row&) {
        ++n;
        return true;
      });
      return n;
    }

   private:
    const DeltaOverlayAccess* access_;
    std::string table_;
    const SlotSchema* schema_;
    TableSchema logical_;
  };

  DeltaOverlayBackend* backend_;
  DeltaOverlayBackend::BranchState* self_;
  std::vector<const DeltaOverlayBackend::BranchState*> chain_;
  mutable std::map<std::string, View> views_;

  friend class DeltaOverlayBackend;
};

void DeltaOverlayBackend::note_bytes(std::int64_t delta) {
  live_total_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(live_total_) + delta);
  peak_live_ = std::max(peak_live_, live_total_);
}

void DeltaOverlayBackend::fold_log(TableDelta& td) {
  std::vector<std::pair<Key, std::optional<Row>>> kept;
  kept.reserve(td.latest.size());
  std::uint64_t bytes = 0;
  for (const auto& [key, idx] : td.latest) {
    kept.emplace_back(key, td.records[idx].second);
    bytes += record_bytes(key, td.records[idx].second);
  }
  const std::uint64_t freed = td.bytes - bytes;
  td.records = std::move(kept);
  td.latest.clear();
  for (std::size_t i = 0; i < td.records.size(); ++i) td.latest[td.records[i].first] = i;
  td.bytes = bytes;
  live_total_ -= freed;
  reclaimed_ += freed;
  ++compactions_;
}

Result<BranchId> DeltaOverlayBackend::create_branch(BranchId parent) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  auto id = catalog_.create(parent);
  if (!id.ok()) return id;
  BranchState st;
  st.parent = parent;
  st.schemas = data_.at(parent).schemas;  // table list snapshot, no data copied
  data_.emplace(id.value(), std::move(st));
  return id;
}

Result<void> DeltaOverlayBackend::delete_branch(BranchId branch) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.remove(branch); !r.ok()) return r;
  auto it = data_.find(branch);
  const std::uint64_t freed = it->second.delta_bytes() + it->second.schema_delta_bytes;
  live_total_ -= freed;
  reclaimed_ += freed;
  data_.erase(it);
  return {};
}

Result<StorageStats> DeltaOverlayBackend::storage_stats() const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  StorageStats s;
  s.live_bytes = live_total_;
  s.reclaimable_bytes = 0;
  s.peak_live_bytes = peak_live_;
  s.reclaimed_bytes = reclaimed_;
  for (const auto& [id, st] : data_) {
    std::uint64_t b = st.delta_bytes() + st.schema_delta_bytes;
    if (id == kRootBranch) b += base_bytes_;
    s.per_branch_bytes[id] = b;
  }
  return s;
}

Result<void> DeltaOverlayBackend::create_table(BranchId branch, const TableSchema& schema) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  BranchState& st = data_.at(branch);
  if (st.schemas.count(schema.name))
    return Error{ErrorClass::conflict, fmt::format("table '{}' already exists", schema.name)};
  st.schemas.emplace(schema.name, SlotSchema::from(schema));
  std::uint64_t meta = 0;
  for (const auto& col : schema.columns) meta += column_meta_bytes(col);
  if (branch == kRootBranch) {
    base_.emplace(schema.name, BaseTable{});
    base_bytes_ += meta;
  } else {
    st.schema_delta_bytes += meta;
  }
  note_bytes(static_cast<std::int64_t>(meta));
  return {};
}

Result<void> DeltaOverlayBackend::bulk_load(BranchId branch, std::string_view table,
                                            const std::vector<std::pair<Key, Row>>& rows) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  auto acc = make_access_locked(branch);
  if (!acc.ok()) return acc.take_error();
  if (branch == kRootBranch) {
    auto bit = base_.find(std::string(table));
    if (bit == base_.end())
      return Error{ErrorClass::not_found, fmt::format("table '{}' does not exist", table)};
    std::int64_t added = 0;
    for (const auto& [key, row] : rows) {
      auto [it, inserted] = bit->second.rows.emplace(key, row);
      if (!inserted)
        return Error{ErrorClass::conflict,
                     fmt::format("duplicate key {} in '{}'", key_to_text(key), table)};
      added += static_cast<std::int64_t>(row_bytes(row));
    }
    bit->second.bytes += static_cast<std::uint64_t>(added);
    base_bytes_ += static_cast<std::uint64_t>(added);
    note_bytes(added);
    return {};
  }
  for (const auto& [key, row] : rows) {
    if (auto r = acc.value()->insert_row(table, key, row); !r.ok()) return r;
  }
  return {};
}

std::uint64_t DeltaOverlayBackend::delta_record_count(BranchId branch) const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  auto it = data_.find(branch);
  if (it == data_.end()) return 0;
  std::uint64_t n = 0;
  for (const auto& [name, td] : it->second.deltas) n += td.records.size();
  return n;
}

std::uint64_t DeltaOverlayBackend::compaction_passes() const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  return compactions_;
}

void DeltaOverlayBackend::maybe_fold(TableDelta& td) {
  if (compaction_threshold_ == 0) return;
  if (td.records.size() <= compaction_threshold_) return;
  fold_log(td);
}

Result<std::unique_ptr<BranchAccess>> DeltaOverlayBackend::make_access_locked(BranchId branch) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r.take_error();
  std::vector<const BranchState*> chain;
  for (BranchId id : catalog_.chain_to_root(branch)) chain.push_back(&data_.at(id));
  return std::unique_ptr<BranchAccess>(
      new DeltaOverlayAccess(this, &data_.at(branch), std::move(chain)));
}

Result<std::unique_ptr<BranchAccess>> DeltaOverlayBackend::make_access(BranchId branch) {
  return make_access_locked(branch);
}

}  // namespace branchbench
