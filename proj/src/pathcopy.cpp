// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/pathcopy.hpp"

#include <set>

#include <fmt/format.h>

#include "branchbench/types.hpp"

namespace branchbench {

class PathCopyAccess final : public BranchAccess {
 public:
  PathCopyAccess(PathCopyBackend* backend, BranchId branch,
                 PathCopyBackend::BranchState* self)
      : backend_(backend), branch_(branch), self_(self) {}

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
      it = views_.emplace(key, View(backend_, &sit->second, &self_->tables.at(key))).first;
    return &it->second;
  }

  Result<void> insert_row(std::string_view table, Key key, Row row) override {
    auto st = find_state(table);
    if (!st.first) return no_table(table);
    if (pmap_get(backend_->arena_, st.second->root, key))
      return Error{ErrorClass::conflict,
                   fmt::format("duplicate key {} in '{}'", key_to_text(key), table)};
    swap_root(*st.second,
              pmap_put(backend_->arena_, st.second->root, key, st.first->physical_row(row),
                       branch_));
    st.second->count += 1;
    return {};
  }

  Result<std::int64_t> update_row(std::string_view table, const Key& key, Row row) override {
    auto st = find_state(table);
    if (!st.first) return no_table(table);
    if (!pmap_get(backend_->arena_, st.second->root, key)) return 0;
    swap_root(*st.second,
              pmap_put(backend_->arena_, st.second->root, key, st.first->physical_row(row),
                       branch_));
    return 1;
  }

  Result<std::int64_t> erase_row(std::string_view table, const Key& key) override {
    auto st = find_state(table);
    if (!st.first) return no_table(table);
    bool erased = false;
    swap_root(*st.second, pmap_erase(backend_->arena_, st.second->root, key, branch_, &erased));
    if (erased) st.second->count -= 1;
    return erased ? 1 : 0;
  }

  Result<void> add_column(std::string_view table, const Column& col) override {
    auto st = find_state(table);
    if (!st.first) return no_table(table);
    if (st.first->name_in_use(col.name))
      return Error{ErrorClass::conflict,
                   fmt::format("column '{}' already exists in '{}'", col.name, table)};
    st.first->slots.push_back(col);
    st.first->dropped.push_back(false);
    self_->schema_meta_bytes += column_meta_bytes(col);
    backend_->schema_meta_live_ += column_meta_bytes(col);
    backend_->note_peak();
    return {};
  }

  Result<void> drop_column(std::string_view table, std::string_view col) override {
    auto st = find_state(table);
    if (!st.first) return no_table(table);
    const int slot = st.first->live_slot_of(col);
    if (slot < 0)
      return Error{ErrorClass::unsupported_operation,
                   fmt::format("no column '{}' in '{}'", col, table)};
    st.first->dropped[static_cast<std::size_t>(slot)] = true;
    self_->schema_meta_bytes += 8;
    backend_->schema_meta_live_ += 8;
    backend_->note_peak();
    return {};
  }

  Result<void> create_index(std::string_view table, std::string_view index_name,
                            const std::vector<std::string>& columns) override {
    auto st = find_state(table);
    if (!st.first) return no_table(table);
    IndexMeta ix{std::string(index_name), columns};
    self_->schema_meta_bytes += index_meta_bytes(ix);
    backend_->schema_meta_live_ += index_meta_bytes(ix);
    backend_->note_peak();
    st.first->indexes.push_back(std::move(ix));
    return {};
  }

 private:
  class View final : public TableView {
   public:
    View(const PathCopyBackend* backend, const SlotSchema* schema,
         const PathCopyBackend::TableState* state)
        : backend_(backend), schema_(schema), state_(state), logical_(schema->logical()) {}

    const TableSchema& schema() const override { return logical_; }
    std::optional<Row> get(const Key& key) const override {
      const Row* stored = pmap_get(backend_->arena_, state_->root, key);
      if (!stored) return std::nullopt;
      return schema_->logical_row(*stored);
    }
    void scan(const std::optional<Key>& lo, const std::optional<Key>& hi,
              const std::function<bool(const Key&, const Row&)>& fn) const override {
      pmap_scan(backend_->arena_, state_->root, lo, hi, [&](const Key& k, const Row& stored) {
        return fn(k, schema_->logical_row(stored));
      });
    }
    std::uint64_t row_count() const override { return state_->count; }

   private:
    const PathCopyBackend* backend_;
    const SlotSchema* schema_;
    const PathCopyBackend::TableState* state_;
    TableSchema logical_;
  };

  std::pair<SlotSchema*, PathCopyBackend::TableState*> find_state(std::string_view table) const {
    auto sit = self_->schemas.find(std::string(table));
    if (sit == self_->schemas.end()) return {nullptr, nullptr};
    return {&sit->second, &self_->tables.at(sit->first)};
  }
  static Error no_table(std::string_view name) {
    return Error{ErrorClass::not_found, fmt::format("table '{}' does not exist", name)};
  }

  // Swap in the new root and drop the handle on the old one; an unshared
  // old path frees right here (the eager in-branch reclamation).
  void swap_root(PathCopyBackend::TableState& st, NodeId new_root) {
    NodeId old = st.root;
    st.root = new_root;
    backend_->arena_.unref(old);
    backend_->note_peak();
  }

  PathCopyBackend* backend_;
  BranchId branch_;
  PathCopyBackend::BranchState* self_;
  mutable std::map<std::string, View> views_;
};

void PathCopyBackend::note_peak() {
  peak_live_ = std::max(peak_live_, arena_.total_bytes() + schema_meta_live_);
}

Result<BranchId> PathCopyBackend::create_branch(BranchId parent) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  auto id = catalog_.create(parent);
  if (!id.ok()) return id;
  const BranchState& src = data_.at(parent);
  BranchState st;
  st.schemas = src.schemas;
  st.tables = src.tables;
  for (auto& [name, t] : st.tables) arena_.ref(t.root);  // structural sharing
  data_.emplace(id.value(), std::move(st));
  return id;
}

Result<void> PathCopyBackend::delete_branch(BranchId branch) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.remove(branch); !r.ok()) return r;
  auto it = data_.find(branch);
  // Data nodes wait for gc; the schema metadata is returned immediately.
  for (auto& [name, t] : it->second.tables)
    if (t.root != kNilNode) deferred_.push_back(t.root);
  schema_meta_live_ -= it->second.schema_meta_bytes;
  reclaimed_ += it->second.schema_meta_bytes;
  data_.erase(it);
  return {};
}

std::uint64_t PathCopyBackend::run_gc() {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  std::uint64_t freed = 0;
  for (NodeId root : deferred_) freed += arena_.unref(root);
  deferred_.clear();
  reclaimed_ += freed;
  return freed;
}

Result<StorageStats> PathCopyBackend::storage_stats() const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  StorageStats s;
  // Reachability mark from live roots; everything else is gc debt.
  std::set<NodeId> seen;
  std::uint64_t reachable = 0;
  std::function<void(NodeId)> mark = [&](NodeId id) {
    if (id == kNilNode || !seen.insert(id).second) return;
    const auto& n = arena_.node(id);
    reachable += n.bytes;
    for (NodeId kid : n.kids) mark(kid);
  };
  for (const auto& [id, st] : data_)
    for (const auto& [name, t] : st.tables) mark(t.root);
  s.live_bytes = reachable + schema_meta_live_;
  s.reclaimable_bytes = arena_.total_bytes() - reachable;
  s.peak_live_bytes = peak_live_;
  s.reclaimed_bytes = reclaimed_;
  for (const auto& [id, st] : data_) {
    auto oit = arena_.owner_bytes().find(id);
    s.per_branch_bytes[id] =
        (oit != arena_.owner_bytes().end() ? oit->second : 0) + st.schema_meta_bytes;
  }
  return s;
}

Result<void> PathCopyBackend::create_table(BranchId branch, const TableSchema& schema) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  BranchState& st = data_.at(branch);
  if (st.schemas.count(schema.name))
    return Error{ErrorClass::conflict, fmt::format("table '{}' already exists", schema.name)};
  st.schemas.emplace(schema.name, SlotSchema::from(schema));
  st.tables.emplace(schema.name, TableState{});
  std::uint64_t meta = 0;
  for (const auto& col : schema.columns) meta += column_meta_bytes(col);
  st.schema_meta_bytes += meta;
  schema_meta_live_ += meta;
  note_peak();
  return {};
}

Result<void> PathCopyBackend::bulk_load(BranchId branch, std::string_view table,
                                        const std::vector<std::pair<Key, Row>>& rows) {
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  BranchState& st = data_.at(branch);
  auto tit = st.tables.find(std::string(table));
  if (tit == st.tables.end())
    return Error{ErrorClass::not_found, fmt::format("table '{}' does not exist", table)};
  if (tit->second.root != kNilNode)
    return Error{ErrorClass::conflict, fmt::format("table '{}' is already loaded", table)};
  tit->second.root = pmap_bulk_build(arena_, rows, branch);
  tit->second.count = rows.size();
  note_peak();
  return {};
}

std::vector<NodeId> PathCopyBackend::live_roots() const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  std::vector<NodeId> out;
  for (const auto& [id, st] : data_)
    for (const auto& [name, t] : st.tables)
      if (t.root != kNilNode) out.push_back(t.root);
  return out;
}

std::vector<NodeId> PathCopyBackend::deferred_roots() const {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  return deferred_;
}

Result<std::unique_ptr<BranchAccess>> PathCopyBackend::make_access(BranchId branch) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r.take_error();
  return std::unique_ptr<BranchAccess>(new PathCopyAccess(this, branch, &data_.at(branch)));
}

}  // namespace branchbench
