// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/backend.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "branchbench/deltaoverlay.hpp"
#include "branchbench/fullcopy.hpp"
#include "branchbench/pathcopy.hpp"
#include "branchbench/storemodel.hpp"
#include "branchbench/types.hpp"

namespace branchbench {

Result<OpResult> Session::execute(const OperationDescriptor& op) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!connected_) return Error{ErrorClass::precondition, "session is closed"};
  return do_execute(op);
}

Result<void> load_dataset(const Dataset& ds, Backend& backend, BranchId branch) {
  for (const auto& t : ds.tables) {
    if (auto r = backend.create_table(branch, t.schema); !r.ok()) return r;
    if (auto r = backend.bulk_load(branch, t.schema.name, t.rows); !r.ok()) return r;
  }
  return {};
}

// --- slot schemas ---

SlotSchema SlotSchema::from(const TableSchema& t) {
  SlotSchema s;
  s.name = t.name;
  s.primary_key = t.primary_key;
  s.foreign_keys = t.foreign_keys;
  s.slots = t.columns;
  s.dropped.assign(t.columns.size(), false);
  return s;
}

TableSchema SlotSchema::logical() const {
  TableSchema t;
  t.name = name;
  t.primary_key = primary_key;
  t.foreign_keys = foreign_keys;
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (!dropped[i]) t.columns.push_back(slots[i]);
  return t;
}

int SlotSchema::live_slot_of(std::string_view column) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (!dropped[i] && slots[i].name == column) return static_cast<int>(i);
  return -1;
}

bool SlotSchema::name_in_use(std::string_view column) const {
  return live_slot_of(column) >= 0;
}

Row SlotSchema::physical_row(const Row& logical) const {
  Row out(slots.size(), Value{});
  std::size_t j = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (dropped[i]) continue;
    out[i] = j < logical.size() ? logical[j] : slots[i].default_value;
    ++j;
  }
  return out;
}

Row SlotSchema::logical_row(const Row& stored) const {
  Row out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (dropped[i]) continue;
    // Rows predating an AddColumn are short; the default fills the gap.
    out.push_back(i < stored.size() ? stored[i] : slots[i].default_value);
  }
  return out;
}

// --- branch catalog ---

BranchCatalog::BranchCatalog() { entries_[kRootBranch] = Entry{kRootBranch, false, 0}; }

Result<BranchId> BranchCatalog::create(BranchId parent) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(parent);
  if (it == entries_.end() || it->second.deleted)
    return Error{ErrorClass::not_found, fmt::format("parent branch {} does not exist", parent)};
  const BranchId id = next_++;
  entries_[id] = Entry{parent, false, 0};
  entries_[parent].live_children += 1;
  return id;
}

Result<void> BranchCatalog::remove(BranchId b) {
  std::lock_guard<std::mutex> lock(mu_);
  if (b == kRootBranch)
    return Error{ErrorClass::conflict, "the root branch cannot be deleted"};
  auto it = entries_.find(b);
  if (it == entries_.end() || it->second.deleted)
    return Error{ErrorClass::not_found, fmt::format("branch {} does not exist", b)};
  if (it->second.live_children > 0)
    return Error{ErrorClass::conflict,
                 fmt::format("branch {} still has {} live children", b, it->second.live_children)};
  it->second.deleted = true;
  entries_[it->second.parent].live_children -= 1;
  return {};
}

bool BranchCatalog::live(BranchId b) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(b);
  return it != entries_.end() && !it->second.deleted;
}

Result<void> BranchCatalog::check_live(BranchId b) const {
  if (live(b)) return {};
  return Error{ErrorClass::not_found, fmt::format("branch {} does not exist", b)};
}

std::vector<BranchInfo> BranchCatalog::list() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<BranchInfo> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(BranchInfo{id, e.parent, e.deleted});
  return out;
}

std::vector<BranchId> BranchCatalog::chain_to_root(BranchId b) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<BranchId> chain;
  BranchId cur = b;
  while (true) {
    auto it = entries_.find(cur);
    if (it == entries_.end()) break;
    chain.push_back(cur);
    if (cur == kRootBranch) break;
    cur = it->second.parent;
  }
  return chain;
}

// --- embedded backend plumbing ---

namespace {

class EmbeddedSession final : public Session {
 public:
  EmbeddedSession(EmbeddedBackend* backend, BranchId branch)
      : Session(branch), backend_(backend) {}

 protected:
  Result<OpResult> do_execute(const OperationDescriptor& op) override {
    return backend_->execute_on(branch(), op);
  }

 private:
  EmbeddedBackend* backend_;  // not owned; sessions must not outlive the backend
};

}  // namespace

Result<std::shared_ptr<Session>> EmbeddedBackend::connect_branch(BranchId branch) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r.take_error();
  return std::shared_ptr<Session>(new EmbeddedSession(this, branch));
}

Result<OpResult> EmbeddedBackend::execute_on(BranchId branch, const OperationDescriptor& op) {
  if (op.kind == OpKind::cross_branch_aggregate) {
    std::shared_lock<std::shared_mutex> lock(data_mu_);
    std::map<BranchId, std::unique_ptr<BranchAccess>> opened;
    auto resolver = [&](const BranchSel& sel) -> BranchAccess* {
      auto it = opened.find(sel.backend_branch);
      if (it != opened.end()) return it->second.get();
      auto r = make_access(sel.backend_branch);
      if (!r.ok()) return nullptr;
      return opened.emplace(sel.backend_branch, r.take()).first->second.get();
    };
    return interpret_cross(op, resolver);
  }
  if (op_is_read(op.kind)) {
    std::shared_lock<std::shared_mutex> lock(data_mu_);
    auto access = make_access(branch);
    if (!access.ok()) return access.take_error();
    return interpret(op, *access.value());
  }
  std::unique_lock<std::shared_mutex> lock(data_mu_);
  auto access = make_access(branch);
  if (!access.ok()) return access.take_error();
  return interpret(op, *access.value());
}

Result<std::string> EmbeddedBackend::dump_branch(BranchId branch,
                                                 const std::vector<std::string>& tables) {
  std::shared_lock<std::shared_mutex> lock(data_mu_);
  auto accr = make_access(branch);
  if (!accr.ok()) return accr.take_error();
  BranchAccess& access = *accr.value();

  std::vector<std::string> names = tables.empty() ? access.table_names() : tables;
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& name : names) {
    const TableView* view = access.table(name);
    if (!view)
      return Error{ErrorClass::not_found, fmt::format("table '{}' does not exist", name)};
    const TableSchema& schema = view->schema();
    out += fmt::format("== {}\n", name);
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      if (i) out += ',';
      out += schema.columns[i].name;
    }
    out += '\n';
    view->scan(std::nullopt, std::nullopt, [&](const Key&, const Row& row) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_field(row[i]);
      }
      out += '\n';
      return true;
    });
  }
  return out;
}

std::uint64_t recompute_branch_bytes(BranchAccess& access) {
  std::uint64_t total = 0;
  for (const auto& name : access.table_names()) {
    const TableView* view = access.table(name);
    for (const auto& col : view->schema().columns) total += column_meta_bytes(col);
    view->scan(std::nullopt, std::nullopt, [&](const Key&, const Row& row) {
      for (const auto& v : row) total += value_bytes(v);
      return true;
    });
  }
  return total;
}

// --- factory ---

Result<std::unique_ptr<Backend>> make_backend(std::string_view name, const BackendOptions& opts) {
  if (name == "fullcopy") return std::unique_ptr<Backend>(new FullCopyBackend());
  if (name == "deltaoverlay") return std::unique_ptr<Backend>(new DeltaOverlayBackend(opts));
  if (name == "pathcopy") return std::unique_ptr<Backend>(new PathCopyBackend(opts));
  return Error{ErrorClass::configuration,
               fmt::format("unknown backend '{}' (expected one of: fullcopy, deltaoverlay, "
                           "pathcopy)",
                           name)};
}

std::vector<std::string> builtin_backend_names() {
  return {"fullcopy", "deltaoverlay", "pathcopy"};
}

}  // namespace branchbench
