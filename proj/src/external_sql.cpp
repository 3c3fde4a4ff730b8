// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/external_sql.hpp"

#include <utility>

#include <fmt/format.h>

#include "branchbench/interpreter.hpp"
#include "branchbench/sqlrender.hpp"

namespace branchbench {

class ExternalSqlSession : public Session {
 public:
  ExternalSqlSession(BranchId branch, ExternalSqlBackend* owner)
      : Session(branch), owner_(owner) {}

 protected:
  Result<OpResult> do_execute(const OperationDescriptor& op) override {
    return owner_->execute_on(branch(), op);
  }

 private:
  ExternalSqlBackend* owner_;
};

ExternalSqlBackend::ExternalSqlBackend(ExternalSqlOptions opts) : opts_(std::move(opts)) {
  schemas_[kRootBranch] = {};
}

std::string ExternalSqlBackend::branch_url(BranchId branch) const {
  return fmt::format("{}/{}", opts_.url, branch);
}

Result<BranchId> ExternalSqlBackend::create_branch(BranchId parent) {
  if (!opts_.create_branch_hook)
    return make_error(ErrorClass::unsupported_operation,
                      "no branch-create hook configured for this service");
  auto id = catalog_.create(parent);
  if (!id.ok()) return id.take_error();
  if (auto r = opts_.create_branch_hook(parent, id.value()); !r.ok()) {
    (void)catalog_.remove(id.value());
    return r.take_error();
  }
  std::lock_guard<std::mutex> lk(mu_);
  schemas_[id.value()] = schemas_[parent];  // mirror inherits the snapshot
  return id.take();
}

Result<std::shared_ptr<Session>> ExternalSqlBackend::connect_branch(BranchId branch) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r.take_error();
  return std::shared_ptr<Session>(new ExternalSqlSession(branch, this));
}

Result<void> ExternalSqlBackend::delete_branch(BranchId branch) {
  if (!opts_.delete_branch_hook)
    return make_error(ErrorClass::unsupported_operation,
                      "no branch-delete hook configured for this service");
  if (auto r = catalog_.remove(branch); !r.ok()) return r;
  if (auto r = opts_.delete_branch_hook(branch); !r.ok()) return r;
  std::lock_guard<std::mutex> lk(mu_);
  schemas_.erase(branch);
  return {};
}

std::vector<BranchInfo> ExternalSqlBackend::list_branches() const { return catalog_.list(); }

Result<void> ExternalSqlBackend::create_table(BranchId branch, const TableSchema& schema) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  if (!opts_.transport) return make_error(ErrorClass::configuration, "no transport configured");
  {
    std::lock_guard<std::mutex> lk(mu_);
    if (schemas_[branch].count(schema.name))
      return make_error(ErrorClass::conflict, fmt::format("table {} exists", schema.name));
  }
  auto resp = opts_.transport({branch, render_create_table(schema)});
  if (!resp.ok()) return resp.take_error();
  std::lock_guard<std::mutex> lk(mu_);
  schemas_[branch].emplace(schema.name, SlotSchema::from(schema));
  return {};
}

Result<void> ExternalSqlBackend::bulk_load(BranchId branch, std::string_view table,
                                           const std::vector<std::pair<Key, Row>>& rows) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r;
  TableSchema schema;
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = schemas_[branch].find(table);
    if (it == schemas_[branch].end())
      return make_error(ErrorClass::not_found, fmt::format("unknown table {}", table));
    schema = it->second.logical();
  }
  const std::size_t batch = opts_.insert_batch_rows ? opts_.insert_batch_rows : 256;
  for (std::size_t i = 0; i < rows.size(); i += batch) {
    const std::size_t end = std::min(rows.size(), i + batch);
    auto resp = opts_.transport({branch, render_insert(schema, rows, i, end)});
    if (!resp.ok()) return resp.take_error();
  }
  return {};
}

Result<OpResult> ExternalSqlBackend::execute_on(BranchId branch, const OperationDescriptor& op) {
  if (auto r = catalog_.check_live(branch); !r.ok()) return r.take_error();
  if (!opts_.transport) return make_error(ErrorClass::configuration, "no transport configured");
  if (op.kind == OpKind::cross_branch_aggregate)
    return make_error(ErrorClass::unsupported_operation,
                      "cross-branch aggregation has no single-connection SQL form");

  // Resolve latest-prefix references against the schema mirror so the
  // rendered statement names concrete columns.
  OperationDescriptor resolved = op;
  if (op.kind == OpKind::aggregate) {
    TableSchema logical;
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = schemas_[branch].find(op.agg.table);
      if (it == schemas_[branch].end())
        return make_error(ErrorClass::not_found, fmt::format("unknown table {}", op.agg.table));
      logical = it->second.logical();
    }
    for (auto& g : resolved.agg.group_by) {
      if (!g.latest_prefix) continue;
      auto n = resolve_column_ref(g, logical);
      if (!n.ok()) return n.take_error();
      g = ColumnRef::named(n.take());
    }
    for (auto& a : resolved.agg.aggs) {
      if (!a.column.latest_prefix) continue;
      auto n = resolve_column_ref(a.column, logical);
      if (!n.ok()) return n.take_error();
      a.column = ColumnRef::named(n.take());
    }
  }

  const bool is_ddl = op.kind == OpKind::add_column || op.kind == OpKind::drop_column ||
                      op.kind == OpKind::create_index;
  if (is_ddl) {
    // Validate against the mirror before shipping so a statement the mirror
    // knows is invalid never reaches the wire.
    std::lock_guard<std::mutex> lk(mu_);
    auto it = schemas_[branch].find(op.table);
    if (it == schemas_[branch].end())
      return make_error(ErrorClass::not_found, fmt::format("unknown table {}", op.table));
    if (op.kind == OpKind::add_column && it->second.name_in_use(op.column.name))
      return make_error(ErrorClass::conflict, fmt::format("column {} exists", op.column.name));
    if (op.kind == OpKind::drop_column && it->second.live_slot_of(op.column_name) < 0)
      return make_error(ErrorClass::not_found, fmt::format("unknown column {}", op.column_name));
  }

  auto stmt = render_sql(resolved);
  if (!stmt.ok()) return stmt.take_error();
  auto resp = opts_.transport({branch, stmt.take()});
  if (!resp.ok()) return resp.take_error();

  // Keep the mirror in step with DDL the service accepted.
  if (is_ddl) {
    std::lock_guard<std::mutex> lk(mu_);
    SlotSchema& s = schemas_[branch].find(op.table)->second;
    if (op.kind == OpKind::add_column) {
      s.slots.push_back(op.column);
      s.dropped.push_back(false);
    } else if (op.kind == OpKind::drop_column) {
      const int slot = s.live_slot_of(op.column_name);
      if (slot >= 0) s.dropped[static_cast<std::size_t>(slot)] = true;
    } else {
      s.indexes.push_back({op.index_name, op.index_columns});
    }
  }

  OpResult out;
  auto r = resp.take();
  out.affected = r.affected;
  out.columns = std::move(r.columns);
  out.rows = std::move(r.rows);
  return out;
}

}  // namespace branchbench
