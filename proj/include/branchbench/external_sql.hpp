// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "branchbench/backend.hpp"
#include "branchbench/storemodel.hpp"

namespace branchbench {

// Contract-level adapter for a branch-capable SQL service. Statements are
// rendered from descriptors and handed to a caller-supplied transport, one
// statement per call, bound to one branch; wire protocols are out of scope.
// The adapter mirrors each branch's schema so latest-prefix column
// references resolve before rendering, exactly as the embedded backends do.

struct SqlRequest {
  BranchId branch = 0;
  std::string statement;
};

// The shape a wire driver must map result sets into.
struct SqlResponse {
  std::int64_t affected = 0;
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

using SqlTransport = std::function<Result<SqlResponse>(const SqlRequest&)>;

struct ExternalSqlOptions {
  // Reported in configs and logs only; the transport owns actual dialing.
  // Branch connections are conventionally url + "/" + branch id.
  std::string url;
  SqlTransport transport;  // required
  // How the service spells its branch lifecycle; absent hooks make the
  // corresponding operation unsupported.
  std::function<Result<void>(BranchId parent, BranchId child)> create_branch_hook;
  std::function<Result<void>(BranchId)> delete_branch_hook;
  // Statements per INSERT batch on the bulk-load path.
  std::size_t insert_batch_rows = 256;
};

class ExternalSqlBackend : public Backend {
 public:
  explicit ExternalSqlBackend(ExternalSqlOptions opts);

  std::string_view name() const override { return "external-sql"; }
  Capabilities capabilities() const override { return {false, false}; }

  Result<BranchId> create_branch(BranchId parent) override;
  Result<std::shared_ptr<Session>> connect_branch(BranchId branch) override;
  Result<void> delete_branch(BranchId branch) override;

  Result<StorageStats> storage_stats() const override {
    return make_error(ErrorClass::unsupported_operation,
                      "external services do not expose storage accounting");
  }
  std::uint64_t run_gc() override { return 0; }
  std::vector<BranchInfo> list_branches() const override;

  Result<void> create_table(BranchId branch, const TableSchema& schema) override;
  Result<void> bulk_load(BranchId branch, std::string_view table,
                         const std::vector<std::pair<Key, Row>>& rows) override;

  const std::string& url() const { return opts_.url; }
  std::string branch_url(BranchId branch) const;

 private:
  friend class ExternalSqlSession;
  // Resolves latest-prefix refs against the branch's schema mirror, renders,
  // ships, and keeps the mirror in step with DDL that succeeded.
  Result<OpResult> execute_on(BranchId branch, const OperationDescriptor& op);

  ExternalSqlOptions opts_;
  BranchCatalog catalog_;
  mutable std::mutex mu_;  // guards schemas_
  std::map<BranchId, std::map<std::string, SlotSchema, std::less<>>> schemas_;
};

}  // namespace branchbench
