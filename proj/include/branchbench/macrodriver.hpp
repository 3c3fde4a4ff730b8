// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "branchbench/backend.hpp"
#include "branchbench/datagen.hpp"
#include "branchbench/faults.hpp"
#include "branchbench/metrics.hpp"
#include "branchbench/rng.hpp"
#include "branchbench/workflows.hpp"

namespace branchbench {

// Full parameter vector of one macro run. Dashes in the preset table mean a
// parameter is absent; absent normalizes to: no cross queries, unbounded
// inner fanout, no schema ops, never prune.
struct WorkflowConfig {
  WorkflowKind workflow = WorkflowKind::software_dev;
  std::uint32_t workers = 1;                    // T
  std::uint32_t steps = 1;                      // S
  std::optional<std::uint32_t> cross_queries;   // C
  std::uint32_t root_fanout = 1;                // F_r
  std::optional<std::uint32_t> inner_fanout;    // F_i
  std::uint32_t max_depth = 1;                  // D, parent depth must be < D
  std::optional<std::uint32_t> schema_ops;      // M_s per step
  std::uint32_t data_mutations = 0;             // M_d per step
  std::uint32_t read_queries = 1;               // Q_v per step
  std::optional<double> prune_probability;      // gamma
  std::uint64_t seed = 42;
  std::uint32_t scale = 1;  // W
  std::chrono::milliseconds timeout{600000};
  std::string backend = "fullcopy";
  BackendOptions backend_options;
  FaultConfig faults;
  RetryPolicy retry;
  // Force strictly serial execution even with workers > 1 (oracle mode).
  bool serial = false;
  // Build frontier dumps / accumulated outcome text at the end of the run
  // (embedded backends only; costs a full scan of every frontier branch).
  bool capture_canonical_dump = false;
  // Re-check tree invariants and the brute-force frontier after every step
  // completion instead of only at the end (slow; for validation runs).
  bool verify_tree_each_step = false;
  // Dataset shape; warehouses follows scale unless explicitly overridden.
  DataGenConfig data;

  std::uint32_t cross() const { return cross_queries.value_or(0); }
  std::uint32_t ms() const { return schema_ops.value_or(0); }
  double gamma() const { return prune_probability.value_or(0.0); }
  // Accumulate per-branch outcome rows pre-prune: the only way a gamma=1
  // workflow's final cross-branch query has anything to aggregate.
  bool accumulate_outcomes() const { return gamma() >= 1.0 && cross() > 0; }
};

Result<void> validate_config(const WorkflowConfig& cfg);

// The dataset shape a run actually uses: config.data with warehouses forced
// to the scale and the run seed. Keeps generated keys and instantiated op
// ranges in agreement.
DataGenConfig normalized_data(const WorkflowConfig& cfg);

// The five full presets with the published parameter vectors.
WorkflowConfig preset_config(WorkflowKind kind);
// "software_dev" or "mini:software_dev"; minis scale T to <=5, S to <=10,
// F_r to <= T'*S', W=1, per-step mix unchanged.
Result<WorkflowConfig> named_config(std::string_view name);
std::vector<std::string> preset_names();  // full names then mini: names
// Aligned text table of the preset parameter vectors ("---" for absent).
std::string render_preset_table(bool include_minis);

nlohmann::json config_to_json(const WorkflowConfig& cfg);
Result<WorkflowConfig> config_from_json(const nlohmann::json& j);

enum class NodeStatus { active, committed, pruned, failed };
std::string_view node_status_name(NodeStatus s);

struct TreeNode {
  std::uint64_t node = 0;    // creation ordinal; root = 0
  std::uint64_t parent = 0;  // parent ordinal (0 for root itself)
  BranchId branch = 0;
  std::uint32_t depth = 0;
  std::uint32_t child_count = 0;     // children ever created, prunes included
  std::uint32_t reserved_slots = 0;  // issued, not yet turned into children
  NodeStatus status = NodeStatus::active;
};

// The shared constrained branch tree. Fanout capacity is permanent: a child
// counts against its parent even after being pruned, which is what makes
// F_r = T*S exactly sufficient for the always-prune workloads. Reserve,
// attach, and finalize transitions are linearized under one lock.
class BranchTree {
 public:
  BranchTree(const WorkflowConfig& cfg, BranchId root_branch);

  struct Reservation {
    std::uint64_t parent_node = 0;
    BranchId parent_branch = 0;
    std::uint32_t child_depth = 0;
  };
  enum class ReserveStatus { ok, wait, stuck };
  struct ReserveOutcome {
    ReserveStatus status = ReserveStatus::stuck;
    Reservation reservation;
  };

  // Uniform over eligible (node, free slot) pairs. wait: no slot now but
  // outstanding reservations may commit and open capacity. stuck: no slot
  // and no outstanding reservation, so capacity can never grow again.
  ReserveOutcome reserve(Rng& rng);
  // Branch created: reservation becomes a child node (status active).
  std::uint64_t attach(const Reservation& res, BranchId child);
  // Branch creation terminally failed: reservation consumed, no child.
  void abort_reservation(const Reservation& res);
  void finalize(std::uint64_t node, NodeStatus status);  // committed|pruned|failed

  std::uint64_t committed_steps() const;
  // Committed leaves as (node ordinal, branch), ordered by ordinal.
  std::vector<std::pair<std::uint64_t, BranchId>> frontier() const;
  std::vector<TreeNode> snapshot() const;

  // Recomputes the frontier by brute force and checks fanout/depth/slot
  // conservation; error on any violation. Cheap at benchmark scales.
  Result<void> check_invariants() const;

 private:
  std::uint64_t fanout_limit(const TreeNode& n) const;
  mutable std::mutex mu_;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint64_t> frontier_;  // node ordinals, maintained incrementally
  std::uint64_t committed_steps_ = 0;
  std::uint64_t reservations_issued_ = 0;
  std::uint64_t reservations_aborted_ = 0;
  std::uint64_t outstanding_ = 0;
  std::uint32_t root_fanout_, max_depth_;
  std::uint64_t inner_fanout_;
};

struct StepResult {
  std::uint32_t worker = 0;
  std::uint32_t step = 0;
  std::uint64_t node = 0;  // 0 when the branch was never created
  BranchId branch = 0;
  std::chrono::nanoseconds branch_phase{0};
  std::chrono::nanoseconds mutate_phase{0};
  std::chrono::nanoseconds evaluate_phase{0};
  std::chrono::nanoseconds prune_phase{0};
  NodeStatus outcome = NodeStatus::failed;
  ErrorClass error = ErrorClass::none;  // set when outcome == failed
};

struct MacroRunResult {
  WorkflowReport report;
  std::vector<StepResult> step_results;  // worker-major, step order
  std::vector<TreeNode> tree;
  // result_to_text of each completed cross-branch query, trigger order.
  std::vector<std::string> cross_results;
  // Frontier tables keyed by node ordinal, or accumulated pre-prune outcome
  // rows for always-prune workflows; empty unless capture_canonical_dump.
  std::string canonical_dump;
};

// Builds the backend named by the config, wrapping it in the fault injector
// when any fault is configured.
Result<std::unique_ptr<Backend>> make_run_backend(const WorkflowConfig& cfg);

// Full run: generate dataset, build backend, execute, report.
Result<MacroRunResult> run_workflow(const WorkflowConfig& cfg);
// Injected variants for tests and repeated runs over one dataset.
Result<MacroRunResult> run_workflow(const WorkflowConfig& cfg, Backend& backend,
                                    const Dataset& ds);

nlohmann::json macro_result_to_json(const MacroRunResult& result);

}  // namespace branchbench
