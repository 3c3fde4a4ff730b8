// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "branchbench/datagen.hpp"
#include "branchbench/opmodel.hpp"

namespace branchbench {

enum class WorkflowKind { software_dev, failure_repro, data_cleaning, mcts, simulation };

std::string_view workflow_name(WorkflowKind k);
std::optional<WorkflowKind> workflow_from_name(std::string_view s);
std::vector<WorkflowKind> all_workflows();

struct StepContext {
  WorkflowKind workflow = WorkflowKind::software_dev;
  std::uint32_t worker = 0;
  std::uint32_t step = 0;
  std::uint32_t total_steps = 1;
  std::uint32_t schema_ops = 0;      // M_s
  std::uint32_t data_mutations = 0;  // M_d
  std::uint32_t read_queries = 0;    // Q_v
  std::uint64_t seed = 42;
  DataGenConfig data;  // value/key ranges of the loaded dataset
};

struct StepOps {
  std::vector<OperationDescriptor> mutate;    // M_s schema ops then M_d DML
  std::vector<OperationDescriptor> evaluate;  // Q_v read queries
};

// Deterministic function of (workflow, seed, worker, step): instantiating
// twice yields identical descriptors regardless of scheduling. Every
// non-base column an op references is added earlier in the same step, so a
// step is valid on any branch of the tree (per-step closure).
StepOps instantiate_step(const StepContext& ctx);

// Cross-branch query k over the given branch selection. schema_ops is the
// run's M_s: workflows whose cross query targets generated columns fall back
// to base columns when the run performs no schema changes.
OperationDescriptor instantiate_cross_branch(WorkflowKind kind, std::uint64_t seed,
                                             std::uint32_t query_index,
                                             std::vector<BranchSel> branches,
                                             const DataGenConfig& data,
                                             std::uint32_t schema_ops);

}  // namespace branchbench
