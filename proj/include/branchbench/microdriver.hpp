// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "branchbench/backend.hpp"
#include "branchbench/datagen.hpp"
#include "branchbench/metrics.hpp"

namespace branchbench {

// Scripted branch-lifecycle scenarios: an untimed setup phase builds a branch
// population, a timed execution phase issues lifecycle and read calls one at
// a time and records one sample per invocation.

enum class MicroOpKind { create, connect, create_connect, delete_branch, point_read, range_read };

std::string_view micro_op_name(MicroOpKind k);
std::optional<MicroOpKind> micro_op_from_name(std::string_view s);

// Branch handle a script op addresses. "tip" is the most recently created
// branch (root until the first create; setup's final tip seeds every
// worker). "new" is the branch created earlier in the same block iteration.
// "worker" is setup branch number (worker id mod setup branch count).
enum class BranchRef { root, tip, newest, worker_branch };

std::string_view branch_ref_name(BranchRef r);
std::optional<BranchRef> branch_ref_from_name(std::string_view s);

struct MicroOp {
  MicroOpKind kind = MicroOpKind::point_read;
  // The branch read, connected, or deleted; for create, the parent.
  BranchRef target = BranchRef::tip;
};

// One script step: ops executed in order, the whole list `repeat` times.
// repeat is a positive integer literal or the name of a scenario knob
// ("branches" or "repetitions") so one script serves a parameter sweep.
struct ScriptBlock {
  std::string repeat = "1";
  std::vector<MicroOp> ops;
};

struct ScenarioConfig {
  std::string name;
  std::string backend = "fullcopy";
  BackendOptions backend_options;
  // 0 means one worker per setup-created branch.
  std::uint32_t workers = 1;
  std::uint32_t branches = 1;
  std::uint32_t repetitions = 1;
  std::uint32_t range_size = 100;
  std::uint64_t seed = 42;
  std::uint32_t scale = 1;  // kept at 1 for the published shapes
  std::string table = "stock";
  std::vector<ScriptBlock> setup;      // untimed, never sampled
  std::vector<ScriptBlock> execution;  // timed, one sample per op invocation
  DataGenConfig data;
};

Result<void> validate_scenario(const ScenarioConfig& cfg);
// Dataset shape for the run: scale warehouses, the scenario seed.
DataGenConfig scenario_data(const ScenarioConfig& cfg);

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
Result<ScenarioConfig> scenario_from_json(const nlohmann::json& j);

// The fixed shapes: spine_create, wide_connect, read_single_thread,
// read_multi_thread, point_vs_range.
std::vector<ScenarioConfig> builtin_scenarios();
Result<ScenarioConfig> builtin_scenario(std::string_view name);
std::vector<std::string> builtin_scenario_names();

struct Sample {
  MicroOpKind kind = MicroOpKind::point_read;
  std::uint64_t ordinal = 0;  // 1-based block iteration, per worker
  std::uint32_t worker = 0;
  std::chrono::nanoseconds duration{0};
  ErrorClass outcome = ErrorClass::none;

  bool succeeded() const { return outcome == ErrorClass::none; }
};

// Power-of-two bucket an ordinal falls in (1, 2, 4, 8, ...): percentile
// groups coarse enough to expose depth trends without per-ordinal noise.
std::uint64_t ordinal_bucket(std::uint64_t ordinal);

struct MicroSummary {
  MicroOpKind kind = MicroOpKind::point_read;
  std::uint64_t bucket = 1;
  PercentileSummary stats;
};

struct MicroRunResult {
  WorkflowReport report;  // kind "micro"; records mirror the samples
  std::vector<Sample> samples;          // worker-major, issue order
  std::vector<MicroSummary> summaries;  // (kind, bucket) ascending
  // Sum of sample durations (create_connect excluded: it is the sum of two
  // samples already counted). Setup work appears nowhere in it.
  std::chrono::nanoseconds timed_total{0};
  std::chrono::nanoseconds execution_wall{0};
  double throughput_ops_per_sec = 0;  // issued ops over execution wall time
};

// Loads the dataset into the backend (must be fresh), runs setup untimed,
// then the execution script. Script errors (bad handles, short tables)
// surface before any sample is taken.
Result<MicroRunResult> run_scenario(const ScenarioConfig& cfg, Backend& backend,
                                    const Dataset& ds);
Result<MicroRunResult> run_scenario(const ScenarioConfig& cfg);

nlohmann::json micro_result_to_json(const MicroRunResult& result);

}  // namespace branchbench
