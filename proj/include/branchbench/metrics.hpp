// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "branchbench/backend.hpp"
#include "branchbench/error.hpp"
#include "branchbench/opmodel.hpp"

namespace branchbench {

// Bumped whenever the report layout changes incompatibly.
inline constexpr std::string_view kReportSchemaVersion = "branchbench-report/1";

enum class MetricCategory {
  branch_create,
  branch_connect,
  branch_delete,
  schema_op,
  data_mutation,
  read_query,
  cross_branch_query,
  wait,
};

inline constexpr std::array<MetricCategory, 8> kAllMetricCategories = {
    MetricCategory::branch_create,      MetricCategory::branch_connect,
    MetricCategory::branch_delete,      MetricCategory::schema_op,
    MetricCategory::data_mutation,      MetricCategory::read_query,
    MetricCategory::cross_branch_query, MetricCategory::wait,
};

std::string_view metric_category_name(MetricCategory c);
std::optional<MetricCategory> metric_category_from_name(std::string_view s);

// Category a descriptor's execution belongs to (lifecycle ops and waits are
// recorded by the drivers directly, not through this mapping).
MetricCategory category_for_op(OpKind kind);

// One backend call attempt. Retried operations yield one record per attempt,
// each tagged with its 0-based attempt index.
struct MetricRecord {
  MetricCategory category = MetricCategory::read_query;
  std::chrono::nanoseconds duration{0};
  ErrorClass outcome = ErrorClass::none;  // none = success
  Provenance provenance;
  std::uint32_t attempt = 0;

  bool succeeded() const { return outcome == ErrorClass::none; }
};

bool operator==(const MetricRecord& a, const MetricRecord& b);

// Append-only sample collector with one lane per worker: workers write to
// their own lane without contending, collect() concatenates in lane order
// after the run.
class MetricSink {
 public:
  explicit MetricSink(std::uint32_t lanes = 1);

  void record(std::uint32_t lane, MetricRecord rec);
  std::uint64_t count() const;
  // Lane order then append order; stable for deterministic reports.
  std::vector<MetricRecord> collect() const;

 private:
  struct Lane {
    mutable std::mutex mu;
    std::vector<MetricRecord> records;
  };
  std::vector<Lane> lanes_;
};

struct PercentileSummary {
  std::chrono::nanoseconds p50{0}, p95{0}, p99{0}, max{0};
  std::uint64_t count = 0;     // successful attempts only
  std::uint64_t failures = 0;  // failed attempts in the category
};

// Nearest-rank percentiles over the given successful durations. `ok` is
// reordered in place (partial sorts).
PercentileSummary summarize_durations(std::vector<std::chrono::nanoseconds>& ok,
                                      std::uint64_t failures);

// Nearest-rank percentiles over successful attempts in the category; absent
// when the category has no records at all.
std::optional<PercentileSummary> latency_percentiles(const std::vector<MetricRecord>& records,
                                                     MetricCategory category);

// Fraction of busy time spent on branch management: create+connect+delete
// over (that + schema/data/read/cross). Wait time counts in neither term.
// Error when there are no branch-management or productive records at all.
Result<double> branching_overhead_ratio(const std::vector<MetricRecord>& records);

struct StepAccounting {
  std::uint64_t committed = 0;
  std::uint64_t pruned = 0;
  std::uint64_t failed = 0;
  std::uint64_t cross_completed = 0;
  std::uint64_t cross_skipped = 0;

  std::uint64_t total_steps() const { return committed + pruned + failed; }
};

bool operator==(const StepAccounting& a, const StepAccounting& b);

struct WorkflowReport {
  std::string kind;       // "macro" | "micro"
  nlohmann::json config;  // echo of the run configuration
  std::chrono::nanoseconds end_to_end{0};
  bool timed_out = false;
  // live_bytes right after the dataset load; denominator for amplification.
  std::uint64_t root_footprint_bytes = 0;
  StepAccounting steps;
  std::optional<StorageStats> storage;  // absent where the backend has none
  std::vector<MetricRecord> records;
};

struct StorageEfficiency {
  double amplification = 1.0;      // peak live bytes / root footprint
  double reclaimed_fraction = 1.0;  // reclaimed / (peak - root), 1 when equal
};

Result<StorageEfficiency> storage_efficiency(const WorkflowReport& report);

// Lossless JSON form (schema version included); derived aggregates are
// emitted for consumers but ignored on load and recomputed from records.
nlohmann::json report_to_json(const WorkflowReport& report);
Result<WorkflowReport> report_from_json(const nlohmann::json& j);

// CSV of the records, one row each, fixed column order:
// version,category,outcome,duration_ns,duration_ms,attempt,workflow,worker,step,phase,ordinal
std::string report_records_csv(const WorkflowReport& report);

Result<void> write_text_file(const std::string& path, std::string_view text);
Result<std::string> read_text_file(const std::string& path);
Result<void> write_report_json(const WorkflowReport& report, const std::string& path);
Result<WorkflowReport> read_report_json(const std::string& path);

// Milliseconds with three decimals, the human-facing duration form.
std::string format_ms(std::chrono::nanoseconds d);

}  // namespace branchbench
