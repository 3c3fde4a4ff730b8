// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <fmt/format.h>

namespace branchbench {

std::string_view metric_category_name(MetricCategory c) {
  switch (c) {
    case MetricCategory::branch_create: return "branch_create";
    case MetricCategory::branch_connect: return "branch_connect";
    case MetricCategory::branch_delete: return "branch_delete";
    case MetricCategory::schema_op: return "schema_op";
    case MetricCategory::data_mutation: return "data_mutation";
    case MetricCategory::read_query: return "read_query";
    case MetricCategory::cross_branch_query: return "cross_branch_query";
    case MetricCategory::wait: return "wait";
  }
  return "?";
}

std::optional<MetricCategory> metric_category_from_name(std::string_view s) {
  for (MetricCategory c : kAllMetricCategories)
    if (metric_category_name(c) == s) return c;
  return std::nullopt;
}

MetricCategory category_for_op(OpKind kind) {
  switch (kind) {
    case OpKind::add_column:
    case OpKind::drop_column:
    case OpKind::create_index: return MetricCategory::schema_op;
    case OpKind::insert_rows:
    case OpKind::update_where:
    case OpKind::delete_where: return MetricCategory::data_mutation;
    case OpKind::point_read:
    case OpKind::range_read:
    case OpKind::aggregate: return MetricCategory::read_query;
    case OpKind::cross_branch_aggregate: return MetricCategory::cross_branch_query;
  }
  return MetricCategory::read_query;
}

namespace {

bool provenance_equal(const Provenance& a, const Provenance& b) {
  return a.workflow == b.workflow && a.worker == b.worker && a.step == b.step &&
         a.phase == b.phase && a.ordinal == b.ordinal;
}

std::optional<OpPhase> phase_from_name(std::string_view s) {
  for (OpPhase p : {OpPhase::load, OpPhase::branch, OpPhase::mutate, OpPhase::evaluate,
                    OpPhase::cross})
    if (op_phase_name(p) == s) return p;
  return std::nullopt;
}

}  // namespace

bool operator==(const MetricRecord& a, const MetricRecord& b) {
  return a.category == b.category && a.duration == b.duration && a.outcome == b.outcome &&
         a.attempt == b.attempt && provenance_equal(a.provenance, b.provenance);
}

bool operator==(const StepAccounting& a, const StepAccounting& b) {
  return a.committed == b.committed && a.pruned == b.pruned && a.failed == b.failed &&
         a.cross_completed == b.cross_completed && a.cross_skipped == b.cross_skipped;
}

MetricSink::MetricSink(std::uint32_t lanes) : lanes_(lanes ? lanes : 1) {}

void MetricSink::record(std::uint32_t lane, MetricRecord rec) {
  Lane& l = lanes_[lane % lanes_.size()];
  std::lock_guard<std::mutex> lk(l.mu);
  l.records.push_back(std::move(rec));
}

std::uint64_t MetricSink::count() const {
  std::uint64_t n = 0;
  for (const Lane& l : lanes_) {
    std::lock_guard<std::mutex> lk(l.mu);
    n += l.records.size();
  }
  return n;
}

std::vector<MetricRecord> MetricSink::collect() const {
  std::vector<MetricRecord> out;
  for (const Lane& l : lanes_) {
    std::lock_guard<std::mutex> lk(l.mu);
    out.insert(out.end(), l.records.begin(), l.records.end());
  }
  return out;
}

PercentileSummary summarize_durations(std::vector<std::chrono::nanoseconds>& ok,
                                      std::uint64_t failures) {
  PercentileSummary s;
  s.count = ok.size();
  s.failures = failures;
  if (!ok.empty()) {
    std::sort(ok.begin(), ok.end());
    const auto nearest_rank = [&](double p) {
      const std::size_t n = ok.size();
      std::size_t rank = static_cast<std::size_t>(
          std::ceil(p / 100.0 * static_cast<double>(n)));
      if (rank == 0) rank = 1;
      return ok[rank - 1];
    };
    s.p50 = nearest_rank(50);
    s.p95 = nearest_rank(95);
    s.p99 = nearest_rank(99);
    s.max = ok.back();
  }
  return s;
}

std::optional<PercentileSummary> latency_percentiles(const std::vector<MetricRecord>& records,
                                                     MetricCategory category) {
  std::vector<std::chrono::nanoseconds> ok_durations;
  std::uint64_t failures = 0;
  for (const auto& r : records) {
    if (r.category != category) continue;
    if (r.succeeded())
      ok_durations.push_back(r.duration);
    else
      ++failures;
  }
  if (ok_durations.empty() && failures == 0) return std::nullopt;
  return summarize_durations(ok_durations, failures);
}

Result<double> branching_overhead_ratio(const std::vector<MetricRecord>& records) {
  // Durations of every attempt count: a failed create still burned the
  // worker's time. Backoff between attempts is recorded as wait and excluded.
  std::int64_t branch_ns = 0, productive_ns = 0;
  bool any = false;
  for (const auto& r : records) {
    switch (r.category) {
      case MetricCategory::branch_create:
      case MetricCategory::branch_connect:
      case MetricCategory::branch_delete:
        branch_ns += r.duration.count();
        any = true;
        break;
      case MetricCategory::schema_op:
      case MetricCategory::data_mutation:
      case MetricCategory::read_query:
      case MetricCategory::cross_branch_query:
        productive_ns += r.duration.count();
        any = true;
        break;
      case MetricCategory::wait: break;
    }
  }
  if (!any)
    return make_error(ErrorClass::precondition,
                      "overhead ratio undefined: no branch or productive samples");
  if (branch_ns == 0) return 0.0;
  return static_cast<double>(branch_ns) / static_cast<double>(branch_ns + productive_ns);
}

Result<StorageEfficiency> storage_efficiency(const WorkflowReport& report) {
  if (!report.storage)
    return make_error(ErrorClass::unsupported_operation,
                      "backend reported no storage statistics");
  if (report.root_footprint_bytes == 0)
    return make_error(ErrorClass::precondition, "root footprint unknown");
  const StorageStats& st = *report.storage;
  StorageEfficiency e;
  e.amplification = static_cast<double>(st.peak_live_bytes) /
                    static_cast<double>(report.root_footprint_bytes);
  if (st.peak_live_bytes <= report.root_footprint_bytes)
    e.reclaimed_fraction = 1.0;
  else
    e.reclaimed_fraction = static_cast<double>(st.reclaimed_bytes) /
                           static_cast<double>(st.peak_live_bytes - report.root_footprint_bytes);
  return e;
}

namespace {

nlohmann::json storage_to_json(const StorageStats& st) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [branch, bytes] : st.per_branch_bytes)
    per[fmt::format("{}", branch)] = bytes;
  return {{"live_bytes", st.live_bytes},
          {"reclaimable_bytes", st.reclaimable_bytes},
          {"peak_live_bytes", st.peak_live_bytes},
          {"reclaimed_bytes", st.reclaimed_bytes},
          {"per_branch_bytes", std::move(per)}};
}

StorageStats storage_from_json(const nlohmann::json& j) {
  StorageStats st;
  st.live_bytes = j.value("live_bytes", 0ull);
  st.reclaimable_bytes = j.value("reclaimable_bytes", 0ull);
  st.peak_live_bytes = j.value("peak_live_bytes", 0ull);
  st.reclaimed_bytes = j.value("reclaimed_bytes", 0ull);
  if (j.contains("per_branch_bytes"))
    for (const auto& [k, v] : j.at("per_branch_bytes").items())
      st.per_branch_bytes[std::stoull(k)] = v.get<std::uint64_t>();
  return st;
}

nlohmann::json record_to_json(const MetricRecord& r) {
  return {{"category", metric_category_name(r.category)},
          {"outcome", error_class_name(r.outcome)},
          {"duration_ns", r.duration.count()},
          {"attempt", r.attempt},
          {"workflow", r.provenance.workflow},
          {"worker", r.provenance.worker},
          {"step", r.provenance.step},
          {"phase", op_phase_name(r.provenance.phase)},
          {"ordinal", r.provenance.ordinal}};
}

Result<MetricRecord> record_from_json(const nlohmann::json& j) {
  MetricRecord r;
  const auto cat = metric_category_from_name(j.value("category", ""));
  if (!cat) return make_error(ErrorClass::configuration, "bad record category");
  r.category = *cat;
  const auto out = error_class_from_name(j.value("outcome", ""));
  if (!out) return make_error(ErrorClass::configuration, "bad record outcome");
  r.outcome = *out;
  r.duration = std::chrono::nanoseconds(j.value("duration_ns", 0ll));
  r.attempt = j.value("attempt", 0u);
  r.provenance.workflow = j.value("workflow", "");
  r.provenance.worker = j.value("worker", 0u);
  r.provenance.step = j.value("step", 0u);
  const auto ph = phase_from_name(j.value("phase", ""));
  if (!ph) return make_error(ErrorClass::configuration, "bad record phase");
  r.provenance.phase = *ph;
  r.provenance.ordinal = j.value("ordinal", 0u);
  return r;
}

}  // namespace

nlohmann::json report_to_json(const WorkflowReport& report) {
  nlohmann::json j;
  j["version"] = kReportSchemaVersion;
  j["kind"] = report.kind;
  j["config"] = report.config;
  j["end_to_end_ns"] = report.end_to_end.count();
  j["timed_out"] = report.timed_out;
  j["root_footprint_bytes"] = report.root_footprint_bytes;
  j["steps"] = {{"committed", report.steps.committed},
                {"pruned", report.steps.pruned},
                {"failed", report.steps.failed},
                {"cross_completed", report.steps.cross_completed},
                {"cross_skipped", report.steps.cross_skipped}};
  j["storage"] = report.storage ? storage_to_json(*report.storage) : nlohmann::json();
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : report.records) recs.push_back(record_to_json(r));
  j["records"] = std::move(recs);

  // Derived block: convenience for consumers, recomputed on load.
  nlohmann::json derived;
  if (auto ratio = branching_overhead_ratio(report.records); ratio.ok())
    derived["overhead_ratio"] = ratio.value();
  nlohmann::json pct = nlohmann::json::object();
  for (MetricCategory c : kAllMetricCategories) {
    if (auto s = latency_percentiles(report.records, c)) {
      pct[std::string(metric_category_name(c))] = {
          {"p50_ns", s->p50.count()}, {"p95_ns", s->p95.count()}, {"p99_ns", s->p99.count()},
          {"max_ns", s->max.count()}, {"count", s->count},       {"failures", s->failures}};
    }
  }
  derived["percentiles"] = std::move(pct);
  if (auto eff = storage_efficiency(report); eff.ok())
    derived["storage_efficiency"] = {{"amplification", eff.value().amplification},
                                     {"reclaimed_fraction", eff.value().reclaimed_fraction}};
  j["derived"] = std::move(derived);
  return j;
}

Result<WorkflowReport> report_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("version", "") != kReportSchemaVersion)
    return make_error(ErrorClass::configuration,
                      fmt::format("unsupported report version (want {})", kReportSchemaVersion));
  WorkflowReport r;
  r.kind = j.value("kind", "");
  r.config = j.value("config", nlohmann::json());
  r.end_to_end = std::chrono::nanoseconds(j.value("end_to_end_ns", 0ll));
  r.timed_out = j.value("timed_out", false);
  r.root_footprint_bytes = j.value("root_footprint_bytes", 0ull);
  if (j.contains("steps")) {
    const auto& s = j.at("steps");
    r.steps.committed = s.value("committed", 0ull);
    r.steps.pruned = s.value("pruned", 0ull);
    r.steps.failed = s.value("failed", 0ull);
    r.steps.cross_completed = s.value("cross_completed", 0ull);
    r.steps.cross_skipped = s.value("cross_skipped", 0ull);
  }
  if (j.contains("storage") && !j.at("storage").is_null())
    r.storage = storage_from_json(j.at("storage"));
  if (j.contains("records"))
    for (const auto& rec : j.at("records")) {
      auto parsed = record_from_json(rec);
      if (!parsed.ok()) return parsed.take_error();
      r.records.push_back(parsed.take());
    }
  return r;
}

std::string report_records_csv(const WorkflowReport& report) {
  std::string out =
      "version,category,outcome,duration_ns,duration_ms,attempt,workflow,worker,step,phase,"
      "ordinal\n";
  for (const auto& r : report.records) {
    out += fmt::format("{},{},{},{},{:.3f},{},{},{},{},{},{}\n", kReportSchemaVersion,
                       metric_category_name(r.category), error_class_name(r.outcome),
                       r.duration.count(), static_cast<double>(r.duration.count()) / 1e6,
                       r.attempt, r.provenance.workflow, r.provenance.worker, r.provenance.step,
                       op_phase_name(r.provenance.phase), r.provenance.ordinal);
  }
  return out;
}

Result<void> write_text_file(const std::string& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) return make_error(ErrorClass::io, fmt::format("cannot open {} for writing", path));
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.flush();
  if (!f) return make_error(ErrorClass::io, fmt::format("write to {} failed", path));
  return {};
}

Result<std::string> read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return make_error(ErrorClass::io, fmt::format("cannot open {}", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Result<void> write_report_json(const WorkflowReport& report, const std::string& path) {
  return write_text_file(path, report_to_json(report).dump(2) + "\n");
}

Result<WorkflowReport> read_report_json(const std::string& path) {
  auto text = read_text_file(path);
  if (!text.ok()) return text.take_error();
  const auto j = nlohmann::json::parse(text.value(), nullptr, false);
  if (j.is_discarded())
    return make_error(ErrorClass::configuration, fmt::format("{} is not valid JSON", path));
  return report_from_json(j);
}

std::string format_ms(std::chrono::nanoseconds d) {
  return fmt::format("{:.3f} ms", static_cast<double>(d.count()) / 1e6);
}

}  // namespace branchbench
