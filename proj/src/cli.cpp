// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "branchbench/csvio.hpp"
#include "branchbench/macrodriver.hpp"
#include "branchbench/metrics.hpp"
#include "branchbench/microdriver.hpp"

namespace branchbench {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kUsage = 2;

std::string out_root() {
  const char* dir = std::getenv("BRANCHBENCH_OUT_DIR");
  return (dir != nullptr && *dir != '\0') ? dir : ".";
}

std::string resolve_out(const std::string& flag, const std::string& fallback_name) {
  if (!flag.empty()) return flag;
  return (fs::path(out_root()) / fallback_name).string();
}

// Preset/scenario names feed file names; "mini:mcts" must not become a path.
std::string slug(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/' || c == ' ') c = '-';
  return s;
}

void usage_error(const std::string& msg) {
  fmt::print(stderr, "error: {}\n", msg);
}

// "n/a" when the report has too few records or no storage capability.
std::string ratio_text(const WorkflowReport& report) {
  auto r = branching_overhead_ratio(report.records);
  return r.ok() ? fmt::format("{:.3f}", r.value()) : "n/a";
}

std::string storage_text(const WorkflowReport& report) {
  auto eff = storage_efficiency(report);
  if (!eff.ok()) return "n/a";
  return fmt::format("amplification {:.2f}x, reclaimed {:.0f}%", eff.value().amplification,
                     eff.value().reclaimed_fraction * 100.0);
}

std::uint64_t failed_records(const WorkflowReport& report) {
  std::uint64_t n = 0;
  for (const auto& r : report.records)
    if (!r.succeeded() && r.category != MetricCategory::wait) ++n;
  return n;
}

void print_report_summary(const WorkflowReport& report) {
  const auto cfg_str = [&](const char* key) {
    return report.config.contains(key) && report.config.at(key).is_string()
               ? report.config.at(key).get<std::string>()
               : std::string("?");
  };
  const std::uint64_t seed = report.config.value("seed", std::uint64_t{0});
  fmt::print("{} {} on {}  seed {}\n", report.kind,
             cfg_str(report.kind == "macro" ? "workflow" : "name"), cfg_str("backend"), seed);
  fmt::print("  end-to-end       {}{}\n", format_ms(report.end_to_end),
             report.timed_out ? "  (TIMED OUT)" : "");
  if (report.kind == "macro") {
    fmt::print("  steps            committed {}, pruned {}, failed {}\n", report.steps.committed,
               report.steps.pruned, report.steps.failed);
    fmt::print("  cross queries    completed {}, skipped {}\n", report.steps.cross_completed,
               report.steps.cross_skipped);
  }
  fmt::print("  overhead ratio   {}\n", ratio_text(report));
  fmt::print("  storage          {}\n", storage_text(report));
  fmt::print("  records          {} ({} failed attempts)\n", report.records.size(),
             failed_records(report));
}

void print_micro_breakdown(const MicroRunResult& res) {
  fmt::print("  throughput       {:.1f} ops/s over {}\n", res.throughput_ops_per_sec,
             format_ms(res.execution_wall));
  fmt::print("  {:<16}{:>8}{:>8}{:>14}{:>14}{:>14}\n", "op", "bucket", "count", "p50", "p95",
             "p99");
  for (const auto& m : res.summaries)
    fmt::print("  {:<16}{:>8}{:>8}{:>14}{:>14}{:>14}\n", micro_op_name(m.kind), m.bucket,
               m.stats.count, format_ms(m.stats.p50), format_ms(m.stats.p95),
               format_ms(m.stats.p99));
}

Result<void> write_json_file(const nlohmann::json& j, const std::string& path) {
  return write_text_file(path, j.dump(2) + "\n");
}

// <report>.json -> <report>.records.csv next to it.
std::string sibling_csv(const std::string& report_path, const char* tag) {
  fs::path p(report_path);
  fs::path stem = p.parent_path() / p.stem();
  return fmt::format("{}.{}.csv", stem.string(), tag);
}

Result<void> emit_csv_files(const WorkflowReport& report, const nlohmann::json& raw,
                            const std::string& report_path) {
  if (auto w = write_text_file(sibling_csv(report_path, "records"), report_records_csv(report));
      !w.ok())
    return w.take_error();
  if (raw.contains("micro") && raw.at("micro").contains("summaries")) {
    std::string csv = "op,bucket,count,failures,p50_ns,p95_ns,p99_ns,max_ns\n";
    for (const auto& m : raw.at("micro").at("summaries"))
      csv += fmt::format("{},{},{},{},{},{},{},{}\n", m.value("op", ""),
                         m.value("bucket", std::uint64_t{0}), m.value("count", std::uint64_t{0}),
                         m.value("failures", std::uint64_t{0}),
                         m.value("p50_ns", std::int64_t{0}), m.value("p95_ns", std::int64_t{0}),
                         m.value("p99_ns", std::int64_t{0}), m.value("max_ns", std::int64_t{0}));
    if (auto w = write_text_file(sibling_csv(report_path, "summaries"), csv); !w.ok())
      return w.take_error();
  }
  return {};
}

int finish_run(const WorkflowReport& report, const nlohmann::json& raw,
               const std::string& out_path, const std::string& emit, double fail_threshold,
               std::uint64_t failed, std::uint64_t total) {
  if (auto w = write_json_file(raw, out_path); !w.ok()) {
    fmt::print(stderr, "error: {}\n", w.error().to_string());
    return kRunFailure;
  }
  if (emit == "csv") {
    if (auto w = emit_csv_files(report, raw, out_path); !w.ok()) {
      fmt::print(stderr, "error: {}\n", w.error().to_string());
      return kRunFailure;
    }
  }
  print_report_summary(report);
  fmt::print("  report           {}\n", out_path);
  if (report.timed_out) {
    fmt::print(stderr, "run failed: timed out\n");
    return kRunFailure;
  }
  const double fraction =
      total == 0 ? 0.0 : static_cast<double>(failed) / static_cast<double>(total);
  if (fraction > fail_threshold) {
    fmt::print(stderr, "run failed: failure fraction {:.3f} above threshold {:.3f}\n", fraction,
               fail_threshold);
    return kRunFailure;
  }
  return kOk;
}

struct MacroArgs {
  std::string preset, config_file, backend, out, emit = "json";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> workers;
  std::optional<double> timeout_secs;
  double fail_threshold = 0.0;
};

int cmd_macro(const MacroArgs& a) {
  WorkflowConfig cfg;
  if (!a.preset.empty()) {
    auto named = named_config(a.preset);
    if (!named.ok()) {
      usage_error(named.error().message);
      return kUsage;
    }
    cfg = named.take();
  } else {
    auto text = read_text_file(a.config_file);
    if (!text.ok()) {
      usage_error(text.error().to_string());
      return kUsage;
    }
    auto j = nlohmann::json::parse(text.value(), nullptr, false);
    if (j.is_discarded()) {
      usage_error(fmt::format("{} is not valid JSON", a.config_file));
      return kUsage;
    }
    auto parsed = config_from_json(j);
    if (!parsed.ok()) {
      usage_error(parsed.error().to_string());
      return kUsage;
    }
    cfg = parsed.take();
  }
  if (!a.backend.empty()) cfg.backend = a.backend;
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  if (a.timeout_secs)
    cfg.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(*a.timeout_secs * 1000.0));
  if (auto v = validate_config(cfg); !v.ok()) {
    usage_error(v.error().to_string());
    return kUsage;
  }

  auto res = run_workflow(cfg);
  if (!res.ok()) {
    fmt::print(stderr, "run failed: {}\n", res.error().to_string());
    return kRunFailure;
  }
  const auto& report = res.value().report;
  const std::string label = !a.preset.empty() ? a.preset : std::string(workflow_name(cfg.workflow));
  const std::string out = resolve_out(
      a.out, fmt::format("macro-{}-{}-seed{}.json", slug(label), cfg.backend, cfg.seed));
  return finish_run(report, macro_result_to_json(res.value()), out, a.emit, a.fail_threshold,
                    report.steps.failed, report.steps.total_steps());
}

struct MicroArgs {
  std::string scenario, config_file, backend, out, emit = "json";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> branches, workers;
  double fail_threshold = 0.0;
};

int cmd_micro(const MicroArgs& a) {
  ScenarioConfig cfg;
  if (!a.scenario.empty()) {
    auto named = builtin_scenario(a.scenario);
    if (!named.ok()) {
      usage_error(named.error().message);
      return kUsage;
    }
    cfg = named.take();
  } else {
    auto text = read_text_file(a.config_file);
    if (!text.ok()) {
      usage_error(text.error().to_string());
      return kUsage;
    }
    auto j = nlohmann::json::parse(text.value(), nullptr, false);
    if (j.is_discarded()) {
      usage_error(fmt::format("{} is not valid JSON", a.config_file));
      return kUsage;
    }
    auto parsed = scenario_from_json(j);
    if (!parsed.ok()) {
      usage_error(parsed.error().to_string());
      return kUsage;
    }
    cfg = parsed.take();
  }
  if (!a.backend.empty()) cfg.backend = a.backend;
  if (a.seed) cfg.seed = *a.seed;
  if (a.branches) cfg.branches = *a.branches;
  if (a.workers) cfg.workers = *a.workers;
  if (auto v = validate_scenario(cfg); !v.ok()) {
    usage_error(v.error().to_string());
    return kUsage;
  }

  auto res = run_scenario(cfg);
  if (!res.ok()) {
    fmt::print(stderr, "run failed: {}\n", res.error().to_string());
    return kRunFailure;
  }
  const auto& report = res.value().report;
  const std::string out = resolve_out(
      a.out, fmt::format("micro-{}-{}-seed{}.json", slug(cfg.name), cfg.backend, cfg.seed));
  const int rc = finish_run(report, micro_result_to_json(res.value()), out, a.emit,
                            a.fail_threshold, failed_records(report), report.records.size());
  if (rc == kOk) print_micro_breakdown(res.value());
  return rc;
}

struct DatagenArgs {
  std::uint32_t scale = 1;
  std::uint64_t seed = 42;
  std::string out;
};

int cmd_datagen(const DatagenArgs& a) {
  DataGenConfig cfg;
  cfg.warehouses = a.scale;
  cfg.seed = a.seed;
  auto ds = generate_dataset(cfg);
  if (!ds.ok()) {
    fmt::print(stderr, "run failed: {}\n", ds.error().to_string());
    return kRunFailure;
  }
  const std::string out =
      resolve_out(a.out, fmt::format("dataset-w{}-seed{}", a.scale, a.seed));
  if (auto w = export_dataset(ds.value(), out); !w.ok()) {
    fmt::print(stderr, "run failed: {}\n", w.error().to_string());
    return kRunFailure;
  }
  fmt::print("dataset  {} warehouses, seed {}\n", a.scale, a.seed);
  for (const auto& t : ds.value().tables)
    fmt::print("  {:<12}{:>9} rows  digest {:016x}\n", t.schema.name, t.rows.size(),
               table_digest(t));
  fmt::print("  {:<12}{:>9} rows, {} bytes total\n", "all tables", ds.value().row_count(),
             ds.value().data_bytes());
  fmt::print("  written to {}\n", out);
  return kOk;
}

struct ReportArgs {
  std::string in, emit = "json";
};

int cmd_report(const ReportArgs& a) {
  auto text = read_text_file(a.in);
  if (!text.ok()) {
    fmt::print(stderr, "error: {}\n", text.error().to_string());
    return kRunFailure;
  }
  auto j = nlohmann::json::parse(text.value(), nullptr, false);
  if (j.is_discarded()) {
    fmt::print(stderr, "error: {} is not valid JSON\n", a.in);
    return kRunFailure;
  }
  auto report = report_from_json(j);
  if (!report.ok()) {
    fmt::print(stderr, "error: {}\n", report.error().to_string());
    return kRunFailure;
  }
  print_report_summary(report.value());
  if (a.emit == "csv") {
    if (auto w = emit_csv_files(report.value(), j, a.in); !w.ok()) {
      fmt::print(stderr, "error: {}\n", w.error().to_string());
      return kRunFailure;
    }
    fmt::print("  csv              {}\n", sibling_csv(a.in, "records"));
  }
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"workload generator and measurement harness for branchable databases"};
  app.require_subcommand(1);

  MacroArgs macro;
  auto* macro_cmd = app.add_subcommand("macro-run", "run an end-to-end branching workflow");
  auto* preset_opt =
      macro_cmd->add_option("--preset", macro.preset, "preset name (see list-presets)");
  macro_cmd->add_option("--config", macro.config_file, "workflow config JSON file")
      ->excludes(preset_opt);
  macro_cmd->add_option("--backend", macro.backend, "fullcopy | deltaoverlay | pathcopy");
  macro_cmd->add_option("--seed", macro.seed, "run seed");
  macro_cmd->add_option("--workers", macro.workers, "override worker count");
  macro_cmd->add_option("--timeout", macro.timeout_secs, "per-run timeout in seconds");
  macro_cmd->add_option("--out", macro.out, "report path (default under BRANCHBENCH_OUT_DIR)");
  macro_cmd->add_option("--fail-threshold", macro.fail_threshold,
                        "failed-step fraction tolerated before exit 1");
  macro_cmd->add_option("--emit", macro.emit, "json | csv (csv adds record/summary files)")
      ->check(CLI::IsMember({"json", "csv"}));

  MicroArgs micro;
  auto* micro_cmd = app.add_subcommand("micro-run", "run a branch-lifecycle scenario");
  auto* scenario_opt =
      micro_cmd->add_option("--scenario", micro.scenario, "scenario name (five built in)");
  micro_cmd->add_option("--config", micro.config_file, "scenario config JSON file")
      ->excludes(scenario_opt);
  micro_cmd->add_option("--backend", micro.backend, "fullcopy | deltaoverlay | pathcopy");
  micro_cmd->add_option("--seed", micro.seed, "run seed");
  micro_cmd->add_option("--branches", micro.branches, "override the branch-count knob");
  micro_cmd->add_option("--workers", micro.workers, "override the worker count");
  micro_cmd->add_option("--out", micro.out, "report path (default under BRANCHBENCH_OUT_DIR)");
  micro_cmd->add_option("--fail-threshold", micro.fail_threshold,
                        "failed-sample fraction tolerated before exit 1");
  micro_cmd->add_option("--emit", micro.emit, "json | csv (csv adds record/summary files)")
      ->check(CLI::IsMember({"json", "csv"}));

  DatagenArgs datagen;
  auto* datagen_cmd = app.add_subcommand("datagen", "generate and export a dataset");
  datagen_cmd->add_option("--scale", datagen.scale, "warehouse count")
      ->check(CLI::PositiveNumber);
  datagen_cmd->add_option("--seed", datagen.seed, "generator seed");
  datagen_cmd->add_option("--out", datagen.out, "output directory");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "summarize a saved report");
  report_cmd->add_option("--in", report.in, "report JSON file")->required();
  report_cmd->add_option("--emit", report.emit, "json | csv (csv writes files alongside)")
      ->check(CLI::IsMember({"json", "csv"}));

  auto* list_cmd = app.add_subcommand("list-presets", "print the preset parameter table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (macro_cmd->parsed()) {
    if (macro.preset.empty() && macro.config_file.empty()) {
      usage_error("macro-run needs --preset or --config");
      return kUsage;
    }
    return cmd_macro(macro);
  }
  if (micro_cmd->parsed()) {
    if (micro.scenario.empty() && micro.config_file.empty()) {
      usage_error("micro-run needs --scenario or --config");
      return kUsage;
    }
    return cmd_micro(micro);
  }
  if (datagen_cmd->parsed()) return cmd_datagen(datagen);
  if (report_cmd->parsed()) return cmd_report(report);
  if (list_cmd->parsed()) {
    fmt::print("{}", render_preset_table(/*include_minis=*/true));
    return kOk;
  }
  return kUsage;
}

}  // namespace branchbench
