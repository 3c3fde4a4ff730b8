// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "branchbench/cli.hpp"
#include "branchbench/macrodriver.hpp"
#include "branchbench/microdriver.hpp"
#include "test_util.hpp"

using namespace branchbench;

namespace {

namespace fs = std::filesystem;

int cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"branchbench"};
  argv.insert(argv.end(), args);
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "branchbench_cli_tests";
  fs::create_directories(dir);
  return dir;
}

// Tiny dataset + two steps: a macro config that runs in milliseconds.
nlohmann::json tiny_macro_config() {
  WorkflowConfig c;
  c.workflow = WorkflowKind::mcts;
  c.workers = 1;
  c.steps = 2;
  c.root_fanout = 2;
  c.max_depth = 1;
  c.data_mutations = 1;
  c.read_queries = 1;
  c.seed = 11;
  c.backend = "deltaoverlay";
  c.data.m.districts_per_warehouse = 2;
  c.data.m.customers_per_district = 8;
  c.data.m.orders_per_district = 6;
  c.data.m.order_lines_per_order = 3;
  c.data.m.new_orders_per_district = 2;
  c.data.m.stock_per_warehouse = 25;
  c.data.m.items = 25;
  c.data.m.suppliers = 5;
  return config_to_json(c);
}

std::string write_json(const nlohmann::json& j, const std::string& name) {
  const auto path = (scratch_dir() / name).string();
  std::ofstream(path) << j.dump(2);
  return path;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 2") {
  CHECK(cli({}) == 2);                                     // no subcommand
  CHECK(cli({"frobnicate"}) == 2);                         // unknown subcommand
  CHECK(cli({"macro-run"}) == 2);                          // neither preset nor config
  CHECK(cli({"macro-run", "--preset", "nope"}) == 2);      // unknown preset
  CHECK(cli({"micro-run"}) == 2);                          // neither scenario nor config
  CHECK(cli({"micro-run", "--scenario", "warp"}) == 2);    // unknown scenario
  CHECK(cli({"list-presets", "--verbose"}) == 2);          // unknown flag
  CHECK(cli({"macro-run", "--preset", "mcts", "--emit", "yaml"}) == 2);
  CHECK(cli({"report"}) == 2);                             // missing required --in
  const auto cfg = write_json(tiny_macro_config(), "conflict.json");
  CHECK(cli({"macro-run", "--preset", "mcts", "--config", cfg.c_str()}) == 2);
}

TEST_CASE("help exits cleanly") {
  CHECK(cli({"--help"}) == 0);
  CHECK(cli({"macro-run", "--help"}) == 0);
}

TEST_CASE("list-presets succeeds") { CHECK(cli({"list-presets"}) == 0); }

TEST_CASE("macro-run writes a loadable report and exits by outcome") {
  const auto cfg = write_json(tiny_macro_config(), "tiny_macro.json");
  const auto out = (scratch_dir() / "tiny_macro_report.json").string();
  REQUIRE(cli({"macro-run", "--config", cfg.c_str(), "--out", out.c_str()}) == 0);

  const auto j = load_json(out);
  CHECK(j.at("kind") == "macro");
  CHECK(j.at("config").at("workflow") == "mcts");
  CHECK(j.at("config").at("seed") == 11);
  const auto& steps = j.at("steps");
  CHECK(steps.at("committed").get<int>() + steps.at("pruned").get<int>() +
            steps.at("failed").get<int>() ==
        2);
  CHECK(j.contains("macro"));

  // Flag overrides land in the echoed config.
  const auto out2 = (scratch_dir() / "tiny_macro_fc.json").string();
  REQUIRE(cli({"macro-run", "--config", cfg.c_str(), "--backend", "fullcopy", "--seed", "99",
               "--out", out2.c_str()}) == 0);
  const auto j2 = load_json(out2);
  CHECK(j2.at("config").at("backend") == "fullcopy");
  CHECK(j2.at("config").at("seed") == 99);
}

TEST_CASE("fail-threshold separates exit 1 from exit 0") {
  // Two slots on one root, four steps: two must fail with capacity errors.
  auto j = tiny_macro_config();
  j["steps"] = 4;
  j["root_fanout"] = 2;
  j["retry"] = {{"max_attempts", 1}};
  const auto cfg = write_json(j, "starved.json");
  const auto out = (scratch_dir() / "starved_report.json").string();
  CHECK(cli({"macro-run", "--config", cfg.c_str(), "--out", out.c_str()}) == 1);
  CHECK(cli({"macro-run", "--config", cfg.c_str(), "--out", out.c_str(), "--fail-threshold",
             "0.5"}) == 0);
  const auto report = load_json(out);
  CHECK(report.at("steps").at("committed") == 2);
  CHECK(report.at("steps").at("failed") == 2);
}

TEST_CASE("micro-run writes report, csv emission adds sibling files") {
  ScenarioConfig sc;
  sc.name = "cli_probe";
  sc.branches = 2;
  sc.repetitions = 5;
  sc.range_size = 10;
  sc.seed = 3;
  sc.backend = "deltaoverlay";
  sc.data.m.districts_per_warehouse = 2;
  sc.data.m.customers_per_district = 8;
  sc.data.m.orders_per_district = 6;
  sc.data.m.order_lines_per_order = 3;
  sc.data.m.new_orders_per_district = 2;
  sc.data.m.stock_per_warehouse = 25;
  sc.data.m.items = 25;
  sc.data.m.suppliers = 5;
  sc.setup = {{"branches", {{MicroOpKind::create, BranchRef::root}}}};
  sc.execution = {{"repetitions", {{MicroOpKind::range_read, BranchRef::tip}}}};
  const auto cfg = write_json(scenario_to_json(sc), "probe_scenario.json");
  const auto out = (scratch_dir() / "probe_report.json").string();
  REQUIRE(cli({"micro-run", "--config", cfg.c_str(), "--out", out.c_str(), "--emit", "csv"}) ==
          0);

  const auto j = load_json(out);
  CHECK(j.at("kind") == "micro");
  CHECK(j.at("micro").at("samples").size() == 5);
  const auto stem = (scratch_dir() / "probe_report").string();
  CHECK(fs::exists(stem + ".records.csv"));
  CHECK(fs::exists(stem + ".summaries.csv"));

  // Knob overrides: more branches, different seed.
  const auto out2 = (scratch_dir() / "probe_report2.json").string();
  REQUIRE(cli({"micro-run", "--config", cfg.c_str(), "--branches", "4", "--seed", "8", "--out",
               out2.c_str()}) == 0);
  const auto j2 = load_json(out2);
  CHECK(j2.at("config").at("branches") == 4);
  CHECK(j2.at("config").at("seed") == 8);
}

TEST_CASE("report summarizes saved runs and flags broken input") {
  const auto cfg = write_json(tiny_macro_config(), "for_report.json");
  const auto out = (scratch_dir() / "for_report_run.json").string();
  REQUIRE(cli({"macro-run", "--config", cfg.c_str(), "--out", out.c_str()}) == 0);
  CHECK(cli({"report", "--in", out.c_str()}) == 0);
  CHECK(cli({"report", "--in", out.c_str(), "--emit", "csv"}) == 0);
  CHECK(fs::exists((scratch_dir() / "for_report_run.records.csv")));

  CHECK(cli({"report", "--in", (scratch_dir() / "missing.json").string().c_str()}) == 1);
  const auto garbled = (scratch_dir() / "garbled.json").string();
  std::ofstream(garbled) << "not json {";
  CHECK(cli({"report", "--in", garbled.c_str()}) == 1);
  const auto wrong_version = write_json({{"version", "other/9"}}, "wrong_version.json");
  CHECK(cli({"report", "--in", wrong_version.c_str()}) == 1);
}

TEST_CASE("identical argv yields identical reports modulo timing") {
  const auto cfg = write_json(tiny_macro_config(), "det.json");
  const auto out_a = (scratch_dir() / "det_a.json").string();
  const auto out_b = (scratch_dir() / "det_b.json").string();
  REQUIRE(cli({"macro-run", "--config", cfg.c_str(), "--out", out_a.c_str()}) == 0);
  REQUIRE(cli({"macro-run", "--config", cfg.c_str(), "--out", out_b.c_str()}) == 0);
  auto a = load_json(out_a);
  auto b = load_json(out_b);

  CHECK(a.at("config") == b.at("config"));
  CHECK(a.at("steps") == b.at("steps"));
  CHECK(a.at("macro").at("tree") == b.at("macro").at("tree"));
  CHECK(a.at("macro").at("cross_results") == b.at("macro").at("cross_results"));
  REQUIRE(a.at("records").size() == b.at("records").size());
  for (std::size_t i = 0; i < a.at("records").size(); ++i) {
    auto ra = a.at("records")[i];
    auto rb = b.at("records")[i];
    ra.erase("duration_ns");
    rb.erase("duration_ns");
    CHECK(ra == rb);
  }
}

TEST_CASE("BRANCHBENCH_OUT_DIR anchors default output paths") {
  const auto dir = scratch_dir() / "outdir_env";
  fs::remove_all(dir);
  fs::create_directories(dir);
  REQUIRE(setenv("BRANCHBENCH_OUT_DIR", dir.string().c_str(), 1) == 0);
  const auto cfg = write_json(tiny_macro_config(), "envout.json");
  CHECK(cli({"macro-run", "--config", cfg.c_str()}) == 0);
  unsetenv("BRANCHBENCH_OUT_DIR");

  bool found = false;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("macro-", 0) == 0) found = true;
  CHECK(found);
}

}  // TEST_SUITE
