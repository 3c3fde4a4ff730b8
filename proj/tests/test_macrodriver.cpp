// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "branchbench/macrodriver.hpp"
#include "test_util.hpp"

using namespace branchbench;
using namespace std::chrono_literals;

namespace {

// Small dataset so runs stay in the microsecond range per op.
DataGenConfig tiny_data() {
  DataGenConfig d;
  d.m.districts_per_warehouse = 2;
  d.m.customers_per_district = 8;
  d.m.orders_per_district = 6;
  d.m.order_lines_per_order = 3;
  d.m.new_orders_per_district = 2;
  d.m.stock_per_warehouse = 25;
  d.m.items = 25;
  d.m.suppliers = 5;
  return d;
}

WorkflowConfig tiny_run(WorkflowKind kind, std::uint32_t workers, std::uint32_t steps) {
  WorkflowConfig c;
  c.workflow = kind;
  c.workers = workers;
  c.steps = steps;
  c.root_fanout = workers * steps;
  c.max_depth = 1;
  c.data_mutations = 1;
  c.read_queries = 1;
  c.seed = 4242;
  c.backend = "deltaoverlay";
  c.data = tiny_data();
  return c;
}

std::uint64_t count_outcomes(const MacroRunResult& r, NodeStatus s) {
  return static_cast<std::uint64_t>(
      std::count_if(r.step_results.begin(), r.step_results.end(),
                    [&](const StepResult& sr) { return sr.outcome == s; }));
}

}  // namespace

TEST_SUITE_BEGIN("macro");

TEST_CASE("the five presets carry the published parameter vectors") {
  const WorkflowConfig sd = preset_config(WorkflowKind::software_dev);
  CHECK(sd.workers == 5);
  CHECK(sd.steps == 20);
  CHECK(sd.cross_queries == 1);
  CHECK(sd.root_fanout == 5);
  CHECK(sd.inner_fanout == 3);
  CHECK(sd.max_depth == 3);
  CHECK(sd.schema_ops == 1);
  CHECK(sd.data_mutations == 1);
  CHECK(sd.read_queries == 2);
  REQUIRE(sd.prune_probability.has_value());
  CHECK(*sd.prune_probability == doctest::Approx(0.1));

  const WorkflowConfig fr = preset_config(WorkflowKind::failure_repro);
  CHECK(fr.workers == 1);
  CHECK(fr.steps == 10);
  CHECK_FALSE(fr.cross_queries.has_value());
  CHECK(fr.root_fanout == 10);
  CHECK_FALSE(fr.inner_fanout.has_value());
  CHECK(fr.max_depth == 1);
  CHECK(fr.schema_ops == 5);
  CHECK(fr.data_mutations == 45);
  CHECK(fr.read_queries == 1);
  CHECK(*fr.prune_probability == doctest::Approx(1.0));

  const WorkflowConfig dc = preset_config(WorkflowKind::data_cleaning);
  CHECK(dc.workers == 10);
  CHECK(dc.steps == 20);
  CHECK(dc.cross_queries == 2);
  CHECK(dc.root_fanout == 10);
  CHECK(dc.inner_fanout == 3);
  CHECK(dc.max_depth == 3);
  CHECK(dc.schema_ops == 1);
  CHECK(dc.data_mutations == 1);
  CHECK(dc.read_queries == 1);
  CHECK_FALSE(dc.prune_probability.has_value());

  const WorkflowConfig mc = preset_config(WorkflowKind::mcts);
  CHECK(mc.workers == 10);
  CHECK(mc.steps == 100);
  CHECK_FALSE(mc.cross_queries.has_value());
  CHECK(mc.root_fanout == 10);
  CHECK(mc.inner_fanout == 10);
  CHECK(mc.max_depth == 25);
  CHECK_FALSE(mc.schema_ops.has_value());
  CHECK(mc.data_mutations == 1);
  CHECK(mc.read_queries == 1);
  CHECK(*mc.prune_probability == doctest::Approx(0.1));

  const WorkflowConfig si = preset_config(WorkflowKind::simulation);
  CHECK(si.workers == 1000);
  CHECK(si.steps == 1);
  CHECK(si.cross_queries == 1);
  CHECK(si.root_fanout == 1000);
  CHECK_FALSE(si.inner_fanout.has_value());
  CHECK(si.max_depth == 1);
  CHECK_FALSE(si.schema_ops.has_value());
  CHECK(si.data_mutations == 50);
  CHECK(si.read_queries == 1);
  CHECK(*si.prune_probability == doctest::Approx(1.0));

  // Absent parameters normalize the way the drivers consume them.
  CHECK(mc.cross() == 0);
  CHECK(mc.ms() == 0);
  CHECK(dc.gamma() == 0.0);
  CHECK(si.accumulate_outcomes());
  CHECK_FALSE(sd.accumulate_outcomes());
}

TEST_CASE("mini presets shrink the knobs that control run length") {
  auto sd = named_config("mini:software_dev");
  REQUIRE_MESSAGE(sd.ok(), err_text(sd));
  CHECK(sd.value().workers == 5);
  CHECK(sd.value().steps == 10);
  CHECK(sd.value().root_fanout == 5);
  CHECK(sd.value().scale == 1);
  CHECK(sd.value().data_mutations == 1);  // per-step mix untouched

  auto si = named_config("mini:simulation");
  REQUIRE(si.ok());
  CHECK(si.value().workers == 5);
  CHECK(si.value().steps == 1);
  CHECK(si.value().root_fanout == 5);  // capped to T'*S'

  auto fr = named_config("mini:failure_repro");
  REQUIRE(fr.ok());
  CHECK(fr.value().workers == 1);
  CHECK(fr.value().root_fanout == 10);

  auto full = named_config("mcts");
  REQUIRE(full.ok());
  CHECK(full.value().workers == 10);
  CHECK(full.value().steps == 100);

  CHECK_FALSE(named_config("warehouse_sim").ok());
  CHECK_FALSE(named_config("mini:warehouse_sim").ok());

  const auto names = preset_names();
  REQUIRE(names.size() == 10);
  CHECK(names[0] == "software_dev");
  CHECK(names[5] == "mini:software_dev");

  const std::string table = render_preset_table(true);
  CHECK(std::count(table.begin(), table.end(), '\n') == 11);
  CHECK(table.find("mini:simulation") != std::string::npos);
  CHECK(table.find("---") != std::string::npos);
  CHECK(render_preset_table(false).find("mini:") == std::string::npos);
}

TEST_CASE("config JSON round-trips, and dashes mean absent") {
  WorkflowConfig c = preset_config(WorkflowKind::software_dev);
  c.seed = 77;
  c.scale = 3;
  c.backend = "pathcopy";
  c.backend_options.pathcopy_fanout = 8;
  c.faults.live_branch_limit = 12;
  c.faults.rate_limit_probability = 0.25;
  c.retry.max_attempts = 7;
  c.retry.base_backoff = 5ms;
  c.timeout = 1234ms;
  c.serial = true;
  c.data = tiny_data();

  auto back = config_from_json(config_to_json(c));
  REQUIRE_MESSAGE(back.ok(), err_text(back));
  const WorkflowConfig& b = back.value();
  CHECK(b.workflow == c.workflow);
  CHECK(b.workers == c.workers);
  CHECK(b.steps == c.steps);
  CHECK(b.cross_queries == c.cross_queries);
  CHECK(b.root_fanout == c.root_fanout);
  CHECK(b.inner_fanout == c.inner_fanout);
  CHECK(b.max_depth == c.max_depth);
  CHECK(b.schema_ops == c.schema_ops);
  CHECK(b.data_mutations == c.data_mutations);
  CHECK(b.read_queries == c.read_queries);
  CHECK(b.prune_probability == c.prune_probability);
  CHECK(b.seed == 77);
  CHECK(b.scale == 3);
  CHECK(b.timeout == 1234ms);
  CHECK(b.backend == "pathcopy");
  CHECK(b.backend_options.pathcopy_fanout == 8);
  CHECK(b.faults.live_branch_limit == 12);
  CHECK(b.faults.rate_limit_probability == doctest::Approx(0.25));
  CHECK(b.retry.max_attempts == 7);
  CHECK(b.retry.base_backoff == 5ms);
  CHECK(b.serial);
  CHECK(b.data.m.customers_per_district == 8);
  // The dataset follows the run's scale and seed.
  CHECK(b.data.warehouses == 3);
  CHECK(b.data.seed == 77);

  nlohmann::json j = config_to_json(c);
  j["inner_fanout"] = "---";
  j["prune_probability"] = nullptr;
  auto dashed = config_from_json(j);
  REQUIRE(dashed.ok());
  CHECK_FALSE(dashed.value().inner_fanout.has_value());
  CHECK_FALSE(dashed.value().prune_probability.has_value());

  CHECK_FALSE(config_from_json(nlohmann::json::array()).ok());
  j = config_to_json(c);
  j["workflow"] = "warehouse_sim";
  CHECK_FALSE(config_from_json(j).ok());
}

TEST_CASE("validation rejects impossible parameter vectors") {
  WorkflowConfig c = tiny_run(WorkflowKind::software_dev, 1, 1);
  REQUIRE_MESSAGE(validate_config(c).ok(), "baseline config must be valid");

  WorkflowConfig bad = c;
  bad.workers = 0;
  CHECK(validate_config(bad).error().cls == ErrorClass::configuration);
  bad = c;
  bad.steps = 0;
  CHECK_FALSE(validate_config(bad).ok());
  bad = c;
  bad.root_fanout = 0;
  CHECK_FALSE(validate_config(bad).ok());
  bad = c;
  bad.inner_fanout = 0;
  CHECK_FALSE(validate_config(bad).ok());
  bad = c;
  bad.max_depth = 0;
  CHECK_FALSE(validate_config(bad).ok());
  bad = c;
  bad.prune_probability = 1.5;
  CHECK_FALSE(validate_config(bad).ok());
  bad = c;
  bad.prune_probability = -0.1;
  CHECK_FALSE(validate_config(bad).ok());
  bad = c;
  bad.schema_ops = std::nullopt;
  bad.data_mutations = 0;
  bad.read_queries = 0;
  CHECK_FALSE(validate_config(bad).ok());
  bad = c;
  bad.scale = 0;
  CHECK_FALSE(validate_config(bad).ok());
}

TEST_CASE("branch tree reservations enforce fanout, depth, and slot conservation") {
  WorkflowConfig cfg;
  cfg.root_fanout = 2;
  cfg.max_depth = 1;
  BranchTree tree(cfg, 0);
  Rng rng(1);

  auto r1 = tree.reserve(rng);
  auto r2 = tree.reserve(rng);
  REQUIRE(r1.status == BranchTree::ReserveStatus::ok);
  REQUIRE(r2.status == BranchTree::ReserveStatus::ok);
  CHECK(r1.reservation.parent_node == 0);
  CHECK(r1.reservation.child_depth == 1);

  // Both slots are spoken for, but either holder could still fail and free
  // one: callers should wait, not give up.
  CHECK(tree.reserve(rng).status == BranchTree::ReserveStatus::wait);

  const std::uint64_t n1 = tree.attach(r1.reservation, 101);
  const std::uint64_t n2 = tree.attach(r2.reservation, 102);
  CHECK(n1 == 1);
  CHECK(n2 == 2);
  // Active children may still commit and (at depth < max) open capacity.
  CHECK(tree.reserve(rng).status == BranchTree::ReserveStatus::wait);

  tree.finalize(n1, NodeStatus::committed);
  tree.finalize(n2, NodeStatus::pruned);
  CHECK(tree.committed_steps() == 1);

  // Root is full forever (the pruned child still counts) and the committed
  // child sits at max depth: capacity can never grow again.
  CHECK(tree.reserve(rng).status == BranchTree::ReserveStatus::stuck);

  const auto frontier = tree.frontier();
  REQUIRE(frontier.size() == 1);
  CHECK(frontier[0].first == n1);
  CHECK(frontier[0].second == 101);
  REQUIRE_MESSAGE(tree.check_invariants().ok(), err_text(tree.check_invariants()));

  // Aborted reservations hand their slot back.
  BranchTree t2(cfg, 0);
  auto a = t2.reserve(rng);
  auto b = t2.reserve(rng);
  REQUIRE(a.status == BranchTree::ReserveStatus::ok);
  t2.abort_reservation(b.reservation);
  t2.attach(a.reservation, 50);
  auto c = t2.reserve(rng);
  CHECK(c.status == BranchTree::ReserveStatus::ok);
  REQUIRE(t2.check_invariants().ok());
}

TEST_CASE("a run with ample capacity commits every step") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::software_dev, 2, 10);
  cfg.schema_ops = 1;
  auto run = run_workflow(cfg);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  const MacroRunResult& r = run.value();

  CHECK(r.report.steps.committed == 20);
  CHECK(r.report.steps.pruned == 0);
  CHECK(r.report.steps.failed == 0);
  CHECK(r.report.steps.total_steps() == 20);
  CHECK_FALSE(r.report.timed_out);
  REQUIRE(r.step_results.size() == 20);
  CHECK(r.tree.size() == 21);
  CHECK(r.report.root_footprint_bytes > 0);
  REQUIRE(r.report.storage.has_value());
  CHECK(r.report.storage->live_bytes > 0);

  // Worker-major ordering with per-worker step order.
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(r.step_results[i].worker == (i < 10 ? 0 : 1));
    CHECK(r.step_results[i].step == i % 10);
    CHECK(r.step_results[i].node != 0);
    CHECK(r.step_results[i].branch != kRootBranch);
  }

  // Every step leaves create/connect plus its per-step op mix in the log.
  auto creates = latency_percentiles(r.report.records, MetricCategory::branch_create);
  REQUIRE(creates.has_value());
  CHECK(creates->count == 20);
  CHECK(creates->failures == 0);
  auto schema = latency_percentiles(r.report.records, MetricCategory::schema_op);
  REQUIRE(schema.has_value());
  CHECK(schema->count == 20);
  auto reads = latency_percentiles(r.report.records, MetricCategory::read_query);
  REQUIRE(reads.has_value());
  CHECK(reads->count >= 20);
  auto ratio = branching_overhead_ratio(r.report.records);
  REQUIRE_MESSAGE(ratio.ok(), err_text(ratio));
  CHECK(ratio.value() > 0.0);
  CHECK(ratio.value() < 1.0);

  const nlohmann::json j = macro_result_to_json(r);
  CHECK(j.at("version") == kReportSchemaVersion);
  CHECK(j.at("steps").at("committed") == 20);
  CHECK(j.at("macro").at("step_results").size() == 20);
  CHECK(j.at("macro").at("tree").size() == 21);
}

TEST_CASE("always-prune runs leave only the root behind") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::failure_repro, 2, 5);
  cfg.prune_probability = 1.0;
  cfg.capture_canonical_dump = true;
  auto run = run_workflow(cfg);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  const MacroRunResult& r = run.value();
  CHECK(r.report.steps.committed == 0);
  CHECK(r.report.steps.pruned == 10);
  CHECK(r.report.steps.failed == 0);
  CHECK(count_outcomes(r, NodeStatus::pruned) == 10);
  // The frontier never moved, so the canonical dump is the root's table set.
  CHECK(r.canonical_dump.rfind("== node 0\n", 0) == 0);
  CHECK(r.canonical_dump.find("== node 1\n") == std::string::npos);
  auto deletes = latency_percentiles(r.report.records, MetricCategory::branch_delete);
  REQUIRE(deletes.has_value());
  CHECK(deletes->count == 10);
}

TEST_CASE("depth-one runs are stars and unit fanouts are chains") {
  WorkflowConfig star = tiny_run(WorkflowKind::mcts, 1, 6);
  auto run = run_workflow(star);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  for (const TreeNode& n : run.value().tree)
    if (n.node != 0) {
      CHECK(n.parent == 0);
      CHECK(n.depth == 1);
    }

  WorkflowConfig chain = tiny_run(WorkflowKind::mcts, 1, 5);
  chain.root_fanout = 1;
  chain.inner_fanout = 1;
  chain.max_depth = 5;
  auto crun = run_workflow(chain);
  REQUIRE_MESSAGE(crun.ok(), err_text(crun));
  const auto& tree = crun.value().tree;
  REQUIRE(tree.size() == 6);
  for (const TreeNode& n : tree) {
    CHECK(n.depth == n.node);
    if (n.node != 0) CHECK(n.parent == n.node - 1);
  }
  CHECK(crun.value().report.steps.committed == 5);
}

TEST_CASE("a full tree fails the remaining steps instead of stalling") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::mcts, 1, 5);
  cfg.root_fanout = 2;
  const auto t0 = std::chrono::steady_clock::now();
  auto run = run_workflow(cfg);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  CHECK(std::chrono::steady_clock::now() - t0 < 30s);  // no timeout stall
  const MacroRunResult& r = run.value();
  CHECK(r.report.steps.committed == 2);
  CHECK(r.report.steps.pruned == 0);
  CHECK(r.report.steps.failed == 3);
  CHECK(r.report.steps.total_steps() == 5);
  std::uint64_t precondition_fails = 0;
  for (const auto& sr : r.step_results)
    if (sr.outcome == NodeStatus::failed && sr.error == ErrorClass::precondition)
      ++precondition_fails;
  CHECK(precondition_fails == 3);
}

TEST_CASE("cross-branch queries run at committed-step thresholds and at the end") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::data_cleaning, 2, 10);
  cfg.cross_queries = 2;
  cfg.schema_ops = 1;
  cfg.serial = true;
  auto run = run_workflow(cfg);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  const MacroRunResult& r = run.value();
  CHECK(r.report.steps.committed == 20);
  CHECK(r.report.steps.cross_completed == 2);
  CHECK(r.report.steps.cross_skipped == 0);
  REQUIRE(r.cross_results.size() == 2);
  for (const auto& text : r.cross_results) {
    CHECK(text.rfind("affected=", 0) == 0);
    CHECK(text.find("branch") != std::string::npos);  // label column present
  }
  auto cross = latency_percentiles(r.report.records, MetricCategory::cross_branch_query);
  REQUIRE(cross.has_value());
  CHECK(cross->count >= 2);
}

TEST_CASE("always-prune workflows accumulate one outcome per step for the final query") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::simulation, 3, 2);
  cfg.cross_queries = 1;
  cfg.prune_probability = 1.0;
  cfg.data_mutations = 2;
  cfg.capture_canonical_dump = true;
  cfg.serial = true;
  REQUIRE(cfg.accumulate_outcomes());
  auto run = run_workflow(cfg);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  const MacroRunResult& r = run.value();
  CHECK(r.report.steps.pruned == 6);
  CHECK(r.report.steps.cross_completed == 1);
  CHECK(r.report.steps.cross_skipped == 0);
  REQUIRE(r.cross_results.size() == 1);
  // One aggregate row per step survives the prune.
  CHECK(r.cross_results[0].rfind("affected=6\n", 0) == 0);
  // The canonical dump carries the same six outcomes keyed by node ordinal.
  CHECK(std::count(r.canonical_dump.begin(), r.canonical_dump.end(), '=') >= 12);
  for (std::uint64_t node = 1; node <= 6; ++node)
    CHECK(r.canonical_dump.find(fmt::format("== node {}\n", node)) != std::string::npos);
}

TEST_CASE("single-worker runs are deterministic end to end") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::software_dev, 1, 8);
  cfg.schema_ops = 1;
  cfg.prune_probability = 0.3;
  cfg.root_fanout = 8;
  cfg.max_depth = 2;
  cfg.inner_fanout = 4;
  cfg.capture_canonical_dump = true;

  auto a = run_workflow(cfg);
  auto b = run_workflow(cfg);
  REQUIRE_MESSAGE(a.ok(), err_text(a));
  REQUIRE_MESSAGE(b.ok(), err_text(b));
  CHECK(a.value().report.steps == b.value().report.steps);
  CHECK(a.value().canonical_dump == b.value().canonical_dump);
  CHECK(a.value().cross_results == b.value().cross_results);
  REQUIRE(a.value().step_results.size() == b.value().step_results.size());
  for (std::size_t i = 0; i < a.value().step_results.size(); ++i) {
    CHECK(a.value().step_results[i].outcome == b.value().step_results[i].outcome);
    CHECK(a.value().step_results[i].node == b.value().step_results[i].node);
    CHECK(a.value().step_results[i].branch == b.value().step_results[i].branch);
  }
}

TEST_CASE("all embedded backends agree on the surviving tables") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::data_cleaning, 2, 6);
  cfg.schema_ops = 1;
  cfg.data_mutations = 2;
  cfg.root_fanout = 6;
  cfg.max_depth = 2;
  cfg.inner_fanout = 3;
  cfg.prune_probability = 0.25;
  cfg.capture_canonical_dump = true;
  cfg.serial = true;

  std::vector<std::string> dumps;
  for (const char* name : {"fullcopy", "deltaoverlay", "pathcopy"}) {
    WorkflowConfig c = cfg;
    c.backend = name;
    auto run = run_workflow(c);
    REQUIRE_MESSAGE(run.ok(), fmt::format("{}: {}", name, err_text(run)));
    CHECK(run.value().report.steps.total_steps() == 12);
    REQUIRE_FALSE(run.value().canonical_dump.empty());
    dumps.push_back(run.value().canonical_dump);
  }
  CHECK(dumps[0] == dumps[1]);
  CHECK(dumps[0] == dumps[2]);
}

TEST_CASE("live-branch limits surface as retried failures, not hangs") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::mcts, 1, 3);
  cfg.faults.live_branch_limit = 2;  // root plus one child
  cfg.retry.base_backoff = 1ms;
  cfg.retry.max_backoff = 4ms;
  auto run = run_workflow(cfg);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  const MacroRunResult& r = run.value();
  // Step 0 takes the only free slot; with nothing pruned the limit holds
  // every later create under it.
  CHECK(r.report.steps.committed == 1);
  CHECK(r.report.steps.failed == 2);
  std::uint64_t limit_fails = 0;
  for (const auto& sr : r.step_results)
    if (sr.error == ErrorClass::branch_limit_exceeded) ++limit_fails;
  CHECK(limit_fails == 2);

  auto creates = latency_percentiles(r.report.records, MetricCategory::branch_create);
  REQUIRE(creates.has_value());
  CHECK(creates->count == 1);
  CHECK(creates->failures == 8);  // two failed steps, four attempts each
  auto waits = latency_percentiles(r.report.records, MetricCategory::wait);
  REQUIRE(waits.has_value());
  CHECK(waits->count == 6);  // three backoffs per failed step
}

TEST_CASE("the run deadline turns into timed_out, not an error") {
  WorkflowConfig cfg = tiny_run(WorkflowKind::mcts, 1, 50);
  cfg.timeout = 1ms;
  cfg.faults.added_latency = 2000us;
  auto run = run_workflow(cfg);
  REQUIRE_MESSAGE(run.ok(), err_text(run));
  const MacroRunResult& r = run.value();
  CHECK(r.report.timed_out);
  CHECK(r.report.steps.total_steps() < 50);
}

TEST_SUITE_END();
