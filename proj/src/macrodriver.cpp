// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/macrodriver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "branchbench/storemodel.hpp"

namespace branchbench {

using Clock = std::chrono::steady_clock;

Result<void> validate_config(const WorkflowConfig& cfg) {
  if (cfg.workers < 1 || cfg.steps < 1)
    return make_error(ErrorClass::configuration, "workers and steps must be >= 1");
  if (cfg.root_fanout < 1)
    return make_error(ErrorClass::configuration, "root fanout must be >= 1");
  if (cfg.max_depth < 1) return make_error(ErrorClass::configuration, "depth must be >= 1");
  if (cfg.inner_fanout && *cfg.inner_fanout < 1)
    return make_error(ErrorClass::configuration, "inner fanout must be >= 1 when bounded");
  const double g = cfg.gamma();
  if (g < 0.0 || g > 1.0)
    return make_error(ErrorClass::configuration, "prune probability must lie in [0,1]");
  if (cfg.ms() == 0 && cfg.data_mutations == 0 && cfg.read_queries == 0)
    return make_error(ErrorClass::configuration,
                      "a step must perform at least one operation");
  if (cfg.scale < 1) return make_error(ErrorClass::configuration, "scale must be >= 1");
  return validate_config(normalized_data(cfg));
}

DataGenConfig normalized_data(const WorkflowConfig& cfg) {
  DataGenConfig d = cfg.data;
  d.warehouses = cfg.scale;
  d.seed = cfg.seed;
  return d;
}

WorkflowConfig preset_config(WorkflowKind kind) {
  WorkflowConfig c;
  c.workflow = kind;
  switch (kind) {
    case WorkflowKind::software_dev:
      c.workers = 5, c.steps = 20, c.cross_queries = 1, c.root_fanout = 5, c.inner_fanout = 3,
      c.max_depth = 3, c.schema_ops = 1, c.data_mutations = 1, c.read_queries = 2,
      c.prune_probability = 0.1;
      break;
    case WorkflowKind::failure_repro:
      c.workers = 1, c.steps = 10, c.cross_queries = std::nullopt, c.root_fanout = 10,
      c.inner_fanout = std::nullopt, c.max_depth = 1, c.schema_ops = 5, c.data_mutations = 45,
      c.read_queries = 1, c.prune_probability = 1.0;
      break;
    case WorkflowKind::data_cleaning:
      c.workers = 10, c.steps = 20, c.cross_queries = 2, c.root_fanout = 10, c.inner_fanout = 3,
      c.max_depth = 3, c.schema_ops = 1, c.data_mutations = 1, c.read_queries = 1,
      c.prune_probability = std::nullopt;
      break;
    case WorkflowKind::mcts:
      c.workers = 10, c.steps = 100, c.cross_queries = std::nullopt, c.root_fanout = 10,
      c.inner_fanout = 10, c.max_depth = 25, c.schema_ops = std::nullopt, c.data_mutations = 1,
      c.read_queries = 1, c.prune_probability = 0.1;
      break;
    case WorkflowKind::simulation:
      c.workers = 1000, c.steps = 1, c.cross_queries = 1, c.root_fanout = 1000,
      c.inner_fanout = std::nullopt, c.max_depth = 1, c.schema_ops = std::nullopt,
      c.data_mutations = 50, c.read_queries = 1, c.prune_probability = 1.0;
      break;
  }
  return c;
}

namespace {

WorkflowConfig mini_of(WorkflowConfig c) {
  c.workers = std::min<std::uint32_t>(c.workers, 5);
  c.steps = std::min<std::uint32_t>(c.steps, 10);
  c.root_fanout = std::min<std::uint32_t>(c.root_fanout, c.workers * c.steps);
  c.scale = 1;
  return c;
}

std::string opt_cell(const std::optional<std::uint32_t>& v) {
  return v ? fmt::format("{}", *v) : "---";
}

std::string gamma_cell(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : "---";
}

}  // namespace

Result<WorkflowConfig> named_config(std::string_view name) {
  bool mini = false;
  std::string_view base = name;
  if (base.rfind("mini:", 0) == 0) {
    mini = true;
    base = base.substr(5);
  }
  const auto kind = workflow_from_name(base);
  if (!kind)
    return make_error(ErrorClass::configuration, fmt::format("unknown preset '{}'", name));
  WorkflowConfig c = preset_config(*kind);
  return mini ? mini_of(c) : c;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (WorkflowKind k : all_workflows()) out.emplace_back(workflow_name(k));
  for (WorkflowKind k : all_workflows())
    out.push_back(fmt::format("mini:{}", workflow_name(k)));
  return out;
}

std::string render_preset_table(bool include_minis) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"preset", "T", "S", "C", "F_r", "F_i", "D", "M_s", "M_d", "Q_v", "gamma"});
  const auto add = [&rows](const std::string& name, const WorkflowConfig& c) {
    rows.push_back({name, fmt::format("{}", c.workers), fmt::format("{}", c.steps),
                    opt_cell(c.cross_queries), fmt::format("{}", c.root_fanout),
                    opt_cell(c.inner_fanout), fmt::format("{}", c.max_depth),
                    opt_cell(c.schema_ops), fmt::format("{}", c.data_mutations),
                    fmt::format("{}", c.read_queries), gamma_cell(c.prune_probability)});
  };
  for (WorkflowKind k : all_workflows()) add(std::string(workflow_name(k)), preset_config(k));
  if (include_minis)
    for (WorkflowKind k : all_workflows())
      add(fmt::format("mini:{}", workflow_name(k)), mini_of(preset_config(k)));

  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      out += fmt::format("{:<{}}{}", r[i], width[i], i + 1 == r.size() ? "" : "  ");
    out += '\n';
  }
  return out;
}

nlohmann::json config_to_json(const WorkflowConfig& cfg) {
  nlohmann::json j;
  j["workflow"] = workflow_name(cfg.workflow);
  j["workers"] = cfg.workers;
  j["steps"] = cfg.steps;
  j["cross_queries"] = cfg.cross_queries ? nlohmann::json(*cfg.cross_queries) : nlohmann::json();
  j["root_fanout"] = cfg.root_fanout;
  j["inner_fanout"] = cfg.inner_fanout ? nlohmann::json(*cfg.inner_fanout) : nlohmann::json();
  j["max_depth"] = cfg.max_depth;
  j["schema_ops"] = cfg.schema_ops ? nlohmann::json(*cfg.schema_ops) : nlohmann::json();
  j["data_mutations"] = cfg.data_mutations;
  j["read_queries"] = cfg.read_queries;
  j["prune_probability"] =
      cfg.prune_probability ? nlohmann::json(*cfg.prune_probability) : nlohmann::json();
  j["seed"] = cfg.seed;
  j["scale"] = cfg.scale;
  j["timeout_ms"] = cfg.timeout.count();
  j["backend"] = cfg.backend;
  j["backend_options"] = {{"delta_compaction_threshold", cfg.backend_options.delta_compaction_threshold},
                          {"pathcopy_fanout", cfg.backend_options.pathcopy_fanout},
                          {"pathcopy_gc_slack_bytes", cfg.backend_options.pathcopy_gc_slack_bytes}};
  j["faults"] = {{"live_branch_limit", cfg.faults.live_branch_limit},
                 {"rate_limit_probability", cfg.faults.rate_limit_probability},
                 {"timeout_probability", cfg.faults.timeout_probability},
                 {"added_latency_us", cfg.faults.added_latency.count()},
                 {"disable_cross_branch", cfg.faults.disable_cross_branch},
                 {"seed", cfg.faults.seed}};
  j["retry"] = {{"max_attempts", cfg.retry.max_attempts},
                {"base_backoff_ms", cfg.retry.base_backoff.count()},
                {"backoff_multiplier", cfg.retry.backoff_multiplier},
                {"max_backoff_ms", cfg.retry.max_backoff.count()}};
  j["serial"] = cfg.serial;
  j["verify_tree_each_step"] = cfg.verify_tree_each_step;
  j["data"] = {{"districts_per_warehouse", cfg.data.m.districts_per_warehouse},
               {"customers_per_district", cfg.data.m.customers_per_district},
               {"orders_per_district", cfg.data.m.orders_per_district},
               {"order_lines_per_order", cfg.data.m.order_lines_per_order},
               {"new_orders_per_district", cfg.data.m.new_orders_per_district},
               {"stock_per_warehouse", cfg.data.m.stock_per_warehouse},
               {"items", cfg.data.m.items},
               {"regions", cfg.data.m.regions},
               {"nations", cfg.data.m.nations},
               {"suppliers", cfg.data.m.suppliers}};
  return j;
}

Result<WorkflowConfig> config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) return make_error(ErrorClass::configuration, "config must be an object");
  WorkflowConfig c;
  if (j.contains("workflow")) {
    const auto k = workflow_from_name(j.at("workflow").get<std::string>());
    if (!k)
      return make_error(ErrorClass::configuration,
                        fmt::format("unknown workflow '{}'", j.at("workflow").get<std::string>()));
    c.workflow = *k;
  }
  const auto opt_u32 = [&j](const char* key, std::optional<std::uint32_t>& out) {
    if (!j.contains(key) || j.at(key).is_null() || j.at(key) == "---")
      out = std::nullopt;
    else
      out = j.at(key).get<std::uint32_t>();
  };
  c.workers = j.value("workers", c.workers);
  c.steps = j.value("steps", c.steps);
  opt_u32("cross_queries", c.cross_queries);
  c.root_fanout = j.value("root_fanout", c.root_fanout);
  opt_u32("inner_fanout", c.inner_fanout);
  c.max_depth = j.value("max_depth", c.max_depth);
  opt_u32("schema_ops", c.schema_ops);
  c.data_mutations = j.value("data_mutations", c.data_mutations);
  c.read_queries = j.value("read_queries", c.read_queries);
  if (j.contains("prune_probability") && !j.at("prune_probability").is_null() &&
      j.at("prune_probability") != "---")
    c.prune_probability = j.at("prune_probability").get<double>();
  c.seed = j.value("seed", c.seed);
  c.scale = j.value("scale", c.scale);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
  c.backend = j.value("backend", c.backend);
  if (j.contains("backend_options")) {
    const auto& b = j.at("backend_options");
    c.backend_options.delta_compaction_threshold =
        b.value("delta_compaction_threshold", c.backend_options.delta_compaction_threshold);
    c.backend_options.pathcopy_fanout = b.value("pathcopy_fanout", c.backend_options.pathcopy_fanout);
    c.backend_options.pathcopy_gc_slack_bytes =
        b.value("pathcopy_gc_slack_bytes", c.backend_options.pathcopy_gc_slack_bytes);
  }
  if (j.contains("faults")) {
    const auto& f = j.at("faults");
    c.faults.live_branch_limit = f.value("live_branch_limit", c.faults.live_branch_limit);
    c.faults.rate_limit_probability =
        f.value("rate_limit_probability", c.faults.rate_limit_probability);
    c.faults.timeout_probability = f.value("timeout_probability", c.faults.timeout_probability);
    c.faults.added_latency =
        std::chrono::microseconds(f.value("added_latency_us", c.faults.added_latency.count()));
    c.faults.disable_cross_branch = f.value("disable_cross_branch", c.faults.disable_cross_branch);
    c.faults.seed = f.value("seed", c.faults.seed);
  }
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.base_backoff = std::chrono::milliseconds(r.value("base_backoff_ms", c.retry.base_backoff.count()));
    c.retry.backoff_multiplier = r.value("backoff_multiplier", c.retry.backoff_multiplier);
    c.retry.max_backoff = std::chrono::milliseconds(r.value("max_backoff_ms", c.retry.max_backoff.count()));
  }
  c.serial = j.value("serial", c.serial);
  c.verify_tree_each_step = j.value("verify_tree_each_step", c.verify_tree_each_step);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    auto& m = c.data.m;
    m.districts_per_warehouse = d.value("districts_per_warehouse", m.districts_per_warehouse);
    m.customers_per_district = d.value("customers_per_district", m.customers_per_district);
    m.orders_per_district = d.value("orders_per_district", m.orders_per_district);
    m.order_lines_per_order = d.value("order_lines_per_order", m.order_lines_per_order);
    m.new_orders_per_district = d.value("new_orders_per_district", m.new_orders_per_district);
    m.stock_per_warehouse = d.value("stock_per_warehouse", m.stock_per_warehouse);
    m.items = d.value("items", m.items);
    m.regions = d.value("regions", m.regions);
    m.nations = d.value("nations", m.nations);
    m.suppliers = d.value("suppliers", m.suppliers);
  }
  c.data.warehouses = c.scale;
  c.data.seed = c.seed;
  if (auto v = validate_config(c); !v.ok()) return v.take_error();
  return c;
}

std::string_view node_status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::active: return "active";
    case NodeStatus::committed: return "committed";
    case NodeStatus::pruned: return "pruned";
    case NodeStatus::failed: return "failed";
  }
  return "?";
}

BranchTree::BranchTree(const WorkflowConfig& cfg, BranchId root_branch)
    : root_fanout_(cfg.root_fanout),
      max_depth_(cfg.max_depth),
      inner_fanout_(cfg.inner_fanout ? *cfg.inner_fanout
                                     : std::numeric_limits<std::uint64_t>::max()) {
  TreeNode root;
  root.node = 0;
  root.parent = 0;
  root.branch = root_branch;
  root.depth = 0;
  root.status = NodeStatus::committed;  // the root is a committed leaf
  nodes_.push_back(root);
  frontier_.push_back(0);
}

std::uint64_t BranchTree::fanout_limit(const TreeNode& n) const {
  return n.depth == 0 ? root_fanout_ : inner_fanout_;
}

BranchTree::ReserveOutcome BranchTree::reserve(Rng& rng) {
  std::lock_guard<std::mutex> lk(mu_);
  // Uniform over (node, free slot): weight each eligible node by its free
  // slot count and draw one slot index.
  std::uint64_t total_free = 0;
  for (const TreeNode& n : nodes_) {
    if (n.status != NodeStatus::committed || n.depth >= max_depth_) continue;
    const std::uint64_t used = n.child_count + n.reserved_slots;
    const std::uint64_t limit = fanout_limit(n);
    if (used < limit) total_free += limit - used;
  }
  if (total_free == 0) {
    // Capacity can still appear if someone holds a reservation or has an
    // unfinished node that may commit; otherwise the tree is full for good.
    bool may_grow = outstanding_ > 0;
    for (const TreeNode& n : nodes_)
      may_grow = may_grow || n.status == NodeStatus::active;
    return {may_grow ? ReserveStatus::wait : ReserveStatus::stuck, {}};
  }
  std::uint64_t pick = rng.uniform(total_free);
  for (TreeNode& n : nodes_) {
    if (n.status != NodeStatus::committed || n.depth >= max_depth_) continue;
    const std::uint64_t used = n.child_count + n.reserved_slots;
    const std::uint64_t limit = fanout_limit(n);
    if (used >= limit) continue;
    const std::uint64_t free = limit - used;
    if (pick >= free) {
      pick -= free;
      continue;
    }
    ++n.reserved_slots;
    ++reservations_issued_;
    ++outstanding_;
    return {ReserveStatus::ok, {n.node, n.branch, n.depth + 1}};
  }
  return {ReserveStatus::wait, {}};  // unreachable
}

std::uint64_t BranchTree::attach(const Reservation& res, BranchId child) {
  std::lock_guard<std::mutex> lk(mu_);
  TreeNode& parent = nodes_[res.parent_node];
  --parent.reserved_slots;
  ++parent.child_count;
  --outstanding_;
  TreeNode n;
  n.node = nodes_.size();
  n.parent = res.parent_node;
  n.branch = child;
  n.depth = res.child_depth;
  n.status = NodeStatus::active;
  nodes_.push_back(n);
  return n.node;
}

void BranchTree::abort_reservation(const Reservation& res) {
  std::lock_guard<std::mutex> lk(mu_);
  --nodes_[res.parent_node].reserved_slots;
  --outstanding_;
  ++reservations_aborted_;
}

void BranchTree::finalize(std::uint64_t node, NodeStatus status) {
  std::lock_guard<std::mutex> lk(mu_);
  TreeNode& n = nodes_[node];
  n.status = status;
  if (status == NodeStatus::committed) {
    ++committed_steps_;
    // The node becomes a committed leaf; its parent stops being one.
    frontier_.push_back(node);
    const auto it = std::find(frontier_.begin(), frontier_.end(), n.parent);
    if (it != frontier_.end()) frontier_.erase(it);
  }
}

std::uint64_t BranchTree::committed_steps() const {
  std::lock_guard<std::mutex> lk(mu_);
  return committed_steps_;
}

std::vector<std::pair<std::uint64_t, BranchId>> BranchTree::frontier() const {
  std::lock_guard<std::mutex> lk(mu_);
  std::vector<std::pair<std::uint64_t, BranchId>> out;
  out.reserve(frontier_.size());
  for (std::uint64_t id : frontier_) out.emplace_back(id, nodes_[id].branch);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TreeNode> BranchTree::snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  return nodes_;
}

Result<void> BranchTree::check_invariants() const {
  std::lock_guard<std::mutex> lk(mu_);
  std::vector<std::uint32_t> committed_children(nodes_.size(), 0);
  std::uint64_t children_created = 0;
  for (const TreeNode& n : nodes_) {
    if (n.node == 0) continue;
    ++children_created;
    const TreeNode& p = nodes_[n.parent];
    if (n.depth != p.depth + 1 || n.depth > max_depth_)
      return make_error(ErrorClass::internal, fmt::format("node {} violates depth", n.node));
    if (n.status == NodeStatus::committed) {
      ++committed_children[n.parent];
      if (p.status != NodeStatus::committed)
        return make_error(ErrorClass::internal,
                          fmt::format("committed node {} under non-committed parent", n.node));
    }
  }
  for (const TreeNode& n : nodes_) {
    if (n.child_count + n.reserved_slots > fanout_limit(n))
      return make_error(ErrorClass::internal, fmt::format("node {} exceeds fanout", n.node));
    if ((n.status == NodeStatus::pruned || n.status == NodeStatus::failed) && n.child_count != 0)
      return make_error(ErrorClass::internal,
                        fmt::format("terminal node {} has children", n.node));
  }
  if (reservations_issued_ != children_created + reservations_aborted_ + outstanding_)
    return make_error(ErrorClass::internal, "slot conservation violated");
  // Brute-force frontier: committed nodes with zero committed children.
  std::vector<std::uint64_t> brute;
  for (const TreeNode& n : nodes_)
    if (n.status == NodeStatus::committed && committed_children[n.node] == 0)
      brute.push_back(n.node);
  std::vector<std::uint64_t> maintained = frontier_;
  std::sort(maintained.begin(), maintained.end());
  if (brute != maintained)
    return make_error(ErrorClass::internal, "incremental frontier diverged from brute force");
  return {};
}

namespace {

// Shared state of one macro run. Workers call into it; all cross-query and
// accounting state is internally synchronized.
class MacroDriver {
 public:
  MacroDriver(const WorkflowConfig& cfg, Backend& backend)
      : cfg_(cfg),
        data_(normalized_data(cfg)),
        backend_(backend),
        sink_(cfg.workers + 1),
        tree_(cfg, kRootBranch),
        start_(Clock::now()) {
    if (cfg_.timeout.count() > 0) deadline_ = start_ + cfg_.timeout;
    step_results_.resize(cfg_.workers);
    for (std::uint32_t k = 1; k <= cfg_.cross(); ++k)
      thresholds_.push_back(static_cast<std::uint64_t>(
          std::ceil(static_cast<double>(k) * cfg_.workers * cfg_.steps / cfg_.cross())));
  }

  Result<MacroRunResult> run(std::uint64_t root_footprint);

 private:
  void worker_main(std::uint32_t w);
  // False when the run deadline fired and the worker must stop.
  bool run_step(std::uint32_t w, std::uint32_t s, Rng& rng);

  bool past_deadline() const {
    return deadline_ && Clock::now() >= *deadline_;
  }

  // Executes fn under the retry policy, recording one sample per attempt
  // and one wait sample per backoff sleep.
  template <typename Fn>
  auto retried(Fn&& fn, MetricCategory cat, const Provenance& prov, std::uint32_t lane) {
    auto out = with_retry(fn, cfg_.retry);
    for (std::uint32_t i = 0; i < out.attempts.size(); ++i) {
      const RetryAttempt& a = out.attempts[i];
      sink_.record(lane, {cat, a.duration, a.error, prov, i});
      if (a.backoff.count() > 0)
        sink_.record(lane, {MetricCategory::wait, a.backoff, ErrorClass::none, prov, i});
    }
    return std::move(out.result);
  }

  void note_step_completed(std::uint32_t w);
  void make_ready_locked();
  Result<OpResult> exec_cross(const OperationDescriptor& op, std::uint32_t lane);
  void run_cross_query(std::uint32_t k, std::uint32_t lane);
  void accumulate_outcome(Session& session, std::uint64_t node, std::uint32_t lane);

  const WorkflowConfig& cfg_;
  DataGenConfig data_;
  Backend& backend_;
  MetricSink sink_;
  BranchTree tree_;
  Clock::time_point start_;
  std::optional<Clock::time_point> deadline_;
  std::atomic<bool> timed_out_{false};

  std::vector<std::vector<StepResult>> step_results_;

  // Cross-branch query scheduling: k becomes ready at its committed-step
  // threshold; the last query (and any still unready stragglers) become
  // ready when all workers have finished.
  std::mutex cross_mu_;
  std::vector<std::uint64_t> thresholds_;  // [k-1] -> committed-step trigger
  std::uint32_t next_ready_ = 1;
  std::deque<std::uint32_t> ready_;
  bool workers_done_ = false;
  std::uint64_t cross_completed_ = 0, cross_skipped_ = 0;
  std::vector<std::pair<std::uint32_t, std::string>> cross_results_;  // (k, text)

  // Pre-prune outcome rows for always-prune workflows, keyed by node ordinal.
  std::mutex acc_mu_;
  std::vector<std::string> acc_columns_;
  std::vector<std::pair<std::uint64_t, std::vector<Row>>> accumulated_;

  // First violation seen by the per-step tree verification, if enabled.
  std::mutex violation_mu_;
  std::optional<Error> tree_violation_;
};

void MacroDriver::make_ready_locked() {
  const std::uint64_t committed = tree_.committed_steps();
  while (next_ready_ <= cfg_.cross()) {
    const bool last = next_ready_ == cfg_.cross();
    const bool ready =
        workers_done_ || (!last && committed >= thresholds_[next_ready_ - 1]);
    if (!ready) break;
    ready_.push_back(next_ready_++);
  }
}

void MacroDriver::note_step_completed(std::uint32_t w) {
  if (cfg_.verify_tree_each_step) {
    if (auto inv = tree_.check_invariants(); !inv.ok()) {
      std::lock_guard<std::mutex> lk(violation_mu_);
      if (!tree_violation_) tree_violation_ = inv.take_error();
    }
  }
  std::uint32_t claimed = 0;
  {
    std::lock_guard<std::mutex> lk(cross_mu_);
    make_ready_locked();
    if (ready_.empty()) return;
    claimed = ready_.front();
    ready_.pop_front();
  }
  run_cross_query(claimed, w);
}

Result<OpResult> MacroDriver::exec_cross(const OperationDescriptor& op, std::uint32_t lane) {
  if (backend_.capabilities().cross_branch_aggregate) {
    auto session = backend_.connect_branch(kRootBranch);
    if (!session.ok()) return session.take_error();
    return retried([&] { return session.value()->execute(op); },
                   MetricCategory::cross_branch_query, op.provenance, lane);
  }
  // Fallback for services without a cross-branch form: run the aggregate on
  // each selected branch and merge rows under a leading label column, the
  // same shape the native path produces.
  OpResult merged;
  merged.columns.push_back("branch");
  bool have_header = false;
  for (const auto& sel : op.branches) {
    OperationDescriptor per;
    per.kind = OpKind::aggregate;
    per.op_id = op.op_id;
    per.provenance = op.provenance;
    per.agg = op.agg;
    auto session = backend_.connect_branch(sel.backend_branch);
    if (!session.ok()) return session.take_error();
    auto r = retried([&] { return session.value()->execute(per); },
                     MetricCategory::cross_branch_query, op.provenance, lane);
    if (!r.ok()) {
      auto err = r.take_error();
      err.message = fmt::format("branch '{}': {}", sel.label, err.message);
      return err;
    }
    if (!have_header) {
      for (const auto& c : r.value().columns) merged.columns.push_back(c);
      have_header = true;
    }
    for (auto& row : r.value().rows) {
      Row out;
      out.reserve(row.size() + 1);
      out.push_back(Value{sel.label});
      for (auto& v : row) out.push_back(std::move(v));
      merged.rows.push_back(std::move(out));
    }
  }
  merged.affected = static_cast<std::int64_t>(merged.rows.size());
  return merged;
}

void MacroDriver::run_cross_query(std::uint32_t k, std::uint32_t lane) {
  if (timed_out_.load()) {
    std::lock_guard<std::mutex> lk(cross_mu_);
    ++cross_skipped_;
    return;
  }
  if (cfg_.accumulate_outcomes()) {
    // Assemble the accumulated per-branch rows; the per-branch work was done
    // (and timed) before each prune.
    const auto t0 = Clock::now();
    OpResult res;
    {
      std::lock_guard<std::mutex> lk(acc_mu_);
      if (accumulated_.empty()) {
        std::lock_guard<std::mutex> lk2(cross_mu_);
        ++cross_skipped_;
        return;
      }
      auto sorted = accumulated_;
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      res.columns = acc_columns_;
      for (const auto& [node, rows] : sorted)
        for (const auto& row : rows) res.rows.push_back(row);
    }
    res.affected = static_cast<std::int64_t>(res.rows.size());
    Provenance prov;
    prov.workflow = std::string(workflow_name(cfg_.workflow));
    prov.phase = OpPhase::cross;
    prov.ordinal = k;
    sink_.record(lane, {MetricCategory::cross_branch_query, Clock::now() - t0,
                        ErrorClass::none, prov, 0});
    std::lock_guard<std::mutex> lk(cross_mu_);
    ++cross_completed_;
    cross_results_.emplace_back(k, result_to_text(res));
    return;
  }

  std::vector<BranchSel> sels;
  for (const auto& [node, branch] : tree_.frontier())
    sels.push_back({branch, fmt::format("n{}", node)});
  OperationDescriptor op =
      instantiate_cross_branch(cfg_.workflow, cfg_.seed, k, std::move(sels), data_, cfg_.ms());
  auto r = exec_cross(op, lane);
  std::lock_guard<std::mutex> lk(cross_mu_);
  if (r.ok()) {
    ++cross_completed_;
    cross_results_.emplace_back(k, result_to_text(r.value()));
  } else {
    ++cross_skipped_;
  }
}

void MacroDriver::accumulate_outcome(Session& session, std::uint64_t node, std::uint32_t lane) {
  std::vector<BranchSel> sel = {{session.branch(), fmt::format("n{}", node)}};
  OperationDescriptor op = instantiate_cross_branch(cfg_.workflow, cfg_.seed, cfg_.cross(),
                                                    std::move(sel), data_, cfg_.ms());
  auto r = exec_cross(op, lane);
  if (!r.ok()) return;  // the step still counts; the outcome row is lost
  std::lock_guard<std::mutex> lk(acc_mu_);
  if (acc_columns_.empty()) acc_columns_ = r.value().columns;
  accumulated_.emplace_back(node, std::move(r.value().rows));
}

bool MacroDriver::run_step(std::uint32_t w, std::uint32_t s, Rng& rng) {
  StepResult sr;
  sr.worker = w;
  sr.step = s;
  Provenance prov;
  prov.workflow = std::string(workflow_name(cfg_.workflow));
  prov.worker = w;
  prov.step = s;
  prov.phase = OpPhase::branch;

  const auto fail_step = [&](ErrorClass cls) {
    sr.outcome = NodeStatus::failed;
    sr.error = cls;
    step_results_[w].push_back(sr);
    note_step_completed(w);
  };

  // Phase 1: acquire a slot and create the branch.
  auto t0 = Clock::now();
  BranchTree::Reservation res;
  auto backoff = std::chrono::milliseconds(10);
  for (;;) {
    if (past_deadline()) {
      timed_out_.store(true);
      return false;
    }
    auto out = tree_.reserve(rng);
    if (out.status == BranchTree::ReserveStatus::ok) {
      res = out.reservation;
      break;
    }
    if (out.status == BranchTree::ReserveStatus::stuck) {
      // No free slot and nothing in flight that could open one: the tree is
      // full for the rest of the run, so waiting longer cannot help.
      fail_step(ErrorClass::precondition);
      return true;
    }
    std::this_thread::sleep_for(backoff);
    sink_.record(w, {MetricCategory::wait, backoff, ErrorClass::none, prov, 0});
    backoff = std::min(backoff * 2, std::chrono::milliseconds(1000));
  }

  auto created = retried([&] { return backend_.create_branch(res.parent_branch); },
                         MetricCategory::branch_create, prov, w);
  if (!created.ok()) {
    tree_.abort_reservation(res);
    fail_step(created.error().cls);
    return true;
  }
  const BranchId branch = created.value();
  sr.node = tree_.attach(res, branch);
  sr.branch = branch;

  auto connected = retried([&] { return backend_.connect_branch(branch); },
                           MetricCategory::branch_connect, prov, w);
  if (!connected.ok()) {
    const ErrorClass cls = connected.error().cls;
    (void)backend_.delete_branch(branch);  // best effort
    tree_.finalize(sr.node, NodeStatus::failed);
    fail_step(cls);
    return true;
  }
  std::shared_ptr<Session> session = connected.take();
  sr.branch_phase = Clock::now() - t0;

  const auto abandon = [&](ErrorClass cls) {
    session->close();
    Provenance dprov = prov;
    dprov.phase = OpPhase::branch;
    auto del = retried([&] { return backend_.delete_branch(branch); },
                       MetricCategory::branch_delete, dprov, w);
    (void)del;
    tree_.finalize(sr.node, NodeStatus::failed);
    fail_step(cls);
  };

  // Phases 2 and 3: the step's own operations.
  StepContext ctx;
  ctx.workflow = cfg_.workflow;
  ctx.worker = w;
  ctx.step = s;
  ctx.total_steps = cfg_.steps;
  ctx.schema_ops = cfg_.ms();
  ctx.data_mutations = cfg_.data_mutations;
  ctx.read_queries = cfg_.read_queries;
  ctx.seed = cfg_.seed;
  ctx.data = data_;
  const StepOps ops = instantiate_step(ctx);

  t0 = Clock::now();
  for (const auto& op : ops.mutate) {
    if (past_deadline()) {
      timed_out_.store(true);
      abandon(ErrorClass::timeout);
      return false;
    }
    auto r = retried([&] { return session->execute(op); }, category_for_op(op.kind),
                     op.provenance, w);
    if (!r.ok()) {
      sr.mutate_phase = Clock::now() - t0;
      abandon(r.error().cls);
      return true;
    }
  }
  sr.mutate_phase = Clock::now() - t0;

  t0 = Clock::now();
  for (const auto& op : ops.evaluate) {
    if (past_deadline()) {
      timed_out_.store(true);
      abandon(ErrorClass::timeout);
      return false;
    }
    auto r = retried([&] { return session->execute(op); }, category_for_op(op.kind),
                     op.provenance, w);
    if (!r.ok()) {
      sr.evaluate_phase = Clock::now() - t0;
      abandon(r.error().cls);
      return true;
    }
  }
  sr.evaluate_phase = Clock::now() - t0;

  // Phase 4: the prune coin decides before the node is ever published, so a
  // doomed branch can never be selected as a parent.
  t0 = Clock::now();
  const bool prune = rng.chance(cfg_.gamma());
  if (cfg_.accumulate_outcomes()) accumulate_outcome(*session, sr.node, w);
  if (prune) {
    Provenance dprov = prov;
    auto del = retried([&] { return backend_.delete_branch(branch); },
                       MetricCategory::branch_delete, dprov, w);
    if (!del.ok()) {
      tree_.finalize(sr.node, NodeStatus::failed);
      sr.prune_phase = Clock::now() - t0;
      fail_step(del.error().cls);
      return true;
    }
    tree_.finalize(sr.node, NodeStatus::pruned);
    sr.outcome = NodeStatus::pruned;
  } else {
    tree_.finalize(sr.node, NodeStatus::committed);
    sr.outcome = NodeStatus::committed;
  }
  sr.prune_phase = Clock::now() - t0;
  step_results_[w].push_back(sr);
  note_step_completed(w);
  return true;
}

void MacroDriver::worker_main(std::uint32_t w) {
  Rng rng(stream_seed(cfg_.seed, 0xB0B0ull, w));
  for (std::uint32_t s = 0; s < cfg_.steps; ++s) {
    if (past_deadline()) {
      timed_out_.store(true);
      return;
    }
    if (!run_step(w, s, rng)) return;
  }
}

Result<MacroRunResult> MacroDriver::run(std::uint64_t root_footprint) {
  if (cfg_.serial || cfg_.workers == 1) {
    for (std::uint32_t w = 0; w < cfg_.workers && !timed_out_.load(); ++w) worker_main(w);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(cfg_.workers);
    for (std::uint32_t w = 0; w < cfg_.workers; ++w)
      threads.emplace_back([this, w] { worker_main(w); });
    for (auto& t : threads) t.join();
  }

  {
    std::lock_guard<std::mutex> lk(cross_mu_);
    workers_done_ = true;
  }
  // Remaining queries run at the end of the workflow, FIFO, on the main lane.
  for (;;) {
    std::uint32_t k = 0;
    {
      std::lock_guard<std::mutex> lk(cross_mu_);
      make_ready_locked();
      if (ready_.empty()) break;
      k = ready_.front();
      ready_.pop_front();
    }
    run_cross_query(k, cfg_.workers);
  }

  MacroRunResult out;
  out.report.kind = "macro";
  out.report.config = config_to_json(cfg_);
  out.report.end_to_end = Clock::now() - start_;
  out.report.timed_out = timed_out_.load();
  out.report.root_footprint_bytes = root_footprint;
  for (auto& per_worker : step_results_)
    for (auto& sr : per_worker) {
      switch (sr.outcome) {
        case NodeStatus::committed: ++out.report.steps.committed; break;
        case NodeStatus::pruned: ++out.report.steps.pruned; break;
        default: ++out.report.steps.failed; break;
      }
      out.step_results.push_back(sr);
    }
  out.report.steps.cross_completed = cross_completed_;
  out.report.steps.cross_skipped = cross_skipped_;
  if (backend_.capabilities().storage_stats) {
    auto st = backend_.storage_stats();
    if (st.ok()) out.report.storage = st.take();
  }
  out.report.records = sink_.collect();
  out.tree = tree_.snapshot();
  std::sort(cross_results_.begin(), cross_results_.end());
  for (auto& [k, text] : cross_results_) out.cross_results.push_back(std::move(text));

  if (auto inv = tree_.check_invariants(); !inv.ok()) return inv.take_error();
  {
    std::lock_guard<std::mutex> lk(violation_mu_);
    if (tree_violation_) return std::move(*tree_violation_);
  }

  if (cfg_.capture_canonical_dump) {
    Backend* target = &backend_;
    if (auto* faulty = dynamic_cast<FaultInjectingBackend*>(target)) target = &faulty->inner();
    if (auto* eb = dynamic_cast<EmbeddedBackend*>(target)) {
      std::string dump;
      if (cfg_.accumulate_outcomes()) {
        std::lock_guard<std::mutex> lk(acc_mu_);
        auto sorted = accumulated_;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [node, rows] : sorted) {
          OpResult res;
          res.affected = static_cast<std::int64_t>(rows.size());
          res.columns = acc_columns_;
          res.rows = rows;
          dump += fmt::format("== node {}\n{}", node, result_to_text(res));
        }
      } else {
        for (const auto& [node, branch] : tree_.frontier()) {
          auto d = eb->dump_branch(branch);
          if (!d.ok()) return d.take_error();
          dump += fmt::format("== node {}\n{}", node, d.take());
        }
      }
      out.canonical_dump = std::move(dump);
    }
  }
  return out;
}

}  // namespace

Result<std::unique_ptr<Backend>> make_run_backend(const WorkflowConfig& cfg) {
  auto backend = make_backend(cfg.backend, cfg.backend_options);
  if (!backend.ok()) return backend.take_error();
  if (cfg.faults.any_active())
    return std::unique_ptr<Backend>(
        new FaultInjectingBackend(backend.take(), cfg.faults));
  return backend;
}

Result<MacroRunResult> run_workflow(const WorkflowConfig& cfg, Backend& backend,
                                    const Dataset& ds) {
  if (auto v = validate_config(cfg); !v.ok()) return v.take_error();
  if (auto l = load_dataset(ds, backend); !l.ok()) return l.take_error();
  std::uint64_t root_footprint = 0;
  if (backend.capabilities().storage_stats) {
    auto st = backend.storage_stats();
    if (st.ok()) root_footprint = st.value().live_bytes;
  }
  MacroDriver driver(cfg, backend);
  return driver.run(root_footprint);
}

Result<MacroRunResult> run_workflow(const WorkflowConfig& cfg) {
  if (auto v = validate_config(cfg); !v.ok()) return v.take_error();
  auto backend = make_run_backend(cfg);
  if (!backend.ok()) return backend.take_error();
  auto ds = generate_dataset(normalized_data(cfg));
  if (!ds.ok()) return ds.take_error();
  return run_workflow(cfg, *backend.value(), ds.value());
}

nlohmann::json macro_result_to_json(const MacroRunResult& result) {
  nlohmann::json j = report_to_json(result.report);
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& sr : result.step_results)
    steps.push_back({{"worker", sr.worker},
                     {"step", sr.step},
                     {"node", sr.node},
                     {"branch", sr.branch},
                     {"branch_phase_ns", sr.branch_phase.count()},
                     {"mutate_phase_ns", sr.mutate_phase.count()},
                     {"evaluate_phase_ns", sr.evaluate_phase.count()},
                     {"prune_phase_ns", sr.prune_phase.count()},
                     {"outcome", node_status_name(sr.outcome)},
                     {"error", error_class_name(sr.error)}});
  j["macro"]["step_results"] = std::move(steps);
  nlohmann::json tree = nlohmann::json::array();
  for (const auto& n : result.tree)
    tree.push_back({{"node", n.node},
                    {"parent", n.parent},
                    {"branch", n.branch},
                    {"depth", n.depth},
                    {"child_count", n.child_count},
                    {"status", node_status_name(n.status)}});
  j["macro"]["tree"] = std::move(tree);
  j["macro"]["cross_results"] = result.cross_results;
  return j;
}

}  // namespace branchbench
