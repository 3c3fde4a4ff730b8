// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/microdriver.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <map>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "branchbench/rng.hpp"

namespace branchbench {

namespace {

constexpr std::uint64_t kMicroKeyStream = 0x31C0ull;

struct KindName {
  MicroOpKind kind;
  std::string_view name;
};
constexpr KindName kKindNames[] = {
    {MicroOpKind::create, "create"},
    {MicroOpKind::connect, "connect"},
    {MicroOpKind::create_connect, "create_connect"},
    {MicroOpKind::delete_branch, "delete"},
    {MicroOpKind::point_read, "point_read"},
    {MicroOpKind::range_read, "range_read"},
};

struct RefName {
  BranchRef ref;
  std::string_view name;
};
constexpr RefName kRefNames[] = {
    {BranchRef::root, "root"},
    {BranchRef::tip, "tip"},
    {BranchRef::newest, "new"},
    {BranchRef::worker_branch, "worker"},
};

// Iterations a block contributes for this scenario's knob values.
Result<std::uint64_t> resolve_repeat(const ScenarioConfig& cfg, const std::string& repeat) {
  if (repeat == "branches") return static_cast<std::uint64_t>(cfg.branches);
  if (repeat == "repetitions") return static_cast<std::uint64_t>(cfg.repetitions);
  std::uint64_t n = 0;
  const auto [ptr, ec] = std::from_chars(repeat.data(), repeat.data() + repeat.size(), n);
  if (ec != std::errc{} || ptr != repeat.data() + repeat.size() || n == 0)
    return make_error(ErrorClass::configuration,
                      fmt::format("bad repeat '{}': want a positive count, 'branches', or "
                                  "'repetitions'",
                                  repeat));
  return n;
}

Result<void> validate_block(const ScenarioConfig& cfg, const ScriptBlock& block, bool in_setup,
                            bool have_setup_branches, std::string_view where) {
  if (auto n = resolve_repeat(cfg, block.repeat); !n.ok())
    return make_error(ErrorClass::configuration,
                      fmt::format("{}: {}", where, n.error().message));
  if (block.ops.empty())
    return make_error(ErrorClass::configuration, fmt::format("{}: empty op list", where));
  bool created_earlier = false;
  for (std::size_t i = 0; i < block.ops.size(); ++i) {
    const MicroOp& op = block.ops[i];
    const auto at = [&] { return fmt::format("{} op {}", where, i + 1); };
    if (op.kind == MicroOpKind::create_connect)
      return make_error(ErrorClass::configuration,
                        fmt::format("{}: create_connect is a derived sample, not a script op",
                                    at()));
    if (op.target == BranchRef::newest) {
      if (op.kind == MicroOpKind::create)
        return make_error(ErrorClass::configuration,
                          fmt::format("{}: create cannot use 'new' as its parent", at()));
      if (!created_earlier)
        return make_error(ErrorClass::configuration,
                          fmt::format("{}: 'new' has no branch; no create precedes it", at()));
    }
    if (op.target == BranchRef::worker_branch) {
      if (in_setup)
        return make_error(ErrorClass::configuration,
                          fmt::format("{}: 'worker' is undefined during setup", at()));
      if (!have_setup_branches)
        return make_error(ErrorClass::configuration,
                          fmt::format("{}: 'worker' needs at least one setup-created branch",
                                      at()));
    }
    if (op.kind == MicroOpKind::create) created_earlier = true;
  }
  return {};
}

// Branches the setup script creates, given the scenario's knob values.
Result<std::uint64_t> setup_branch_count(const ScenarioConfig& cfg) {
  std::uint64_t total = 0;
  for (const auto& block : cfg.setup) {
    auto n = resolve_repeat(cfg, block.repeat);
    if (!n.ok()) return n.take_error();
    std::uint64_t creates = 0;
    for (const auto& op : block.ops)
      if (op.kind == MicroOpKind::create) ++creates;
    total += n.value() * creates;
  }
  return total;
}

MetricCategory sample_category(MicroOpKind kind) {
  switch (kind) {
    case MicroOpKind::create:
      return MetricCategory::branch_create;
    case MicroOpKind::connect:
      return MetricCategory::branch_connect;
    case MicroOpKind::delete_branch:
      return MetricCategory::branch_delete;
    default:
      return MetricCategory::read_query;
  }
}

// Mutable per-worker script state. Sessions opened by a connect op (timed)
// or lazily for reads (untimed) are cached per branch.
struct WorkerState {
  std::uint32_t id = 0;
  BranchId tip = kRootBranch;
  std::uint64_t ordinal = 0;
  Rng rng{0};
  std::map<BranchId, std::shared_ptr<Session>> sessions;
  std::vector<Sample> samples;
};

class ScenarioRun {
 public:
  ScenarioRun(const ScenarioConfig& cfg, Backend& backend, const Dataset& ds)
      : cfg_(cfg), backend_(backend), ds_(ds) {}

  Result<MicroRunResult> run();

 private:
  Result<void> run_block(const ScriptBlock& block, WorkerState& w, bool timed);
  Result<BranchId> resolve(BranchRef ref, const WorkerState& w) const;
  Result<OpResult> timed_read(WorkerState& w, MicroOpKind kind, BranchId branch,
                              std::chrono::nanoseconds& dur);
  OperationDescriptor read_descriptor(WorkerState& w, MicroOpKind kind, BranchId branch) const;

  const ScenarioConfig& cfg_;
  Backend& backend_;
  const Dataset& ds_;
  const TableData* table_ = nullptr;
  std::vector<BranchId> setup_branches_;
};

Result<BranchId> ScenarioRun::resolve(BranchRef ref, const WorkerState& w) const {
  switch (ref) {
    case BranchRef::root:
      return kRootBranch;
    case BranchRef::tip:
      return w.tip;
    case BranchRef::worker_branch:
      return setup_branches_[w.id % setup_branches_.size()];
    case BranchRef::newest:
      break;  // handled inline per iteration
  }
  return make_error(ErrorClass::internal, "unresolved branch ref");
}

OperationDescriptor ScenarioRun::read_descriptor(WorkerState& w, MicroOpKind kind,
                                                 BranchId /*branch*/) const {
  OperationDescriptor d;
  d.table = cfg_.table;
  d.provenance = {cfg_.name, w.id, 0, OpPhase::evaluate,
                  static_cast<std::uint32_t>(w.ordinal)};
  d.op_id = pack_op_id(w.id, 0, OpPhase::evaluate, static_cast<std::uint32_t>(w.ordinal));
  const auto& rows = table_->rows;
  if (kind == MicroOpKind::point_read) {
    d.kind = OpKind::point_read;
    d.key = rows[w.rng.uniform(rows.size())].first;
  } else {
    d.kind = OpKind::range_read;
    const std::size_t span = rows.size() - cfg_.range_size + 1;
    d.lo = rows[w.rng.uniform(span)].first;
    d.limit = cfg_.range_size;
  }
  return d;
}

Result<OpResult> ScenarioRun::timed_read(WorkerState& w, MicroOpKind kind, BranchId branch,
                                         std::chrono::nanoseconds& dur) {
  // The session open is connection plumbing, not the read under test; keep
  // it outside the clock.
  auto it = w.sessions.find(branch);
  if (it == w.sessions.end()) {
    auto conn = backend_.connect_branch(branch);
    if (!conn.ok()) {
      dur = std::chrono::nanoseconds{0};
      return conn.take_error();
    }
    it = w.sessions.emplace(branch, std::move(conn.value())).first;
  }
  const OperationDescriptor d = read_descriptor(w, kind, branch);
  const auto t0 = std::chrono::steady_clock::now();
  auto res = it->second->execute(d);
  dur = std::chrono::steady_clock::now() - t0;
  return res;
}

Result<void> ScenarioRun::run_block(const ScriptBlock& block, WorkerState& w, bool timed) {
  auto reps = resolve_repeat(cfg_, block.repeat);
  if (!reps.ok()) return reps.take_error();

  for (std::uint64_t it = 0; it < reps.value(); ++it) {
    ++w.ordinal;
    BranchId newest = kRootBranch;
    bool have_newest = false;
    bool create_failed = false;
    // Set while the previous op was a successful create; enables the
    // derived create_connect sum when a connect to it follows directly.
    bool prev_was_create = false;
    std::chrono::nanoseconds create_dur{0};

    for (const MicroOp& op : block.ops) {
      const bool wants_newest = op.kind != MicroOpKind::create && op.target == BranchRef::newest;
      if (wants_newest && !have_newest) {
        if (create_failed) {
          prev_was_create = false;
          continue;  // the branch never came to exist; nothing to measure
        }
        return make_error(ErrorClass::internal, "script referenced 'new' before a create");
      }

      Sample s;
      s.kind = op.kind;
      s.ordinal = w.ordinal;
      s.worker = w.id;

      switch (op.kind) {
        case MicroOpKind::create: {
          auto parent = resolve(op.target, w);
          if (!parent.ok()) return parent.take_error();
          const auto t0 = std::chrono::steady_clock::now();
          auto r = backend_.create_branch(parent.value());
          s.duration = std::chrono::steady_clock::now() - t0;
          if (r.ok()) {
            newest = r.value();
            have_newest = true;
            w.tip = newest;
            if (!timed) setup_branches_.push_back(newest);
          } else {
            s.outcome = r.error().cls;
            create_failed = true;
          }
          create_dur = s.duration;
          prev_was_create = s.succeeded();
          break;
        }
        case MicroOpKind::connect: {
          auto target =
              wants_newest ? Result<BranchId>(newest) : resolve(op.target, w);
          if (!target.ok()) return target.take_error();
          const auto t0 = std::chrono::steady_clock::now();
          auto r = backend_.connect_branch(target.value());
          s.duration = std::chrono::steady_clock::now() - t0;
          if (r.ok())
            w.sessions[target.value()] = std::move(r.value());
          else
            s.outcome = r.error().cls;
          if (timed && prev_was_create && wants_newest) {
            Sample sum = s;
            sum.kind = MicroOpKind::create_connect;
            sum.duration = create_dur + s.duration;
            w.samples.push_back(s);
            w.samples.push_back(sum);
            prev_was_create = false;
            continue;
          }
          prev_was_create = false;
          break;
        }
        case MicroOpKind::delete_branch: {
          auto target =
              wants_newest ? Result<BranchId>(newest) : resolve(op.target, w);
          if (!target.ok()) return target.take_error();
          const auto t0 = std::chrono::steady_clock::now();
          auto r = backend_.delete_branch(target.value());
          s.duration = std::chrono::steady_clock::now() - t0;
          if (r.ok()) {
            w.sessions.erase(target.value());
            if (w.tip == target.value()) w.tip = kRootBranch;
            if (have_newest && newest == target.value()) have_newest = false;
          } else {
            s.outcome = r.error().cls;
          }
          prev_was_create = false;
          break;
        }
        case MicroOpKind::point_read:
        case MicroOpKind::range_read: {
          auto target =
              wants_newest ? Result<BranchId>(newest) : resolve(op.target, w);
          if (!target.ok()) return target.take_error();
          auto r = timed_read(w, op.kind, target.value(), s.duration);
          if (!r.ok()) s.outcome = r.error().cls;
          prev_was_create = false;
          break;
        }
        case MicroOpKind::create_connect:
          return make_error(ErrorClass::internal, "create_connect reached the executor");
      }
      if (timed) w.samples.push_back(s);
    }
  }
  return {};
}

Result<MicroRunResult> ScenarioRun::run() {
  if (auto v = validate_scenario(cfg_); !v.ok()) return v.take_error();

  table_ = ds_.table(cfg_.table);
  if (table_ == nullptr)
    return make_error(ErrorClass::configuration,
                      fmt::format("scenario table '{}' is not in the dataset", cfg_.table));
  if (table_->rows.size() < cfg_.range_size)
    return make_error(ErrorClass::configuration,
                      fmt::format("table '{}' has {} rows, range_size is {}", cfg_.table,
                                  table_->rows.size(), cfg_.range_size));

  if (auto l = load_dataset(ds_, backend_); !l.ok()) return l.take_error();

  MicroRunResult out;
  out.report.kind = "micro";
  out.report.config = scenario_to_json(cfg_);
  if (backend_.capabilities().storage_stats) {
    auto st = backend_.storage_stats();
    if (!st.ok()) return st.take_error();
    out.report.root_footprint_bytes = st.value().live_bytes;
  }

  // Setup: same engine, no clock, no samples. Failures abort the run; a
  // scenario measured against a half-built population is meaningless.
  BranchId setup_tip = kRootBranch;
  {
    WorkerState setup;
    setup.rng = Rng(stream_seed(cfg_.seed, kMicroKeyStream, 0xFFFFull));
    for (const auto& block : cfg_.setup) {
      if (auto r = run_block(block, setup, /*timed=*/false); !r.ok()) return r.take_error();
    }
    setup_tip = setup.tip;  // seeds every worker; setup sessions drop here
  }

  const std::uint32_t workers =
      cfg_.workers != 0 ? cfg_.workers : static_cast<std::uint32_t>(setup_branches_.size());

  std::vector<WorkerState> states(workers);
  for (std::uint32_t i = 0; i < workers; ++i) {
    states[i].id = i;
    states[i].tip = setup_tip;
    states[i].rng = Rng(stream_seed(cfg_.seed, kMicroKeyStream, i));
  }
  std::vector<Result<void>> outcomes(workers, Result<void>{});

  const auto body = [&](std::uint32_t i) {
    for (const auto& block : cfg_.execution) {
      auto r = run_block(block, states[i], /*timed=*/true);
      if (!r.ok()) {
        outcomes[i] = std::move(r);
        return;
      }
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::uint32_t i = 0; i < workers; ++i) threads.emplace_back(body, i);
    for (auto& t : threads) t.join();
  }
  out.execution_wall = std::chrono::steady_clock::now() - t0;

  for (auto& r : outcomes)
    if (!r.ok()) return r.take_error();

  std::uint64_t issued = 0;
  std::map<std::pair<int, std::uint64_t>, std::pair<std::vector<std::chrono::nanoseconds>,
                                                    std::uint64_t>>
      groups;
  for (auto& w : states) {
    for (const Sample& s : w.samples) {
      auto& g = groups[{static_cast<int>(s.kind), ordinal_bucket(s.ordinal)}];
      if (s.succeeded())
        g.first.push_back(s.duration);
      else
        ++g.second;
      if (s.kind != MicroOpKind::create_connect) {
        ++issued;
        out.timed_total += s.duration;
        MetricRecord rec;
        rec.category = sample_category(s.kind);
        rec.duration = s.duration;
        rec.outcome = s.outcome;
        rec.provenance = {cfg_.name, s.worker, 0,
                          s.kind == MicroOpKind::point_read || s.kind == MicroOpKind::range_read
                              ? OpPhase::evaluate
                              : OpPhase::branch,
                          static_cast<std::uint32_t>(s.ordinal)};
        out.report.records.push_back(rec);
      }
    }
    out.samples.insert(out.samples.end(), w.samples.begin(), w.samples.end());
  }

  for (auto& [key, g] : groups) {
    MicroSummary ms;
    ms.kind = static_cast<MicroOpKind>(key.first);
    ms.bucket = key.second;
    ms.stats = summarize_durations(g.first, g.second);
    out.summaries.push_back(ms);
  }

  out.report.end_to_end = out.execution_wall;
  const double secs = std::chrono::duration<double>(out.execution_wall).count();
  out.throughput_ops_per_sec = secs > 0 ? static_cast<double>(issued) / secs : 0.0;

  if (backend_.capabilities().storage_stats) {
    auto st = backend_.storage_stats();
    if (!st.ok()) return st.take_error();
    out.report.storage = st.value();
  }
  return out;
}

}  // namespace

std::string_view micro_op_name(MicroOpKind k) {
  for (const auto& e : kKindNames)
    if (e.kind == k) return e.name;
  return "unknown";
}

std::optional<MicroOpKind> micro_op_from_name(std::string_view s) {
  for (const auto& e : kKindNames)
    if (e.name == s) return e.kind;
  return std::nullopt;
}

std::string_view branch_ref_name(BranchRef r) {
  for (const auto& e : kRefNames)
    if (e.ref == r) return e.name;
  return "unknown";
}

std::optional<BranchRef> branch_ref_from_name(std::string_view s) {
  for (const auto& e : kRefNames)
    if (e.name == s) return e.ref;
  return std::nullopt;
}

std::uint64_t ordinal_bucket(std::uint64_t ordinal) {
  return ordinal == 0 ? 0 : std::bit_floor(ordinal);
}

Result<void> validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.name.empty()) return make_error(ErrorClass::configuration, "scenario needs a name");
  if (cfg.branches == 0 || cfg.repetitions == 0)
    return make_error(ErrorClass::configuration, "branches and repetitions must be positive");
  if (cfg.range_size == 0)
    return make_error(ErrorClass::configuration, "range_size must be positive");
  if (cfg.scale == 0) return make_error(ErrorClass::configuration, "scale must be positive");
  if (cfg.table.empty()) return make_error(ErrorClass::configuration, "scenario needs a table");
  if (cfg.workers > 1024)
    return make_error(ErrorClass::configuration, "workers capped at 1024");
  if (cfg.execution.empty())
    return make_error(ErrorClass::configuration, "execution script is empty");

  auto setup_creates = setup_branch_count(cfg);
  if (!setup_creates.ok()) return setup_creates.take_error();
  const bool have_setup = setup_creates.value() > 0;
  if (cfg.workers == 0 && !have_setup)
    return make_error(ErrorClass::configuration,
                      "workers=0 means one per setup branch, but setup creates none");

  for (std::size_t i = 0; i < cfg.setup.size(); ++i) {
    if (auto v = validate_block(cfg, cfg.setup[i], /*in_setup=*/true, have_setup,
                                fmt::format("setup block {}", i + 1));
        !v.ok())
      return v.take_error();
  }
  for (std::size_t i = 0; i < cfg.execution.size(); ++i) {
    if (auto v = validate_block(cfg, cfg.execution[i], /*in_setup=*/false, have_setup,
                                fmt::format("execution block {}", i + 1));
        !v.ok())
      return v.take_error();
  }
  return {};
}

DataGenConfig scenario_data(const ScenarioConfig& cfg) {
  DataGenConfig d = cfg.data;
  d.warehouses = cfg.scale;
  d.seed = cfg.seed;
  return d;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  const auto block_json = [](const ScriptBlock& b) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& op : b.ops)
      ops.push_back({{"op", std::string(micro_op_name(op.kind))},
                     {"branch", std::string(branch_ref_name(op.target))}});
    return nlohmann::json{{"repeat", b.repeat}, {"ops", std::move(ops)}};
  };
  nlohmann::json j;
  j["name"] = cfg.name;
  j["backend"] = cfg.backend;
  j["backend_options"] = {{"delta_compaction_threshold", cfg.backend_options.delta_compaction_threshold},
                          {"pathcopy_fanout", cfg.backend_options.pathcopy_fanout},
                          {"pathcopy_gc_slack_bytes", cfg.backend_options.pathcopy_gc_slack_bytes}};
  j["workers"] = cfg.workers;
  j["branches"] = cfg.branches;
  j["repetitions"] = cfg.repetitions;
  j["range_size"] = cfg.range_size;
  j["seed"] = cfg.seed;
  j["scale"] = cfg.scale;
  j["table"] = cfg.table;
  j["setup"] = nlohmann::json::array();
  for (const auto& b : cfg.setup) j["setup"].push_back(block_json(b));
  j["execution"] = nlohmann::json::array();
  for (const auto& b : cfg.execution) j["execution"].push_back(block_json(b));
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

Result<ScenarioConfig> scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) return make_error(ErrorClass::configuration, "scenario must be an object");
  ScenarioConfig c;
  const auto parse_blocks = [](const nlohmann::json& arr,
                               std::vector<ScriptBlock>& out) -> Result<void> {
    if (!arr.is_array())
      return make_error(ErrorClass::configuration, "script must be an array of blocks");
    for (const auto& bj : arr) {
      ScriptBlock b;
      if (bj.contains("repeat")) {
        const auto& r = bj.at("repeat");
        b.repeat = r.is_string() ? r.get<std::string>() : fmt::format("{}", r.get<std::uint64_t>());
      }
      if (!bj.contains("ops") || !bj.at("ops").is_array())
        return make_error(ErrorClass::configuration, "block needs an 'ops' array");
      for (const auto& oj : bj.at("ops")) {
        MicroOp op;
        const auto kind = micro_op_from_name(oj.value("op", ""));
        if (!kind)
          return make_error(ErrorClass::configuration,
                            fmt::format("unknown op '{}'", oj.value("op", "")));
        op.kind = *kind;
        const auto ref = branch_ref_from_name(oj.value("branch", "tip"));
        if (!ref)
          return make_error(ErrorClass::configuration,
                            fmt::format("unknown branch ref '{}'", oj.value("branch", "")));
        op.target = *ref;
        b.ops.push_back(op);
      }
      out.push_back(std::move(b));
    }
    return {};
  };

  c.name = j.value("name", c.name);
  c.backend = j.value("backend", c.backend);
  if (j.contains("backend_options")) {
    const auto& b = j.at("backend_options");
    c.backend_options.delta_compaction_threshold =
        b.value("delta_compaction_threshold", c.backend_options.delta_compaction_threshold);
    c.backend_options.pathcopy_fanout = b.value("pathcopy_fanout", c.backend_options.pathcopy_fanout);
    c.backend_options.pathcopy_gc_slack_bytes =
        b.value("pathcopy_gc_slack_bytes", c.backend_options.pathcopy_gc_slack_bytes);
  }
  c.workers = j.value("workers", c.workers);
  c.branches = j.value("branches", c.branches);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.range_size = j.value("range_size", c.range_size);
  c.seed = j.value("seed", c.seed);
  c.scale = j.value("scale", c.scale);
  c.table = j.value("table", c.table);
  if (j.contains("setup"))
    if (auto r = parse_blocks(j.at("setup"), c.setup); !r.ok()) return r.take_error();
  if (j.contains("execution"))
    if (auto r = parse_blocks(j.at("execution"), c.execution); !r.ok()) return r.take_error();
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
  if (auto v = validate_scenario(c); !v.ok()) return v.take_error();
  return c;
}

std::vector<ScenarioConfig> builtin_scenarios() {
  std::vector<ScenarioConfig> out;

  // Chain of creates, each immediately connected: the spine cost curve.
  {
    ScenarioConfig c;
    c.name = "spine_create";
    c.branches = 100;
    c.execution = {{"branches",
                    {{MicroOpKind::create, BranchRef::tip},
                     {MicroOpKind::connect, BranchRef::newest}}}};
    out.push_back(std::move(c));
  }

  // Four workers racing to hang children directly off the root.
  {
    ScenarioConfig c;
    c.name = "wide_connect";
    c.workers = 4;
    c.branches = 25;
    c.execution = {{"branches",
                    {{MicroOpKind::create, BranchRef::root},
                     {MicroOpKind::connect, BranchRef::newest}}}};
    out.push_back(std::move(c));
  }

  // Wide population, reads pinned to one branch: read cost vs branch count.
  {
    ScenarioConfig c;
    c.name = "read_single_thread";
    c.branches = 8;
    c.repetitions = 200;
    c.setup = {{"branches", {{MicroOpKind::create, BranchRef::root}}}};
    c.execution = {{"repetitions", {{MicroOpKind::range_read, BranchRef::tip}}}};
    out.push_back(std::move(c));
  }

  // One worker per setup branch, each reading its own branch concurrently.
  {
    ScenarioConfig c;
    c.name = "read_multi_thread";
    c.workers = 0;
    c.branches = 4;
    c.repetitions = 200;
    c.setup = {{"branches", {{MicroOpKind::create, BranchRef::root}}}};
    c.execution = {{"repetitions", {{MicroOpKind::range_read, BranchRef::worker_branch}}}};
    out.push_back(std::move(c));
  }

  // Chain-shaped setup, then paired point/range probes at the deep tip.
  {
    ScenarioConfig c;
    c.name = "point_vs_range";
    c.branches = 10;
    c.repetitions = 200;
    c.setup = {{"branches", {{MicroOpKind::create, BranchRef::tip}}}};
    c.execution = {{"repetitions",
                    {{MicroOpKind::point_read, BranchRef::tip},
                     {MicroOpKind::range_read, BranchRef::tip}}}};
    out.push_back(std::move(c));
  }
  return out;
}

Result<ScenarioConfig> builtin_scenario(std::string_view name) {
  for (auto& c : builtin_scenarios())
    if (c.name == name) return std::move(c);
  return make_error(ErrorClass::not_found, fmt::format("no scenario named '{}'", name));
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& c : builtin_scenarios()) names.push_back(c.name);
  return names;
}

Result<MicroRunResult> run_scenario(const ScenarioConfig& cfg, Backend& backend,
                                    const Dataset& ds) {
  return ScenarioRun(cfg, backend, ds).run();
}

Result<MicroRunResult> run_scenario(const ScenarioConfig& cfg) {
  if (auto v = validate_scenario(cfg); !v.ok()) return v.take_error();
  auto backend = make_backend(cfg.backend, cfg.backend_options);
  if (!backend.ok()) return backend.take_error();
  auto ds = generate_dataset(scenario_data(cfg));
  if (!ds.ok()) return ds.take_error();
  return run_scenario(cfg, *backend.value(), ds.value());
}

nlohmann::json micro_result_to_json(const MicroRunResult& result) {
  nlohmann::json j = report_to_json(result.report);
  nlohmann::json samples = nlohmann::json::array();
  for (const Sample& s : result.samples)
    samples.push_back({{"op", std::string(micro_op_name(s.kind))},
                       {"ordinal", s.ordinal},
                       {"worker", s.worker},
                       {"duration_ns", s.duration.count()},
                       {"outcome", std::string(error_class_name(s.outcome))}});
  nlohmann::json summaries = nlohmann::json::array();
  for (const MicroSummary& m : result.summaries)
    summaries.push_back({{"op", std::string(micro_op_name(m.kind))},
                         {"bucket", m.bucket},
                         {"p50_ns", m.stats.p50.count()},
                         {"p95_ns", m.stats.p95.count()},
                         {"p99_ns", m.stats.p99.count()},
                         {"max_ns", m.stats.max.count()},
                         {"count", m.stats.count},
                         {"failures", m.stats.failures}});
  j["micro"] = {{"samples", std::move(samples)},
                {"summaries", std::move(summaries)},
                {"timed_total_ns", result.timed_total.count()},
                {"execution_wall_ns", result.execution_wall.count()},
                {"throughput_ops_per_sec", result.throughput_ops_per_sec}};
  return j;
}

}  // namespace branchbench
