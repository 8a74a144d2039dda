#include "fastraft/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace fastraft {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool parse_flag(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw InvalidConfiguration(std::string(key) + " must be 0 or 1");
}

std::string join_nodes(const std::vector<NodeId>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i != 0) out += ',';
    out += std::to_string(nodes[i].value());
  }
  return out;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

ClusterConfig Experiment::cluster() const {
  if (nodes == 0) throw InvalidConfiguration("cluster needs at least one node");
  auto c = ClusterConfig::with_members(nodes);
  c.election_timeout_min = timing.election_timeout_min;
  c.election_timeout_max = timing.election_timeout_max;
  c.heartbeat_interval = timing.heartbeat_interval;
  c.fast_vote_timeout = timing.fast_vote_timeout;
  return c;
}

void Experiment::validate() const {
  const auto c = cluster();
  c.validate();
  sim.validate(c);
  workload.validate(c);
  if (node.self_approved) {
    for (auto n : *node.self_approved) {
      if (!c.contains(n)) throw InvalidConfiguration("self-approved set names a node outside the cluster");
    }
  }
}

bool apply_experiment_key(Experiment& e, std::string_view key, std::string_view value) {
  if (apply_sim_key(e.sim, key, value) || apply_workload_key(e.workload, key, value)) return true;
  auto& m = e.node.mutations;
  if (key == "protocol") {
    e.node.protocol = parse_protocol(value);
  } else if (key == "nodes") {
    e.nodes = parse_u64(value);
    if (e.nodes == 0) throw InvalidConfiguration("nodes must be at least 1");
  } else if (key == "election_min") {
    e.timing.election_timeout_min = parse_ms(value);
  } else if (key == "election_max") {
    e.timing.election_timeout_max = parse_ms(value);
  } else if (key == "heartbeat") {
    e.timing.heartbeat_interval = parse_ms(value);
  } else if (key == "fast_vote_timeout") {
    e.timing.fast_vote_timeout = parse_ms(value);
  } else if (key == "retry_interval") {
    e.node.retry_interval = parse_ms(value);
  } else if (key == "forward_timeout") {
    e.node.forward_timeout = parse_ms(value);
  } else if (key == "self_approved") {
    if (value == "all") {
      e.node.self_approved.reset();
    } else {
      e.node.self_approved = parse_node_list(value);
    }
  } else if (key == "grace") {
    e.grace = parse_ms(value);
  } else if (key == "skip_vote_log_check") {
    m.skip_vote_log_check = parse_flag(key, value);
  } else if (key == "skip_commit_term_guard") {
    m.skip_commit_term_guard = parse_flag(key, value);
  } else if (key == "skip_election_noop") {
    m.skip_election_noop = parse_flag(key, value);
  } else if (key == "fast_quorum_override") {
    m.fast_quorum_override = parse_u64(value);
  } else {
    return false;
  }
  return true;
}

void apply_key_values(Experiment& experiment, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    if (!apply_experiment_key(experiment, k, v)) throw InvalidConfiguration("unknown config key '" + k + "'");
  }
}

KeyValues experiment_to_key_values(const Experiment& e) {
  KeyValues kv;
  kv.emplace_back("protocol", std::string(to_string(e.node.protocol)));
  kv.emplace_back("nodes", std::to_string(e.nodes));
  kv.emplace_back("election_min", format_ms(e.timing.election_timeout_min));
  kv.emplace_back("election_max", format_ms(e.timing.election_timeout_max));
  kv.emplace_back("heartbeat", format_ms(e.timing.heartbeat_interval));
  kv.emplace_back("fast_vote_timeout", format_ms(e.timing.fast_vote_timeout));
  kv.emplace_back("retry_interval", format_ms(e.node.retry_interval));
  kv.emplace_back("forward_timeout", format_ms(e.node.forward_timeout));
  kv.emplace_back("self_approved", e.node.self_approved ? join_nodes(*e.node.self_approved) : "all");
  kv.emplace_back("grace", format_ms(e.grace));
  const auto& m = e.node.mutations;
  if (m.skip_vote_log_check) kv.emplace_back("skip_vote_log_check", "1");
  if (m.skip_commit_term_guard) kv.emplace_back("skip_commit_term_guard", "1");
  if (m.skip_election_noop) kv.emplace_back("skip_election_noop", "1");
  if (m.fast_quorum_override != 0) kv.emplace_back("fast_quorum_override", std::to_string(m.fast_quorum_override));
  for (auto& p : workload_to_key_values(e.workload)) kv.push_back(std::move(p));
  for (auto& p : sim_config_to_key_values(e.sim)) kv.push_back(std::move(p));
  return kv;
}

std::string_view to_string(Track track) {
  switch (track) {
    case Track::kFast:
      return "fast";
    case Track::kClassic:
      return "classic";
    case Track::kFallback:
      return "fallback";
  }
  return "classic";
}

std::size_t RunMetrics::committed_count() const {
  return static_cast<std::size_t>(
      std::count_if(commands.begin(), commands.end(), [](const CommandRecord& r) { return r.committed.has_value(); }));
}

std::vector<double> RunMetrics::latencies_ms() const {
  std::vector<double> out;
  for (const auto& r : commands) {
    if (r.committed) out.push_back(to_ms(*r.committed - r.injected));
  }
  return out;
}

double RunMetrics::mean_latency_ms() const {
  const auto l = latencies_ms();
  if (l.empty()) return kNaN;
  return std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
}

double RunMetrics::fast_share() const {
  std::size_t fast = 0;
  std::size_t total = 0;
  for (const auto& r : commands) {
    if (!r.committed) continue;
    ++total;
    if (r.track == Track::kFast) ++fast;
  }
  return total == 0 ? kNaN : static_cast<double>(fast) / static_cast<double>(total);
}

RunResult run_workload(const Experiment& experiment, TraceMode trace) {
  experiment.validate();
  const auto cluster = experiment.cluster();
  Simulator sim(cluster, experiment.node, experiment.sim, trace);
  SafetyAuditor auditor;
  RunResult result;
  auto& metrics = result.metrics;

  auto injections = generate_injections(experiment.workload, cluster, experiment.sim.seed);
  std::unordered_map<Command, std::size_t> by_command;
  std::vector<bool> resolved(injections.size(), false);
  std::size_t resolved_count = 0;
  std::unordered_map<Command, bool> fast_proposed;
  SimTime last_event{0};
  SimTime last_fault{0};
  for (std::size_t i = 0; i < injections.size(); ++i) {
    const auto& inj = injections[i];
    metrics.commands.push_back(CommandRecord{inj.request_id, inj.command, inj.at, {}, {}, Track::kClassic, false});
    by_command.emplace(inj.command, i);
    last_event = std::max(last_event, inj.at);
  }
  for (const auto& c : experiment.sim.crashes) last_fault = std::max(last_fault, c.restart.value_or(c.crash));
  for (const auto& p : experiment.sim.partitions) last_fault = std::max(last_fault, p.end);
  last_event = std::max(last_event, last_fault);

  auto resolve = [&](std::size_t i) {
    if (!resolved[i]) {
      resolved[i] = true;
      ++resolved_count;
    }
  };

  sim.set_observer([&](NodeId node, SimTime at, const Observation& o) {
    auditor.observe(node, at, o);
    std::visit(Overloaded{
                   [&](const EntryCommitted& c) {
                     if (!c.at_leader || c.entry.command.empty()) return;
                     auto it = by_command.find(c.entry.command);
                     if (it == by_command.end()) return;
                     auto& rec = metrics.commands[it->second];
                     if (rec.committed) return;
                     rec.committed = at;
                     rec.index = c.entry.index;
                     rec.track = c.via_fast_quorum                    ? Track::kFast
                                 : fast_proposed.contains(rec.command) ? Track::kFallback
                                                                       : Track::kClassic;
                     resolve(it->second);
                   },
                   [&](const FastProposed& p) { fast_proposed.emplace(p.command, true); },
                   [&](const ClientReplied& r) {
                     if (r.reply.outcome != ClientApplyReply::Outcome::kFailure) return;
                     const auto i = r.reply.request_id.value();
                     if (i == 0 || i > metrics.commands.size()) return;
                     metrics.commands[i - 1].failure_reported = true;
                     resolve(i - 1);
                   },
                   [](const auto&) {},
               },
               o);
  });
  for (auto& inj : injections) sim.inject(std::move(inj));

  const auto hard_stop = last_event + experiment.node.forward_timeout + from_ms(1000);
  try {
    // Faults scheduled after the workload settles still get played out.
    sim.run_until(hard_stop, [&] { return resolved_count == metrics.commands.size() && sim.now() >= last_fault; });
    if (resolved_count == metrics.commands.size()) sim.run_until(sim.now() + experiment.grace);
  } catch (const EventBudgetExceeded& e) {
    metrics.aborted = true;
    metrics.abort_reason = e.what();
  }

  metrics.failure_count = metrics.commands.size() - metrics.committed_count();
  for (const auto& [variant, n] : sim.stats().sent_by_variant) metrics.messages_by_variant[variant] = n;
  metrics.trace_hash = sim.trace_hash();
  metrics.end_time = sim.now();

  result.final_states = sim.durable_states();
  std::map<NodeId, std::vector<LogEntry>> logs;
  for (const auto& [id, st] : result.final_states) logs[id] = st.log;
  result.audit = auditor.report();
  result.audit.merge(compare_logs(sim.committed_prefixes(), logs));
  result.trace = sim.trace_lines();
  return result;
}

Experiment default_sweep_experiment() {
  Experiment e;
  e.nodes = 3;
  e.workload.total_commands = 200;
  e.workload.target.kind = TargetSelection::Kind::kNonLeader;
  return e;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::pair<double, double> bootstrap_mean_interval(const std::vector<double>& samples, std::size_t resamples,
                                                  double confidence, std::uint64_t seed) {
  if (samples.empty() || resamples == 0) return {kNaN, kNaN};
  Rng rng(seed);
  std::vector<double> means;
  means.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) sum += samples[rng.uniform_int(0, samples.size() - 1)];
    means.push_back(sum / static_cast<double>(samples.size()));
  }
  const double tail = (1.0 - confidence) / 2.0 * 100.0;
  return {percentile(means, tail), percentile(means, 100.0 - tail)};
}

std::vector<SweepRow> latency_sweep(const SweepSpec& spec) {
  for (double loss : spec.loss_levels) {
    if (!(loss >= 0.0 && loss < 1.0)) throw InvalidConfiguration("loss levels must lie in [0, 1)");
  }
  if (spec.seeds == 0) throw InvalidConfiguration("sweep needs at least one seed per point");

  struct Task {
    std::size_t row;
    std::size_t seed_index;
  };
  struct Outcome {
    std::vector<double> latencies;
    std::size_t commands = 0;
    std::size_t failures = 0;
    std::size_t fast = 0;
    bool aborted = false;
    bool audit_failed = false;
  };

  std::vector<SweepRow> rows;
  for (double loss : spec.loss_levels) {
    for (auto protocol : spec.protocols) {
      SweepRow row;
      row.loss = loss;
      row.protocol = protocol;
      rows.push_back(row);
    }
  }
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t s = 0; s < spec.seeds; ++s) tasks.push_back({r, s});
  }
  std::vector<Outcome> outcomes(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) {
      const auto& task = tasks[t];
      Experiment e = spec.base;
      e.sim.loss_probability = rows[task.row].loss;
      e.sim.seed = spec.first_seed + task.seed_index;
      e.node.protocol = rows[task.row].protocol;
      const auto run = run_workload(e, TraceMode::kOff);
      auto& out = outcomes[t];
      out.latencies = run.metrics.latencies_ms();
      out.commands = run.metrics.commands.size();
      out.failures = run.metrics.failure_count;
      for (const auto& c : run.metrics.commands) out.fast += c.committed && c.track == Track::kFast ? 1 : 0;
      out.aborted = run.metrics.aborted;
      out.audit_failed = !run.audit.ok();
    }
  };
  const auto threads = std::max<std::size_t>(1, std::min(spec.threads, tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  std::vector<std::vector<double>> pooled(rows.size());
  std::vector<std::size_t> commands(rows.size()), failures(rows.size()), fast(rows.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto r = tasks[t].row;
    const auto& o = outcomes[t];
    auto& row = rows[r];
    pooled[r].insert(pooled[r].end(), o.latencies.begin(), o.latencies.end());
    commands[r] += o.commands;
    failures[r] += o.failures;
    fast[r] += o.fast;
    row.runs += 1;
    row.aborted_runs += o.aborted ? 1 : 0;
    row.audit_failures += o.audit_failed ? 1 : 0;
    row.seed_means.push_back(o.latencies.empty() ? kNaN
                                                 : std::accumulate(o.latencies.begin(), o.latencies.end(), 0.0) /
                                                       static_cast<double>(o.latencies.size()));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& row = rows[r];
    const auto& l = pooled[r];
    row.mean_ms = l.empty() ? kNaN : std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
    row.p50_ms = percentile(l, 50);
    row.p99_ms = percentile(l, 99);
    row.failure_rate = commands[r] == 0 ? 0.0 : static_cast<double>(failures[r]) / static_cast<double>(commands[r]);
    row.fast_share = l.empty() ? kNaN : static_cast<double>(fast[r]) / static_cast<double>(l.size());
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "loss,protocol,mean_ms,p50_ms,p99_ms,failure_rate,fast_share\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g,%s,%.3f,%.3f,%.3f,%.6f,%.4f\n", r.loss, std::string(to_string(r.protocol)).c_str(),
                  r.mean_ms, r.p50_ms, r.p99_ms, r.failure_rate, r.fast_share);
    out << buf;
  }
}

}  // namespace fastraft
