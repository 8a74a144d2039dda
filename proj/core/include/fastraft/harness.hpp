#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fastraft/audit.hpp"
#include "fastraft/node.hpp"
#include "fastraft/sim_config.hpp"
#include "fastraft/simulator.hpp"
#include "fastraft/workload.hpp"

namespace fastraft {

/// Everything needed to reproduce one simulated run.
struct Experiment {
  std::size_t nodes = 3;
  ClusterConfig timing = ClusterConfig::with_members(3);
  NodeOptions node;
  WorkloadSpec workload;
  SimConfig sim;
  /// Extra simulated time after the last command resolves.
  SimDuration grace = from_ms(200);

  /// Cluster of `nodes` members carrying the timing fields of `timing`.
  ClusterConfig cluster() const;
  void validate() const;
};

bool apply_experiment_key(Experiment& experiment, std::string_view key, std::string_view value);
/// Applies every key; throws InvalidConfiguration on unknown keys.
void apply_key_values(Experiment& experiment, const KeyValues& kv);
KeyValues experiment_to_key_values(const Experiment& experiment);

enum class Track : std::uint8_t { kFast, kClassic, kFallback };
std::string_view to_string(Track track);

struct CommandRecord {
  RequestId request_id;
  Command command;
  SimTime injected{0};
  /// First time the entry was COMMITTED at the then-current leader.
  std::optional<SimTime> committed;
  std::optional<LogIndex> index;
  Track track = Track::kClassic;
  bool failure_reported = false;
};

struct RunMetrics {
  std::vector<CommandRecord> commands;
  std::map<std::string, std::uint64_t, std::less<>> messages_by_variant;
  std::size_t failure_count = 0;
  bool aborted = false;
  std::string abort_reason;
  std::uint64_t trace_hash = 0;
  SimTime end_time{0};

  std::size_t committed_count() const;
  /// Commit latencies in ms, in request order.
  std::vector<double> latencies_ms() const;
  double mean_latency_ms() const;
  double fast_share() const;
};

struct RunResult {
  RunMetrics metrics;
  AuditReport audit;
  /// Recorded only with TraceMode::kRecord.
  std::vector<std::string> trace;
  std::map<NodeId, PersistentState> final_states;
};

/// Builds the cluster, injects the workload, runs until every command is
/// committed or failed (plus grace) or the hard deadline, then audits.
RunResult run_workload(const Experiment& experiment, TraceMode trace = TraceMode::kHash);

struct SweepRow {
  double loss = 0;
  Protocol protocol = Protocol::kFastRaft;
  double mean_ms = 0;
  double p50_ms = 0;
  double p99_ms = 0;
  double failure_rate = 0;
  double fast_share = 0;
  std::size_t runs = 0;
  std::size_t aborted_runs = 0;
  std::size_t audit_failures = 0;
  /// Mean latency of each seed's run, in seed order.
  std::vector<double> seed_means;

  bool flagged() const { return aborted_runs != 0 || audit_failures != 0; }
};

struct SweepSpec {
  std::vector<double> loss_levels{0.0, 0.01, 0.02, 0.04, 0.06, 0.08};
  std::vector<Protocol> protocols{Protocol::kRaft, Protocol::kFastRaft};
  std::size_t seeds = 30;
  /// Run i of a point uses sim seed first_seed + i, for both protocols.
  std::uint64_t first_seed = 1;
  Experiment base;
  std::size_t threads = 1;
};

/// Experiment defaults used by sweeps: 200 bursty commands to a non-leader.
Experiment default_sweep_experiment();

/// One row per (loss, protocol) in grid order, independent of thread count.
std::vector<SweepRow> latency_sweep(const SweepSpec& spec);

/// Exact header `loss,protocol,mean_ms,p50_ms,p99_ms,failure_rate,fast_share`.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Nearest-rank percentile of `values` (p in [0, 100]).
double percentile(std::vector<double> values, double p);

/// Percentile bootstrap of the mean; returns {lower, upper} at `confidence`.
std::pair<double, double> bootstrap_mean_interval(const std::vector<double>& samples, std::size_t resamples,
                                                  double confidence, std::uint64_t seed);

}  // namespace fastraft
