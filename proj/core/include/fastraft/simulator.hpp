#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastraft/node.hpp"
#include "fastraft/sim_config.hpp"

namespace fastraft {

/// Raised when a run processes more events than SimConfig::event_budget.
class EventBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A client command entering the cluster. An unset target means "the
/// lowest-id live node that is not the leader when the command arrives".
struct ClientInjection {
  SimTime at{0};
  std::optional<NodeId> target;
  Command command;
  RequestId request_id;
};

enum class TraceMode : std::uint8_t {
  kOff,
  /// Running FNV-1a hash of the trace lines only.
  kHash,
  kRecord,
};

struct NetworkStats {
  std::map<std::string, std::uint64_t, std::less<>> sent_by_variant;
  std::uint64_t sent = 0;
  std::uint64_t lost = 0;
  std::uint64_t partitioned = 0;
  std::uint64_t to_crashed = 0;
  std::uint64_t delivered = 0;
  std::uint64_t events = 0;
};

/// Deterministic discrete-event simulation of one cluster. Events are
/// processed in (time, insertion sequence) order on the calling thread.
class Simulator {
 public:
  using ObservationSink = std::function<void(NodeId, SimTime, const Observation&)>;

  Simulator(ClusterConfig cluster, NodeOptions options, SimConfig config, TraceMode trace = TraceMode::kHash);

  void set_observer(ObservationSink sink) { observer_ = std::move(sink); }
  void inject(ClientInjection injection);

  /// Processes events with time <= until. `stop` is checked after each
  /// event; returning true ends the run early. Throws EventBudgetExceeded.
  void run_until(SimTime until, const std::function<bool()>& stop = {});

  SimTime now() const { return now_; }
  const ClusterConfig& cluster() const { return cluster_; }
  const SimConfig& config() const { return config_; }

  /// Null while the node is crashed.
  const Node* node(NodeId id) const;
  bool alive(NodeId id) const { return node(id) != nullptr; }
  /// The live leader with the highest term, if any.
  std::optional<NodeId> leader() const;

  /// Last known durable state of every node (live nodes report their
  /// current state; crashed nodes the state captured at crash time).
  std::map<NodeId, PersistentState> durable_states() const;
  /// Committed prefix of every node as of now (crashed nodes: at crash time).
  std::map<NodeId, std::vector<LogEntry>> committed_prefixes() const;

  const std::vector<std::string>& trace_lines() const { return trace_lines_; }
  std::string trace_text() const;
  std::uint64_t trace_hash() const { return trace_hash_; }
  const NetworkStats& stats() const { return stats_; }

 private:
  struct Deliver {
    NodeId from;
    NodeId to;
    Message message;
  };
  struct TimerFire {
    NodeId node;
    std::uint64_t generation;
  };
  struct Crash {
    NodeId node;
  };
  struct Restart {
    NodeId node;
  };
  struct Inject {
    ClientInjection injection;
  };
  using Payload = std::variant<Deliver, TimerFire, Crash, Restart, Inject>;

  struct Event {
    SimTime time;
    std::uint64_t seq;
    std::shared_ptr<Payload> payload;

    bool operator>(const Event& other) const {
      return time != other.time ? time > other.time : seq > other.seq;
    }
  };

  struct Slot {
    std::unique_ptr<Node> node;
    PersistentState durable;
    std::vector<LogEntry> committed_at_crash;
    std::uint64_t timer_generation = 0;
    SimTime timer_at = SimTime::max();
    std::uint64_t incarnation = 0;
  };

  void schedule(SimTime at, Payload payload);
  void process(const Event& event);
  void send(NodeId from, const Outbound& out);
  void drain(NodeId id, NodeOutput& out);
  void rearm(NodeId id);
  void crash(NodeId id);
  void restart(NodeId id);
  SimDuration sample_delay(NodeId from, NodeId to);
  std::unique_ptr<Node> make_node(NodeId id, const PersistentState* restored);
  std::filesystem::path snapshot_path(NodeId id) const;

  void trace(std::string_view from, NodeId to, std::string_view variant, std::string_view payload_hex);

  ClusterConfig cluster_;
  NodeOptions options_;
  SimConfig config_;
  TraceMode trace_mode_;
  ObservationSink observer_;

  std::map<NodeId, Slot> slots_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  SimTime now_{0};

  Rng loss_rng_;
  Rng delay_rng_;

  std::vector<std::string> trace_lines_;
  std::uint64_t trace_hash_ = 0xcbf29ce484222325ULL;
  NetworkStats stats_;
  NodeOutput scratch_;
};

/// Formats simulated time as milliseconds with three decimals.
std::string format_trace_time(SimTime t);

}  // namespace fastraft
