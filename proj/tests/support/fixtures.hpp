#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "fastraft/audit.hpp"
#include "fastraft/node.hpp"

namespace fastraft::testing {

struct InFlight {
  NodeId from;
  NodeId to;
  Message message;
};

/// Hand-driven cluster of real nodes on a shared clock. Nothing moves
/// unless the test delivers, drops or fires it.
class Bench {
 public:
  Bench(std::size_t nodes, NodeOptions options, std::uint64_t seed = 7);

  Node& node(std::uint32_t id) { return nodes_.at(id); }
  const Node& node(std::uint32_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  SimTime now() const { return now_; }
  void advance(SimDuration d) { now_ += d; }

  std::deque<InFlight>& network() { return network_; }
  const SafetyAuditor& auditor() const { return auditor_; }
  const std::vector<Observation>& observations(std::uint32_t id) const { return observed_.at(id); }

  /// Moves the clock to the node's next deadline and ticks it.
  void fire(std::uint32_t id);
  /// Fires `id` and delivers everything until the network drains.
  void elect(std::uint32_t id);
  void client_apply(std::uint32_t at, const Command& command, std::uint64_t request_id);
  /// Crash and immediate restart: volatile state is lost, durable state kept.
  void restart(std::uint32_t id);

  /// Delivers (or drops) the first in-flight message matching the filter.
  bool deliver_if(const std::function<bool(const InFlight&)>& match);
  bool deliver(std::uint32_t from, std::uint32_t to, std::string_view variant);
  std::size_t drop_if(const std::function<bool(const InFlight&)>& match);
  std::size_t drop_from(std::uint32_t from);
  std::size_t drop_all();
  /// FIFO delivery until the network is empty or `limit` messages moved.
  std::size_t deliver_all(std::size_t limit = 100000);

  /// Runs the cluster on timers and FIFO delivery up to `until`.
  void run_until(SimTime until);

  std::optional<NodeId> leader() const;
  /// Final-state audit: online auditor plus compare_logs over current logs.
  AuditReport audit() const;

  /// Messages of one variant currently in flight.
  std::size_t in_flight(std::string_view variant) const;

 private:
  void apply(NodeId id, NodeOutput& out);

  std::vector<Node> nodes_;
  std::vector<std::vector<Observation>> observed_;
  std::deque<InFlight> network_;
  SafetyAuditor auditor_;
  SimTime now_{0};
  std::uint64_t seed_;
};

/// Elects `leader`, then delivers every message and fires every timer in
/// time order for `settle` so fast-track designation has propagated.
Bench settled_cluster(std::size_t nodes, NodeOptions options, std::uint32_t leader = 0);

}  // namespace fastraft::testing
