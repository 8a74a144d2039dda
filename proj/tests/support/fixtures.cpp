#include "fixtures.hpp"

#include <algorithm>

namespace fastraft::testing {

Bench::Bench(std::size_t nodes, NodeOptions options, std::uint64_t seed) : observed_(nodes), seed_(seed) {
  const auto cluster = ClusterConfig::with_members(nodes);
  for (auto member : cluster.members) {
    nodes_.emplace_back(member, cluster, options, seed * 1000 + member.value());
    nodes_.back().start(now_);
  }
}

void Bench::apply(NodeId id, NodeOutput& out) {
  for (const auto& o : out.observations) {
    auditor_.observe(id, now_, o);
    observed_[id.value()].push_back(o);
  }
  for (auto& m : out.messages) network_.push_back({id, m.to, std::move(m.message)});
  out.clear();
}

void Bench::fire(std::uint32_t id) {
  auto& n = nodes_.at(id);
  now_ = std::max(now_, n.next_deadline());
  NodeOutput out;
  n.tick(now_, out);
  apply(NodeId{id}, out);
}

void Bench::elect(std::uint32_t id) {
  fire(id);
  deliver_all();
}

void Bench::client_apply(std::uint32_t at, const Command& command, std::uint64_t request_id) {
  NodeOutput out;
  nodes_.at(at).client_apply(ClientApply{command, RequestId{request_id}}, now_, out);
  apply(NodeId{at}, out);
}

void Bench::restart(std::uint32_t id) {
  auto& n = nodes_.at(id);
  auto revived = Node::restore(n.state().self, n.cluster(), n.options(), seed_ * 1000 + id + 500, n.persistent_state());
  revived.start(now_);
  n = std::move(revived);
}

bool Bench::deliver_if(const std::function<bool(const InFlight&)>& match) {
  auto it = std::find_if(network_.begin(), network_.end(), match);
  if (it == network_.end()) return false;
  auto msg = std::move(*it);
  network_.erase(it);
  NodeOutput out;
  nodes_.at(msg.to.value()).receive(msg.from, msg.message, now_, out);
  apply(msg.to, out);
  return true;
}

bool Bench::deliver(std::uint32_t from, std::uint32_t to, std::string_view variant) {
  return deliver_if([&](const InFlight& m) {
    return m.from == NodeId{from} && m.to == NodeId{to} && variant_name(m.message) == variant;
  });
}

std::size_t Bench::drop_if(const std::function<bool(const InFlight&)>& match) {
  return std::erase_if(network_, match);
}

std::size_t Bench::drop_from(std::uint32_t from) {
  return drop_if([&](const InFlight& m) { return m.from == NodeId{from}; });
}

std::size_t Bench::drop_all() {
  const auto n = network_.size();
  network_.clear();
  return n;
}

std::size_t Bench::deliver_all(std::size_t limit) {
  std::size_t moved = 0;
  while (!network_.empty() && moved < limit) {
    deliver_if([](const InFlight&) { return true; });
    ++moved;
  }
  return moved;
}

void Bench::run_until(SimTime until) {
  for (;;) {
    deliver_all();
    std::uint32_t next = 0;
    SimTime best = SimTime::max();
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      const auto at = nodes_[i].next_deadline();
      if (at < best) {
        best = at;
        next = i;
      }
    }
    if (best > until) break;
    fire(next);
  }
  now_ = std::max(now_, until);
}

std::optional<NodeId> Bench::leader() const {
  std::optional<NodeId> best;
  Term term{0};
  for (const auto& n : nodes_) {
    if (n.state().role == Role::kLeader && (!best || n.state().current_term > term)) {
      best = n.state().self;
      term = n.state().current_term;
    }
  }
  return best;
}

AuditReport Bench::audit() const {
  AuditReport report = auditor_.report();
  std::map<NodeId, std::vector<LogEntry>> prefixes;
  std::map<NodeId, std::vector<LogEntry>> logs;
  for (const auto& n : nodes_) {
    const auto& s = n.state();
    prefixes[s.self] = s.log.entries_between(LogIndex{1}, s.commit_index);
    logs[s.self] = s.log.entries();
  }
  report.merge(compare_logs(prefixes, logs));
  return report;
}

std::size_t Bench::in_flight(std::string_view variant) const {
  return static_cast<std::size_t>(std::count_if(network_.begin(), network_.end(), [&](const InFlight& m) {
    return variant_name(m.message) == variant;
  }));
}

Bench settled_cluster(std::size_t nodes, NodeOptions options, std::uint32_t leader) {
  Bench bench(nodes, std::move(options));
  bench.elect(leader);
  // One heartbeat round carries the self-approved designation to everyone.
  bench.fire(leader);
  bench.deliver_all();
  return bench;
}

}  // namespace fastraft::testing
