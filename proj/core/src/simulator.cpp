#include "fastraft/simulator.hpp"

#include <cstdio>

namespace fastraft {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t timer_seed(std::uint64_t seed, NodeId id, std::uint64_t incarnation) {
  return Rng(seed, RngStream::kTimeouts, (static_cast<std::uint64_t>(id.value()) << 20) ^ incarnation).next_u64();
}

}  // namespace

std::string format_trace_time(SimTime t) {
  const auto us = t.count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(us / 1000), static_cast<long long>(us % 1000));
  return buf;
}

Simulator::Simulator(ClusterConfig cluster, NodeOptions options, SimConfig config, TraceMode trace)
    : cluster_(std::move(cluster)),
      options_(std::move(options)),
      config_(std::move(config)),
      trace_mode_(trace),
      loss_rng_(config_.seed, RngStream::kLoss),
      delay_rng_(config_.seed, RngStream::kDelay) {
  cluster_.validate();
  config_.validate(cluster_);
  if (config_.persist_dir) std::filesystem::create_directories(*config_.persist_dir);
  for (auto id : cluster_.members) {
    auto& slot = slots_[id];
    slot.node = make_node(id, nullptr);
    slot.node->start(now_);
    rearm(id);
  }
  for (const auto& c : config_.crashes) {
    schedule(c.crash, Crash{c.node});
    if (c.restart) schedule(*c.restart, Restart{c.node});
  }
}

std::unique_ptr<Node> Simulator::make_node(NodeId id, const PersistentState* restored) {
  const auto seed = timer_seed(config_.seed, id, slots_[id].incarnation);
  if (restored != nullptr) return std::make_unique<Node>(Node::restore(id, cluster_, options_, seed, *restored));
  return std::make_unique<Node>(id, cluster_, options_, seed);
}

void Simulator::inject(ClientInjection injection) {
  const auto at = injection.at;
  schedule(at, Inject{std::move(injection)});
}

void Simulator::schedule(SimTime at, Payload payload) {
  queue_.push(Event{at, next_seq_++, std::make_shared<Payload>(std::move(payload))});
}

const Node* Simulator::node(NodeId id) const {
  auto it = slots_.find(id);
  return it == slots_.end() ? nullptr : it->second.node.get();
}

std::optional<NodeId> Simulator::leader() const {
  std::optional<NodeId> best;
  Term best_term{0};
  for (const auto& [id, slot] : slots_) {
    if (!slot.node) continue;
    const auto& s = slot.node->state();
    if (s.role == Role::kLeader && !s.halted && (!best || s.current_term > best_term)) {
      best = id;
      best_term = s.current_term;
    }
  }
  return best;
}

void Simulator::run_until(SimTime until, const std::function<bool()>& stop) {
  while (!queue_.empty() && queue_.top().time <= until) {
    Event event = queue_.top();
    queue_.pop();
    if (++stats_.events > config_.event_budget)
      throw EventBudgetExceeded("event budget of " + std::to_string(config_.event_budget) + " exceeded at t=" +
                                format_trace_time(event.time) + "ms");
    now_ = std::max(now_, event.time);
    process(event);
    if (stop && stop()) return;
  }
  now_ = std::max(now_, until);
}

void Simulator::process(const Event& event) {
  std::visit(Overloaded{
                 [&](const Deliver& d) {
                   auto& slot = slots_.at(d.to);
                   if (!slot.node) {
                     ++stats_.to_crashed;
                     return;
                   }
                   ++stats_.delivered;
                   if (trace_mode_ != TraceMode::kOff) {
                     trace(std::to_string(d.from.value()), d.to, variant_name(d.message),
                           to_hex(encode_payload(d.message)));
                   }
                   slot.node->receive(d.from, d.message, now_, scratch_);
                   drain(d.to, scratch_);
                 },
                 [&](const TimerFire& t) {
                   auto& slot = slots_.at(t.node);
                   if (!slot.node || t.generation != slot.timer_generation) return;
                   slot.timer_at = SimTime::max();
                   trace(std::to_string(t.node.value()), t.node, "Timer", "");
                   slot.node->tick(now_, scratch_);
                   drain(t.node, scratch_);
                 },
                 [&](const Crash& c) {
                   trace("-", c.node, "Crash", "");
                   crash(c.node);
                 },
                 [&](const Restart& r) {
                   trace("-", r.node, "Restart", "");
                   restart(r.node);
                 },
                 [&](const Inject& i) {
                   auto target = i.injection.target;
                   if (!target) {
                     const auto current = leader();
                     for (const auto& [id, slot] : slots_) {
                       if (slot.node && id != current) {
                         target = id;
                         break;
                       }
                     }
                   }
                   if (!target || !alive(*target)) return;
                   ClientApply request{i.injection.command, i.injection.request_id};
                   if (trace_mode_ != TraceMode::kOff) trace("-", *target, "ClientApply", to_hex(encode_payload(request)));
                   slots_.at(*target).node->client_apply(request, now_, scratch_);
                   drain(*target, scratch_);
                 },
             },
             *event.payload);
}

void Simulator::drain(NodeId id, NodeOutput& out) {
  if (observer_) {
    for (const auto& o : out.observations) observer_(id, now_, o);
  }
  for (const auto& m : out.messages) send(id, m);
  out.clear();
  rearm(id);
}

void Simulator::rearm(NodeId id) {
  auto& slot = slots_.at(id);
  if (!slot.node) return;
  auto deadline = slot.node->next_deadline();
  if (deadline == SimTime::max()) {
    if (slot.timer_at != SimTime::max()) {
      ++slot.timer_generation;
      slot.timer_at = SimTime::max();
    }
    return;
  }
  deadline = std::max(deadline, now_);
  if (deadline == slot.timer_at) return;
  ++slot.timer_generation;
  slot.timer_at = deadline;
  schedule(deadline, TimerFire{id, slot.timer_generation});
}

void Simulator::send(NodeId from, const Outbound& out) {
  ++stats_.sent;
  const auto variant = variant_name(out.message);
  auto it = stats_.sent_by_variant.find(variant);
  if (it == stats_.sent_by_variant.end()) it = stats_.sent_by_variant.emplace(std::string(variant), 0).first;
  ++it->second;

  for (const auto& p : config_.partitions) {
    if (p.active(now_) && p.separates(from, out.to)) {
      ++stats_.partitioned;
      return;
    }
  }
  if (!alive(out.to)) {
    ++stats_.to_crashed;
    return;
  }
  if (loss_rng_.bernoulli(config_.loss_probability)) {
    ++stats_.lost;
    return;
  }
  schedule(now_ + sample_delay(from, out.to), Deliver{from, out.to, out.message});
}

SimDuration Simulator::sample_delay(NodeId from, NodeId to) {
  const auto& d = config_.delay;
  if (d.kind == DelayModel::Kind::kFixed) return d.fixed;
  if (d.kind == DelayModel::Kind::kPerLink) {
    if (auto it = d.per_link.find({from, to}); it != d.per_link.end()) return it->second;
  }
  const auto lo = static_cast<std::uint64_t>(d.min.count());
  const auto hi = static_cast<std::uint64_t>(d.max.count());
  return SimDuration{static_cast<std::int64_t>(delay_rng_.uniform_int(lo, hi))};
}

std::filesystem::path Simulator::snapshot_path(NodeId id) const {
  return *config_.persist_dir / ("node-" + std::to_string(id.value()) + ".snapshot");
}

void Simulator::crash(NodeId id) {
  auto& slot = slots_.at(id);
  if (!slot.node) return;
  const auto& s = slot.node->state();
  slot.committed_at_crash = s.log.entries_between(LogIndex{1}, s.commit_index);
  // Durable writes happen on every mutation in a real node; capturing the
  // state at the crash instant is observationally the same here.
  slot.durable = config_.persistence ? slot.node->persistent_state() : PersistentState{};
  if (config_.persistence && config_.persist_dir) write_snapshot_file(snapshot_path(id), slot.durable);
  slot.node.reset();
  ++slot.timer_generation;
  slot.timer_at = SimTime::max();
}

void Simulator::restart(NodeId id) {
  auto& slot = slots_.at(id);
  if (slot.node) return;
  ++slot.incarnation;
  if (config_.persistence) {
    if (config_.persist_dir) slot.durable = read_snapshot_file(snapshot_path(id));
    slot.node = make_node(id, &slot.durable);
  } else {
    slot.node = make_node(id, nullptr);
  }
  slot.node->start(now_);
  rearm(id);
}

std::map<NodeId, PersistentState> Simulator::durable_states() const {
  std::map<NodeId, PersistentState> out;
  for (const auto& [id, slot] : slots_) out[id] = slot.node ? slot.node->persistent_state() : slot.durable;
  return out;
}

std::map<NodeId, std::vector<LogEntry>> Simulator::committed_prefixes() const {
  std::map<NodeId, std::vector<LogEntry>> out;
  for (const auto& [id, slot] : slots_) {
    if (slot.node) {
      const auto& s = slot.node->state();
      out[id] = s.log.entries_between(LogIndex{1}, s.commit_index);
    } else {
      out[id] = slot.committed_at_crash;
    }
  }
  return out;
}

void Simulator::trace(std::string_view from, NodeId to, std::string_view variant, std::string_view payload_hex) {
  if (trace_mode_ == TraceMode::kOff) return;
  std::string line = format_trace_time(now_);
  line += '|';
  line += from;
  line += '|';
  line += std::to_string(to.value());
  line += '|';
  line += variant;
  line += '|';
  line += payload_hex;
  for (unsigned char c : line) {
    trace_hash_ ^= c;
    trace_hash_ *= 0x100000001b3ULL;
  }
  trace_hash_ ^= '\n';
  trace_hash_ *= 0x100000001b3ULL;
  if (trace_mode_ == TraceMode::kRecord) trace_lines_.push_back(std::move(line));
}

std::string Simulator::trace_text() const {
  std::string out;
  for (const auto& line : trace_lines_) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace fastraft
