#include <algorithm>

#include "fastraft/node.hpp"

namespace fastraft {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kFollower:
      return "follower";
    case Role::kCandidate:
      return "candidate";
    case Role::kLeader:
      return "leader";
  }
  return "unknown";
}

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::kRaft ? "raft" : "fastraft";
}

Protocol parse_protocol(std::string_view text) {
  if (text == "raft") return Protocol::kRaft;
  if (text == "fastraft") return Protocol::kFastRaft;
  throw InvalidConfiguration("unknown protocol '" + std::string(text) + "' (expected raft or fastraft)");
}

Node::Node(NodeId self, ClusterConfig cluster, NodeOptions options, std::uint64_t timer_seed)
    : cluster_(std::move(cluster)), options_(std::move(options)), timer_rng_(timer_seed) {
  cluster_.validate();
  if (!cluster_.contains(self)) throw InvalidConfiguration("node is not a cluster member");
  state_.self = self;
}

Node Node::restore(NodeId self, ClusterConfig cluster, NodeOptions options, std::uint64_t timer_seed,
                   const PersistentState& persisted) {
  Node node(self, std::move(cluster), std::move(options), timer_seed);
  auto& s = node.state_;
  s.current_term = persisted.current_term;
  s.voted_for = persisted.voted_for;
  for (const auto& entry : persisted.log) s.log.put(entry);
  // Entries persisted as COMMITTED are known durable at a quorum.
  LogIndex committed{0};
  while (const auto* e = s.log.at(committed.next())) {
    if (!e->committed()) break;
    committed = committed.next();
  }
  s.commit_index = committed;
  s.last_applied = committed;
  return node;
}

PersistentState Node::persistent_state() const {
  return PersistentState{state_.current_term, state_.voted_for, state_.log.entries()};
}

std::size_t Node::fast_quorum() const {
  if (options_.mutations.fast_quorum_override != 0) return options_.mutations.fast_quorum_override;
  return fast_quorum_size(cluster_.size());
}

std::size_t Node::classic_quorum() const { return classic_quorum_size(cluster_.size()); }

void Node::start(SimTime now) {
  advance_clock(now);
  reset_election_timer(now);
}

void Node::advance_clock(SimTime now) { state_.now = std::max(state_.now, now); }

void Node::reset_election_timer(SimTime now) {
  const auto lo = static_cast<std::uint64_t>(cluster_.election_timeout_min.count());
  const auto hi = static_cast<std::uint64_t>(cluster_.election_timeout_max.count());
  state_.election_deadline = now + SimDuration{static_cast<std::int64_t>(timer_rng_.uniform_int(lo, hi))};
}

SimTime Node::next_deadline() const {
  const auto& s = state_;
  if (s.halted) return SimTime::max();
  SimTime next = s.role == Role::kLeader ? s.heartbeat_deadline : s.election_deadline;
  if (s.role == Role::kLeader) {
    for (const auto& [index, slot] : s.fast_slots) {
      if (!slot.resolved) next = std::min(next, slot.deadline);
    }
  }
  for (const auto& [id, p] : s.pending) next = std::min({next, p.next_retry, p.give_up_at});
  for (const auto& f : s.forward_buffer) next = std::min(next, f.expires);
  return next;
}

void Node::become_follower(Term term, SimTime now) {
  auto& s = state_;
  const bool was_leader = s.role == Role::kLeader;
  if (term > s.current_term) {
    s.current_term = term;
    s.voted_for.reset();
    s.known_leader.reset();
  }
  s.role = Role::kFollower;
  s.peers.clear();
  s.fast_slots.clear();
  s.votes_granted.clear();
  s.vote_reports.clear();
  if (was_leader) {
    s.known_leader.reset();
    reset_election_timer(now);
  }
}

void Node::become_candidate(SimTime now, NodeOutput& out) {
  auto& s = state_;
  s.current_term = s.current_term.next();
  s.role = Role::kCandidate;
  s.voted_for = s.self;
  s.known_leader.reset();
  s.peers.clear();
  s.fast_slots.clear();
  s.votes_granted = {s.self};
  s.vote_reports.clear();
  reset_election_timer(now);

  const auto last = s.log.classic_end();
  RequestVote request{s.current_term, s.self, last, s.log.term_at(last), s.commit_index};
  for (auto peer : cluster_.members) {
    if (peer != s.self) out.messages.push_back({peer, request});
  }
  if (s.votes_granted.size() >= classic_quorum()) become_leader(now, out);
}

void Node::become_leader(SimTime now, NodeOutput& out) {
  auto& s = state_;
  s.role = Role::kLeader;
  s.known_leader = s.self;
  s.peers.clear();
  for (auto peer : cluster_.members) {
    if (peer != s.self) s.peers[peer] = PeerProgress{s.commit_index.next(), LogIndex{0}};
  }
  out.observations.push_back(BecameLeader{s.current_term});

  if (fast_enabled()) {
    recover_uncommitted(out);
    designate_self_approved(out);
  } else if (!options_.mutations.skip_election_noop) {
    append_classic(Command{}, s.self, out);
  }
  s.votes_granted.clear();
  s.vote_reports.clear();

  broadcast_append_entries(out);
  s.heartbeat_deadline = now + cluster_.heartbeat_interval;
  leader_advance_commit(out);
  on_leader_known(now, out);
}

RequestVoteReply Node::handle_request_vote(const RequestVote& request, SimTime now) {
  auto& s = state_;
  advance_clock(now);
  if (request.term > s.current_term) become_follower(request.term, now);

  bool granted = false;
  if (request.term == s.current_term && (!s.voted_for || *s.voted_for == request.candidate)) {
    const auto my_last = s.log.classic_end();
    const auto my_term = s.log.term_at(my_last);
    const bool up_to_date = request.last_log_term > my_term ||
                            (request.last_log_term == my_term && request.last_log_index >= my_last);
    granted = up_to_date || options_.mutations.skip_vote_log_check;
  }

  RequestVoteReply reply{s.current_term, granted, {}};
  if (granted) {
    s.voted_for = request.candidate;
    reset_election_timer(now);
    if (fast_enabled()) {
      reply.uncommitted = s.log.entries_between(request.commit_index.next(), s.log.last_index());
    }
  }
  return reply;
}

void Node::handle_request_vote_reply(NodeId from, const RequestVoteReply& reply, SimTime now, NodeOutput& out) {
  auto& s = state_;
  advance_clock(now);
  if (reply.term > s.current_term) {
    become_follower(reply.term, now);
    return;
  }
  if (s.role != Role::kCandidate || reply.term != s.current_term || !reply.granted) return;
  s.votes_granted.insert(from);
  s.vote_reports[from] = reply.uncommitted;
  if (s.votes_granted.size() >= classic_quorum()) become_leader(now, out);
}

AppendEntriesReply Node::handle_append_entries(const AppendEntries& request, SimTime now, NodeOutput& out) {
  auto& s = state_;
  advance_clock(now);
  if (request.term < s.current_term) return {s.current_term, false, LogIndex{0}};

  if (request.term > s.current_term || s.role != Role::kFollower) become_follower(request.term, now);
  const bool newly_known = s.known_leader != request.leader;
  s.known_leader = request.leader;
  reset_election_timer(now);
  if (fast_enabled() && request.approved && request.approved->epoch == s.current_term) {
    s.approved = SelfApprovedSet{request.approved->epoch, request.approved->approved, request.approved->fast_floor};
  }
  if (newly_known) on_leader_known(now, out);

  const auto prev = request.prev_log_index;
  const auto classic_end = s.log.classic_end();
  if (prev > classic_end || (prev.value() > 0 && s.log.term_at(prev) != request.prev_log_term)) {
    const auto hint = std::min(classic_end, prev.prev());
    return {s.current_term, false, hint};
  }

  bool conflict = false;
  for (const auto& incoming : request.entries) {
    const auto* existing = s.log.at(incoming.index);
    if (existing && !existing->tentative() && existing->term == incoming.term && existing->same_value(incoming))
      continue;
    LogEntry copy = incoming;
    if (existing && existing->committed()) {
      if (!existing->same_value(incoming)) {
        violation("AppendEntries would overwrite committed entry " + to_canonical(*existing) + " with " +
                      to_canonical(incoming),
                  out);
        return {s.current_term, false, LogIndex{0}};
      }
      copy.status = EntryStatus::kCommitted;
      conflict = true;
    } else {
      if (existing && !existing->tentative()) conflict = true;
      copy.status = EntryStatus::kAcceptedClassic;
    }
    s.log.put(std::move(copy));
  }

  const LogIndex last_new{prev.value() + request.entries.size()};
  if (conflict) {
    // Classic entries past the leader's view belong to a deposed leader.
    // Tentative ones are fast votes and stay until overwritten.
    for (auto i = s.log.last_index(); i > last_new; i = i.prev()) {
      const auto* e = s.log.at(i);
      if (e && !e->tentative() && !e->committed()) s.log.erase(i);
    }
  }

  if (request.leader_commit > s.commit_index) commit_through(std::min(request.leader_commit, last_new), out);
  return {s.current_term, true, last_new};
}

void Node::handle_append_entries_reply(NodeId from, const AppendEntriesReply& reply, SimTime now,
                                       NodeOutput& out) {
  auto& s = state_;
  advance_clock(now);
  if (reply.term > s.current_term) {
    become_follower(reply.term, now);
    return;
  }
  if (s.role != Role::kLeader || reply.term != s.current_term) return;
  auto it = s.peers.find(from);
  if (it == s.peers.end()) return;
  auto& peer = it->second;
  if (reply.success) {
    peer.match_index = std::max(peer.match_index, reply.match_index);
    peer.next_index = std::max(peer.next_index, peer.match_index.next());
    leader_advance_commit(out);
  } else {
    const auto rewind = std::min(peer.next_index.prev(), reply.match_index.next());
    peer.next_index = std::max(LogIndex{1}, rewind);
    send_append_entries(from, out);
  }
}

void Node::send_append_entries(NodeId peer, NodeOutput& out) {
  auto& s = state_;
  auto& progress = s.peers[peer];
  const auto classic_end = s.log.classic_end();
  if (progress.next_index > classic_end.next()) progress.next_index = classic_end.next();
  if (progress.next_index.value() == 0) progress.next_index = LogIndex{1};
  const auto prev = progress.next_index.prev();

  AppendEntries request;
  request.term = s.current_term;
  request.leader = s.self;
  request.prev_log_index = prev;
  request.prev_log_term = s.log.term_at(prev);
  request.entries = s.log.entries_between(progress.next_index, classic_end);
  request.leader_commit = s.commit_index;
  if (fast_enabled() && s.approved) {
    request.approved = SelfApprovedAnnouncement{s.approved->epoch, s.approved->approved, s.approved->fast_floor};
  }
  out.messages.push_back({peer, std::move(request)});
}

void Node::broadcast_append_entries(NodeOutput& out) {
  for (auto peer : cluster_.members) {
    if (peer != state_.self) send_append_entries(peer, out);
  }
}

LogIndex Node::next_append_index() const {
  auto last = state_.log.last_index();
  if (!state_.fast_slots.empty()) last = std::max(last, state_.fast_slots.rbegin()->first);
  return last.next();
}

void Node::append_classic(Command command, NodeId proposer, NodeOutput& out) {
  auto& s = state_;
  LogEntry entry{next_append_index(), s.current_term, std::move(command), EntryStatus::kAcceptedClassic, proposer};
  s.log.put(std::move(entry));
  (void)out;
}

void Node::leader_replicate(const Command& command, SimTime now, NodeOutput& out) {
  auto& s = state_;
  if (s.role != Role::kLeader) throw NotLeader(s.known_leader);
  advance_clock(now);
  if (!command.empty() && s.log.find_command(command)) return;
  append_classic(command, s.self, out);
  broadcast_append_entries(out);
  leader_advance_commit(out);
}

void Node::leader_advance_commit(NodeOutput& out) {
  auto& s = state_;
  if (s.role != Role::kLeader) return;
  const auto quorum = classic_quorum();
  LogIndex target = s.commit_index;
  for (auto n = s.log.classic_end(); n > s.commit_index; n = n.prev()) {
    std::size_t replicas = 1;
    for (const auto& [peer, progress] : s.peers) {
      if (progress.match_index >= n) ++replicas;
    }
    if (replicas < quorum) continue;
    if (s.log.term_at(n) != s.current_term && !options_.mutations.skip_commit_term_guard) break;
    target = n;
    break;
  }
  // Fast-committed entries directly above the classic commit point.
  while (const auto* next = s.log.at(target.next())) {
    if (!next->committed()) break;
    target = target.next();
  }
  commit_through(target, out);
}

void Node::commit_through(LogIndex target, NodeOutput& out) {
  auto& s = state_;
  if (target <= s.commit_index) return;
  const auto from = s.commit_index;
  for (auto i = from.next(); i <= target; i = i.next()) {
    const auto* e = s.log.at(i);
    if (e == nullptr || e->tentative()) {
      violation("commit index would cover an unresolved slot " + std::to_string(i.value()), out);
      target = i.prev();
      break;
    }
    if (!e->committed()) {
      s.log.set_status(i, EntryStatus::kCommitted);
      note_committed(*s.log.at(i), false, out);
    }
  }
  if (target <= from) return;
  s.commit_index = target;
  s.last_applied = target;
  out.observations.push_back(CommitAdvanced{from, target});
}

void Node::note_committed(const LogEntry& entry, bool via_fast, NodeOutput& out) {
  out.observations.push_back(EntryCommitted{entry, state_.role == Role::kLeader, via_fast});
  if (!entry.command.empty()) finish_pending(entry.command, ClientApplyReply::Outcome::kCommitted, entry.index, out);
}

void Node::violation(std::string what, NodeOutput& out) {
  state_.halted = true;
  out.observations.push_back(ProtocolViolation{std::move(what)});
}

void Node::handle_forward(const ForwardOperation& op, SimTime now, NodeOutput& out) {
  auto& s = state_;
  advance_clock(now);
  if (op.term > s.current_term) become_follower(op.term, now);
  if (s.role == Role::kLeader) {
    leader_replicate(op.command, now, out);
  } else if (s.known_leader && *s.known_leader != s.self) {
    send_forward(op.command, op.origin, out);
  } else if (s.forward_buffer.size() < options_.forward_buffer_limit) {
    s.forward_buffer.push_back({op, now + options_.forward_timeout});
  }
}

void Node::send_forward(const Command& command, NodeId origin, NodeOutput& out) {
  const auto& s = state_;
  if (!s.known_leader || *s.known_leader == s.self) return;
  out.messages.push_back({*s.known_leader, ForwardOperation{s.current_term, origin, command}});
}

void Node::on_leader_known(SimTime now, NodeOutput& out) {
  auto& s = state_;
  if (!s.known_leader) return;
  std::deque<BufferedForward> buffered;
  buffered.swap(s.forward_buffer);
  for (auto& f : buffered) {
    if (s.role == Role::kLeader) {
      leader_replicate(f.op.command, now, out);
    } else {
      send_forward(f.op.command, f.op.origin, out);
    }
  }
  for (auto& [id, p] : s.pending) {
    if (p.sent) continue;
    p.sent = true;
    p.next_retry = now + options_.retry_interval;
    if (s.role == Role::kLeader) {
      leader_replicate(p.command, now, out);
    } else {
      send_forward(p.command, s.self, out);
    }
  }
}

void Node::client_apply(const ClientApply& request, SimTime now, NodeOutput& out) {
  auto& s = state_;
  if (s.halted) return;
  advance_clock(now);
  if (s.pending.size() >= options_.forward_buffer_limit || s.pending_by_command.contains(request.command)) {
    ClientApplyReply reply{request.request_id, ClientApplyReply::Outcome::kFailure, LogIndex{0}, s.known_leader};
    out.observations.push_back(ClientReplied{reply});
    return;
  }
  // Already committed here (e.g. a client re-submission): answer at once.
  if (auto at = s.log.find_command(request.command); at && *at <= s.commit_index) {
    ClientApplyReply reply{request.request_id, ClientApplyReply::Outcome::kCommitted, *at, {}};
    out.observations.push_back(ClientReplied{reply});
    return;
  }

  PendingCommand pending{request.request_id, request.command, now, now + options_.retry_interval,
                         now + options_.forward_timeout, false};
  s.pending_by_command[request.command] = request.request_id;
  auto& p = s.pending.emplace(request.request_id, std::move(pending)).first->second;

  if (fast_enabled() && can_propose_fast()) {
    p.sent = true;
    propose_fast(request.command, now, out);
  } else if (s.role == Role::kLeader) {
    p.sent = true;
    leader_replicate(request.command, now, out);
  } else if (s.known_leader && *s.known_leader != s.self) {
    p.sent = true;
    send_forward(request.command, s.self, out);
  }
}

void Node::finish_pending(const Command& command, ClientApplyReply::Outcome outcome, LogIndex index,
                          NodeOutput& out) {
  auto& s = state_;
  auto it = s.pending_by_command.find(command);
  if (it == s.pending_by_command.end()) return;
  const auto id = it->second;
  s.pending_by_command.erase(it);
  s.pending.erase(id);
  out.observations.push_back(ClientReplied{ClientApplyReply{id, outcome, index, {}}});
}

void Node::process_pending(SimTime now, NodeOutput& out) {
  auto& s = state_;
  std::vector<Command> expired;
  for (auto& [id, p] : s.pending) {
    if (now >= p.give_up_at) {
      expired.push_back(p.command);
      continue;
    }
    if (now < p.next_retry) continue;
    p.next_retry = now + options_.retry_interval;
    if (s.role == Role::kLeader) {
      p.sent = true;
      leader_replicate(p.command, now, out);
    } else if (s.known_leader && *s.known_leader != s.self) {
      p.sent = true;
      send_forward(p.command, s.self, out);
    }
  }
  for (const auto& command : expired) finish_pending(command, ClientApplyReply::Outcome::kFailure, LogIndex{0}, out);
  while (!s.forward_buffer.empty() && s.forward_buffer.front().expires <= now) s.forward_buffer.pop_front();
}

void Node::tick(SimTime now, NodeOutput& out) {
  auto& s = state_;
  if (s.halted) return;
  advance_clock(now);
  if (s.role == Role::kLeader) {
    if (now >= s.heartbeat_deadline) {
      broadcast_append_entries(out);
      s.heartbeat_deadline = now + cluster_.heartbeat_interval;
    }
    if (fast_enabled()) scan_fast_slots(now, out);
  } else if (now >= s.election_deadline) {
    become_candidate(now, out);
  }
  process_pending(now, out);
}

void Node::receive(NodeId from, const Message& message, SimTime now, NodeOutput& out) {
  if (state_.halted) return;
  std::visit(Overloaded{
                 [&](const RequestVote& m) { out.messages.push_back({from, handle_request_vote(m, now)}); },
                 [&](const RequestVoteReply& m) { handle_request_vote_reply(from, m, now, out); },
                 [&](const AppendEntries& m) {
                   auto reply = handle_append_entries(m, now, out);
                   if (!state_.halted) out.messages.push_back({from, reply});
                 },
                 [&](const AppendEntriesReply& m) { handle_append_entries_reply(from, m, now, out); },
                 [&](const ForwardOperation& m) { handle_forward(m, now, out); },
                 [&](const FastProposal& m) {
                   if (!fast_enabled()) return;
                   if (auto vote = handle_fast_proposal(m, now, out)) out.messages.push_back({m.leader, *vote});
                 },
                 [&](const FastVote& m) {
                   if (fast_enabled()) leader_collect_fast_votes(m, now, out);
                 },
                 [&](const ClientApply& m) { client_apply(m, now, out); },
                 [&](const ClientApplyReply&) {},
             },
             message);
}

}  // namespace fastraft
