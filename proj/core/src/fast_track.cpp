#include <algorithm>
#include <tuple>

#include "fastraft/node.hpp"

namespace fastraft {

bool SelfApprovedSet::contains(NodeId id) const {
  return std::find(approved.begin(), approved.end(), id) != approved.end();
}

std::size_t FastSlotState::accepts_possible(const ProposalId& id, std::size_t members) const {
  auto it = candidates.find(id);
  std::size_t against = 0;
  for (auto voter : voted) {
    if (it == candidates.end() || !it->second.supporters.contains(voter)) ++against;
  }
  return members - std::min(members, against);
}

bool Node::can_propose_fast() const {
  const auto& s = state_;
  if (!fast_enabled() || s.halted || s.role == Role::kCandidate) return false;
  if (!s.approved || s.approved->epoch != s.current_term || !s.approved->contains(s.self)) return false;
  return s.known_leader.has_value();
}

void Node::propose_fast(const Command& command, SimTime now, NodeOutput& out) {
  auto& s = state_;
  advance_clock(now);
  if (!can_propose_fast()) {
    if (s.role == Role::kLeader) {
      leader_replicate(command, now, out);
    } else {
      send_forward(command, s.self, out);
    }
    return;
  }

  LogIndex index = std::max(s.log.last_index(), s.approved->fast_floor);
  if (s.role == Role::kLeader && !s.fast_slots.empty()) index = std::max(index, s.fast_slots.rbegin()->first);
  index = index.next();

  LogEntry entry{index, s.current_term, command, EntryStatus::kTentativeFast, s.self};
  const ProposalId id{s.self, ++s.proposal_sequence};
  accept_locally(entry, s.approved->fast_floor);
  out.observations.push_back(FastProposed{id, index, command});

  FastProposal proposal{s.current_term, *s.known_leader, s.approved->fast_floor, id, entry};
  bool leader_included = false;
  for (auto peer : s.approved->approved) {
    if (peer == s.self) continue;
    leader_included = leader_included || peer == *s.known_leader;
    out.messages.push_back({peer, proposal});
  }
  if (!leader_included && *s.known_leader != s.self) out.messages.push_back({*s.known_leader, proposal});

  if (s.role == Role::kLeader) {
    FastVote own{s.current_term, s.self, id, index, true, entry};
    record_vote(own, now, out);
    evaluate_slot(index, now, out);
  }
}

bool Node::accept_locally(const LogEntry& entry, LogIndex floor) {
  auto& s = state_;
  if (entry.index <= s.commit_index || entry.index <= floor) return false;
  const auto* existing = s.log.at(entry.index);
  if (existing != nullptr) {
    if (existing->committed()) return false;
    if (existing->term == entry.term) return existing->tentative() && existing->same_value(entry);
    // Above the floor, anything older was never chosen and is safe to replace.
    if (existing->term > entry.term) return false;
  }
  LogEntry copy = entry;
  copy.status = EntryStatus::kTentativeFast;
  s.log.put(std::move(copy));
  return true;
}

std::optional<FastVote> Node::handle_fast_proposal(const FastProposal& proposal, SimTime now, NodeOutput& out) {
  auto& s = state_;
  advance_clock(now);
  if (proposal.term < s.current_term) return std::nullopt;
  if (proposal.term > s.current_term) become_follower(proposal.term, now);
  if (!s.known_leader && proposal.leader != s.self) s.known_leader = proposal.leader;

  if (s.role == Role::kLeader) {
    // The proposal doubles as the proposer's own vote.
    FastVote implicit{s.current_term, proposal.id.proposer, proposal.id, proposal.entry.index, true, proposal.entry};
    record_vote(implicit, now, out);
    evaluate_slot(proposal.entry.index, now, out);
    return std::nullopt;
  }

  const bool accept = accept_locally(proposal.entry, proposal.fast_floor);
  return FastVote{s.current_term, s.self, proposal.id, proposal.entry.index, accept, proposal.entry};
}

void Node::leader_collect_fast_votes(const FastVote& vote, SimTime now, NodeOutput& out) {
  auto& s = state_;
  advance_clock(now);
  if (vote.term > s.current_term) {
    become_follower(vote.term, now);
    return;
  }
  if (s.role != Role::kLeader || vote.term != s.current_term) return;
  record_vote(vote, now, out);
  evaluate_slot(vote.index, now, out);
}

FastSlotState& Node::slot_for(LogIndex index, SimTime now) {
  auto [it, inserted] = state_.fast_slots.try_emplace(index);
  if (inserted) {
    it->second.index = index;
    it->second.deadline = now + cluster_.fast_vote_timeout;
  }
  return it->second;
}

void Node::record_vote(const FastVote& vote, SimTime now, NodeOutput& out) {
  auto& s = state_;
  (void)out;
  if (vote.index <= s.commit_index) return;
  auto& slot = slot_for(vote.index, now);
  if (slot.resolved) return;

  auto& candidate = slot.candidates[vote.id];
  if (candidate.supporters.empty()) {
    candidate.entry = vote.entry;
    candidate.entry.index = vote.index;
  }
  // The proposer inserted its entry before sending, so it supports it.
  candidate.supporters.insert(vote.id.proposer);
  slot.voted.insert(vote.id.proposer);
  slot.voted.insert(vote.voter);
  if (vote.accept) candidate.supporters.insert(vote.voter);

  // The leader is a voter too: it takes the first value it sees this term.
  const bool floor_known = s.approved && s.approved->epoch == s.current_term;
  const auto floor = floor_known ? s.approved->fast_floor : s.log.last_index();
  accept_locally(candidate.entry, floor);
  const auto* mine = s.log.at(vote.index);
  if (mine != nullptr && mine->tentative() && mine->term == s.current_term) {
    for (auto& [id, c] : slot.candidates) {
      if (c.entry.same_value(*mine)) {
        c.supporters.insert(s.self);
        slot.voted.insert(s.self);
      }
    }
  }
}

bool Node::duplicated_elsewhere(const Command& command, LogIndex index) const {
  if (command.empty()) return false;
  for (auto at : state_.log.find_all(command)) {
    if (at != index) return true;
  }
  return false;
}

void Node::evaluate_slot(LogIndex index, SimTime now, NodeOutput& out) {
  auto& s = state_;
  auto it = s.fast_slots.find(index);
  if (it == s.fast_slots.end() || it->second.resolved) return;
  auto& slot = it->second;

  if (const auto* mine = s.log.at(index); mine != nullptr && !mine->tentative()) {
    // Already settled on the classic track; anything else proposed here moves on.
    slot.resolved = true;
    for (const auto& [id, c] : slot.candidates) {
      if (!c.entry.same_value(*mine)) requeue(c.entry.command, out);
    }
    broadcast_append_entries(out);
    return;
  }

  const auto quorum = fast_quorum();
  const auto members = cluster_.size();
  std::size_t best_possible = 0;
  for (const auto& [id, c] : slot.candidates) {
    if (duplicated_elsewhere(c.entry.command, index)) continue;
    if (c.supporters.size() >= quorum) {
      commit_fast(index, id, now, out);
      return;
    }
    best_possible = std::max(best_possible, slot.accepts_possible(id, members));
  }
  const bool anyone_left = slot.voted.size() < members;
  if (best_possible < quorum && (!slot.candidates.empty() || !anyone_left)) fallback_to_classic(index, now, out);
}

void Node::commit_fast(LogIndex index, const ProposalId& winner, SimTime now, NodeOutput& out) {
  auto& s = state_;
  (void)now;
  auto& slot = s.fast_slots.at(index);
  LogEntry entry = slot.candidates.at(winner).entry;
  entry.index = index;
  entry.status = EntryStatus::kCommitted;
  s.log.put(entry);
  slot.resolved = true;
  note_committed(entry, true, out);
  for (const auto& [id, c] : slot.candidates) {
    if (id != winner && !c.entry.same_value(entry)) requeue(c.entry.command, out);
  }
  leader_advance_commit(out);
}

void Node::fallback_to_classic(LogIndex index, SimTime now, NodeOutput& out) {
  auto& s = state_;
  if (s.role != Role::kLeader || index <= s.commit_index) return;
  auto& slot = slot_for(index, now);
  if (slot.resolved) return;
  if (const auto* mine = s.log.at(index); mine != nullptr && !mine->tentative()) {
    evaluate_slot(index, now, out);
    return;
  }

  const FastSlotState::Candidate* winner = nullptr;
  for (const auto& [id, c] : slot.candidates) {
    if (duplicated_elsewhere(c.entry.command, index)) continue;
    if (winner == nullptr || c.supporters.size() > winner->supporters.size()) winner = &c;
  }

  LogEntry entry = winner != nullptr ? winner->entry : LogEntry{index, s.current_term, Command{}, {}, s.self};
  entry.index = index;
  entry.term = s.current_term;
  entry.status = EntryStatus::kAcceptedClassic;
  s.log.put(entry);
  slot.resolved = true;
  for (const auto& [id, c] : slot.candidates) {
    if (!c.entry.same_value(entry)) requeue(c.entry.command, out);
  }
  broadcast_append_entries(out);
  leader_advance_commit(out);
}

void Node::requeue(const Command& command, NodeOutput& out) {
  auto& s = state_;
  if (command.empty() || s.role != Role::kLeader) return;
  if (s.log.find_command(command)) return;
  append_classic(command, s.self, out);
}

void Node::scan_fast_slots(SimTime now, NodeOutput& out) {
  auto& s = state_;
  for (auto i = s.commit_index.next(); i <= s.log.last_index(); i = i.next()) {
    const auto* e = s.log.at(i);
    if (e == nullptr || e->tentative()) slot_for(i, now);
  }
  std::vector<LogIndex> due;
  for (const auto& [index, slot] : s.fast_slots) {
    if (!slot.resolved && slot.deadline <= now) due.push_back(index);
  }
  for (auto index : due) {
    if (s.role != Role::kLeader) return;
    fallback_to_classic(index, now, out);
  }
  std::erase_if(s.fast_slots, [&](const auto& kv) { return kv.first <= s.commit_index; });
}

void Node::designate_self_approved(NodeOutput& out) {
  auto& s = state_;
  (void)out;
  std::vector<NodeId> approved = options_.self_approved.value_or(cluster_.members);
  if (std::find(approved.begin(), approved.end(), s.self) == approved.end()) approved.push_back(s.self);
  std::sort(approved.begin(), approved.end());
  s.approved = SelfApprovedSet{s.current_term, std::move(approved), s.log.last_index()};
}

namespace {

/// One reported value for a slot during recovery.
struct Reported {
  LogEntry entry;
  std::size_t count = 0;
  bool classic = false;
};

/// Priority among duplicate recoveries of the same command.
struct Support {
  bool committed = false;
  Term term;
  bool classic = false;

  auto key() const { return std::tuple{committed, term, classic}; }
};

}  // namespace

void Node::recover_uncommitted(NodeOutput& out) {
  auto& s = state_;
  const auto commit = s.commit_index;

  std::map<NodeId, std::vector<LogEntry>> reports = s.vote_reports;
  reports[s.self] = s.log.entries_between(commit.next(), s.log.last_index());

  LogIndex horizon = s.log.last_index();
  std::map<LogIndex, std::vector<const LogEntry*>> by_slot;
  for (const auto& [node, entries] : reports) {
    for (const auto& e : entries) {
      if (e.index <= commit) continue;
      by_slot[e.index].push_back(&e);
      horizon = std::max(horizon, e.index);
    }
  }

  const auto members = cluster_.size();
  const auto responders = reports.size();
  const auto quorum = fast_quorum();
  const std::size_t threshold = quorum > members - responders ? quorum - (members - responders) : 1;

  std::map<LogIndex, LogEntry> chosen;
  std::map<LogIndex, Support> support;
  for (auto i = commit.next(); i <= horizon; i = i.next()) {
    LogEntry pick{i, s.current_term, Command{}, EntryStatus::kAcceptedClassic, s.self};
    Support why{false, Term{0}, false};
    auto slot = by_slot.find(i);
    if (slot != by_slot.end()) {
      const auto& seen = slot->second;
      Term top{0};
      for (const auto* e : seen) top = std::max(top, e->term);
      const LogEntry* committed = nullptr;
      const LogEntry* classic = nullptr;
      std::vector<Reported> tentative;
      for (const auto* e : seen) {
        if (e->committed()) committed = e;
        if (e->term != top) continue;
        if (!e->tentative()) {
          classic = e;
          continue;
        }
        auto same = std::find_if(tentative.begin(), tentative.end(),
                                 [&](const Reported& r) { return r.entry.same_value(*e); });
        if (same == tentative.end()) {
          tentative.push_back({*e, 1, false});
        } else {
          ++same->count;
        }
      }
      if (committed != nullptr) {
        pick = *committed;
        why = {true, committed->term, true};
      } else if (classic != nullptr) {
        pick = *classic;
        why = {false, top, true};
      } else if (!tentative.empty()) {
        std::sort(tentative.begin(), tentative.end(), [](const Reported& a, const Reported& b) {
          if (a.count != b.count) return a.count > b.count;
          return std::tie(a.entry.proposer, a.entry.command) < std::tie(b.entry.proposer, b.entry.command);
        });
        pick = tentative.front().entry;
        why = {false, top, tentative.front().count >= threshold};
      }
    }
    chosen[i] = pick;
    support[i] = why;
  }

  // A command recovered at several slots keeps only its strongest claim.
  std::map<Command, LogIndex> keeper;
  for (const auto& [i, e] : chosen) {
    if (e.is_noop()) continue;
    bool in_prefix = false;
    for (auto at : s.log.find_all(e.command)) in_prefix = in_prefix || at <= commit;
    if (in_prefix) {
      keeper[e.command] = LogIndex{0};
      continue;
    }
    auto [it, fresh] = keeper.try_emplace(e.command, i);
    if (!fresh && it->second.value() != 0 && support[i].key() > support[it->second].key()) it->second = i;
  }
  for (auto& [i, e] : chosen) {
    if (!e.is_noop() && keeper.at(e.command) != i) e = LogEntry{i, s.current_term, Command{}, {}, s.self};
  }

  for (auto& [i, e] : chosen) {
    const auto* existing = s.log.at(i);
    if (existing != nullptr && existing->committed() && !existing->same_value(e)) {
      violation("recovery would replace committed entry " + to_canonical(*existing), out);
      return;
    }
    e.index = i;
    e.term = s.current_term;
    e.status = existing != nullptr && existing->committed() && existing->same_value(e) ? EntryStatus::kCommitted
                                                                                       : EntryStatus::kAcceptedClassic;
    s.log.put(std::move(e));
  }
  s.fast_slots.clear();
}

}  // namespace fastraft
