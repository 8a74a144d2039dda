#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <variant>
#include <vector>

#include "fastraft/log.hpp"
#include "fastraft/message.hpp"
#include "fastraft/persistence.hpp"
#include "fastraft/rng.hpp"
#include "fastraft/types.hpp"

namespace fastraft {

enum class Role : std::uint8_t { kFollower, kCandidate, kLeader };
enum class Protocol : std::uint8_t { kRaft, kFastRaft };

std::string_view to_string(Role role);
std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view text);

/// Deliberate protocol defects. Used only to check that the safety tooling
/// notices when a rule is removed.
struct TestMutations {
  bool skip_vote_log_check = false;
  bool skip_commit_term_guard = false;
  bool skip_election_noop = false;
  /// Non-zero replaces the fast quorum size.
  std::size_t fast_quorum_override = 0;

  bool any() const {
    return skip_vote_log_check || skip_commit_term_guard || skip_election_noop || fast_quorum_override != 0;
  }
};

struct NodeOptions {
  Protocol protocol = Protocol::kFastRaft;
  /// Re-send interval for client commands this node has not yet seen commit.
  SimDuration retry_interval = from_ms(150);
  /// A client command still uncommitted after this long is failed back to the client.
  SimDuration forward_timeout = from_ms(10000);
  std::size_t forward_buffer_limit = 1024;
  /// Subset designation; unset means every member is self-approved.
  std::optional<std::vector<NodeId>> self_approved;
  TestMutations mutations;
};

/// Thrown by leader-only operations invoked on a non-leader.
class NotLeader : public std::runtime_error {
 public:
  explicit NotLeader(std::optional<NodeId> hint)
      : std::runtime_error("not the leader"), leader_hint_(hint) {}
  std::optional<NodeId> leader_hint() const { return leader_hint_; }

 private:
  std::optional<NodeId> leader_hint_;
};

struct PeerProgress {
  LogIndex next_index{1};
  LogIndex match_index{0};
};

struct SelfApprovedSet {
  Term epoch;
  std::vector<NodeId> approved;
  LogIndex fast_floor;

  bool contains(NodeId id) const;
};

/// Leader-side vote tally for one contested slot.
struct FastSlotState {
  struct Candidate {
    LogEntry entry;
    std::set<NodeId> supporters;
  };

  LogIndex index;
  std::map<ProposalId, Candidate> candidates;
  /// Every voter heard from for this slot, accepting or rejecting.
  std::set<NodeId> voted;
  SimTime deadline{0};
  bool resolved = false;

  /// Upper bound on the supporters `id` can still gather.
  std::size_t accepts_possible(const ProposalId& id, std::size_t members) const;
};

struct PendingCommand {
  RequestId request_id;
  Command command;
  SimTime injected{0};
  SimTime next_retry{0};
  SimTime give_up_at{0};
  bool sent = false;
};

struct BufferedForward {
  ForwardOperation op;
  SimTime expires{0};
};

/// Everything one replica knows. Persistent fields are current_term,
/// voted_for and log; the rest is lost on crash.
struct NodeState {
  NodeId self;
  Role role = Role::kFollower;
  Term current_term{0};
  std::optional<NodeId> voted_for;
  ReplicatedLog log;
  LogIndex commit_index{0};
  LogIndex last_applied{0};
  std::optional<NodeId> known_leader;

  // Leader volatile state.
  std::map<NodeId, PeerProgress> peers;
  std::map<LogIndex, FastSlotState> fast_slots;

  // Candidate volatile state.
  std::set<NodeId> votes_granted;
  std::map<NodeId, std::vector<LogEntry>> vote_reports;

  std::optional<SelfApprovedSet> approved;
  std::uint64_t proposal_sequence = 0;

  std::map<RequestId, PendingCommand> pending;
  std::unordered_map<Command, RequestId> pending_by_command;
  std::deque<BufferedForward> forward_buffer;

  SimTime now{0};
  SimTime election_deadline{0};
  SimTime heartbeat_deadline{0};
  bool halted = false;
};

struct BecameLeader {
  Term term;
};
struct EntryCommitted {
  LogEntry entry;
  bool at_leader = false;
  bool via_fast_quorum = false;
};
struct CommitAdvanced {
  LogIndex from;
  LogIndex to;
};
struct FastProposed {
  ProposalId id;
  LogIndex index;
  Command command;
};
struct ClientReplied {
  ClientApplyReply reply;
};
struct ProtocolViolation {
  std::string what;
};

/// Side channel for auditors and metrics; never fed back into the protocol.
using Observation =
    std::variant<BecameLeader, EntryCommitted, CommitAdvanced, FastProposed, ClientReplied, ProtocolViolation>;

struct Outbound {
  NodeId to;
  Message message;
};

struct NodeOutput {
  std::vector<Outbound> messages;
  std::vector<Observation> observations;

  void clear() {
    messages.clear();
    observations.clear();
  }
};

/// One replica as a deterministic, single-threaded state machine: every
/// entry point takes the current simulated time and appends the messages
/// and observations it produces to a caller-owned NodeOutput.
class Node {
 public:
  Node(NodeId self, ClusterConfig cluster, NodeOptions options, std::uint64_t timer_seed);

  /// Rebuild a replica from durable state after a crash.
  static Node restore(NodeId self, ClusterConfig cluster, NodeOptions options, std::uint64_t timer_seed,
                      const PersistentState& persisted);

  /// Arms the election timer. Call once before feeding events.
  void start(SimTime now);

  void receive(NodeId from, const Message& message, SimTime now, NodeOutput& out);
  void client_apply(const ClientApply& request, SimTime now, NodeOutput& out);
  void tick(SimTime now, NodeOutput& out);
  SimTime next_deadline() const;

  // Classic track.
  RequestVoteReply handle_request_vote(const RequestVote& request, SimTime now);
  void handle_request_vote_reply(NodeId from, const RequestVoteReply& reply, SimTime now, NodeOutput& out);
  AppendEntriesReply handle_append_entries(const AppendEntries& request, SimTime now, NodeOutput& out);
  void handle_append_entries_reply(NodeId from, const AppendEntriesReply& reply, SimTime now, NodeOutput& out);
  /// Appends `command` as a classic entry and replicates it. Throws NotLeader.
  void leader_replicate(const Command& command, SimTime now, NodeOutput& out);
  void leader_advance_commit(NodeOutput& out);
  void handle_forward(const ForwardOperation& op, SimTime now, NodeOutput& out);

  // Fast track.
  bool can_propose_fast() const;
  void propose_fast(const Command& command, SimTime now, NodeOutput& out);
  std::optional<FastVote> handle_fast_proposal(const FastProposal& proposal, SimTime now, NodeOutput& out);
  void leader_collect_fast_votes(const FastVote& vote, SimTime now, NodeOutput& out);
  void fallback_to_classic(LogIndex index, SimTime now, NodeOutput& out);
  void designate_self_approved(NodeOutput& out);

  const NodeState& state() const { return state_; }
  /// Direct state access for test fixtures and fault injection.
  NodeState& mutable_state() { return state_; }
  const ClusterConfig& cluster() const { return cluster_; }
  const NodeOptions& options() const { return options_; }
  PersistentState persistent_state() const;

  std::size_t fast_quorum() const;
  std::size_t classic_quorum() const;

 private:
  bool fast_enabled() const { return options_.protocol == Protocol::kFastRaft; }
  void advance_clock(SimTime now);
  void reset_election_timer(SimTime now);
  void become_follower(Term term, SimTime now);
  void become_candidate(SimTime now, NodeOutput& out);
  void become_leader(SimTime now, NodeOutput& out);
  void recover_uncommitted(NodeOutput& out);

  void send_append_entries(NodeId peer, NodeOutput& out);
  void broadcast_append_entries(NodeOutput& out);
  LogIndex next_append_index() const;
  void append_classic(Command command, NodeId proposer, NodeOutput& out);

  void commit_through(LogIndex target, NodeOutput& out);
  void note_committed(const LogEntry& entry, bool via_fast, NodeOutput& out);
  void violation(std::string what, NodeOutput& out);

  void on_leader_known(SimTime now, NodeOutput& out);
  void send_forward(const Command& command, NodeId origin, NodeOutput& out);
  void process_pending(SimTime now, NodeOutput& out);
  void finish_pending(const Command& command, ClientApplyReply::Outcome outcome, LogIndex index, NodeOutput& out);

  // Fast-track internals.
  bool accept_locally(const LogEntry& entry, LogIndex floor);
  void record_vote(const FastVote& vote, SimTime now, NodeOutput& out);
  void evaluate_slot(LogIndex index, SimTime now, NodeOutput& out);
  void commit_fast(LogIndex index, const ProposalId& winner, SimTime now, NodeOutput& out);
  void requeue(const Command& command, NodeOutput& out);
  void scan_fast_slots(SimTime now, NodeOutput& out);
  FastSlotState& slot_for(LogIndex index, SimTime now);
  bool duplicated_elsewhere(const Command& command, LogIndex index) const;

  ClusterConfig cluster_;
  NodeOptions options_;
  NodeState state_;
  Rng timer_rng_;
};

}  // namespace fastraft
