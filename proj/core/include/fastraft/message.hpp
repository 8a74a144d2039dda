#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fastraft/types.hpp"

namespace fastraft {

struct RequestVote {
  Term term;
  NodeId candidate;
  LogIndex last_log_index;
  Term last_log_term;
  /// Lets voters report only the uncommitted suffix the new leader must recover.
  LogIndex commit_index;
  friend bool operator==(const RequestVote&, const RequestVote&) = default;
};

struct RequestVoteReply {
  Term term;
  bool granted = false;
  /// Fast Raft only: the voter's entries above the candidate's commit index,
  /// tentative ones included.
  std::vector<LogEntry> uncommitted;
  friend bool operator==(const RequestVoteReply&, const RequestVoteReply&) = default;
};

/// Self-approved designation piggybacked on AppendEntries.
struct SelfApprovedAnnouncement {
  Term epoch;
  std::vector<NodeId> approved;
  /// Fast proposals are only legal strictly above this index for the epoch.
  LogIndex fast_floor;
  friend bool operator==(const SelfApprovedAnnouncement&, const SelfApprovedAnnouncement&) = default;
};

struct AppendEntries {
  Term term;
  NodeId leader;
  LogIndex prev_log_index;
  Term prev_log_term;
  std::vector<LogEntry> entries;
  LogIndex leader_commit;
  std::optional<SelfApprovedAnnouncement> approved;
  friend bool operator==(const AppendEntries&, const AppendEntries&) = default;
};

struct AppendEntriesReply {
  Term term;
  bool success = false;
  /// On success the last index known to match the leader; on failure a hint
  /// (the follower's contiguous classic end) for rewinding nextIndex.
  LogIndex match_index;
  friend bool operator==(const AppendEntriesReply&, const AppendEntriesReply&) = default;
};

struct ForwardOperation {
  Term term;
  NodeId origin;
  Command command;
  friend bool operator==(const ForwardOperation&, const ForwardOperation&) = default;
};

struct ProposalId {
  NodeId proposer;
  std::uint64_t sequence = 0;
  friend auto operator<=>(const ProposalId&, const ProposalId&) = default;
};

struct FastProposal {
  Term term;
  NodeId leader;
  LogIndex fast_floor;
  ProposalId id;
  LogEntry entry;
  friend bool operator==(const FastProposal&, const FastProposal&) = default;
};

struct FastVote {
  Term term;
  NodeId voter;
  ProposalId id;
  LogIndex index;
  bool accept = false;
  /// The proposal being voted on, so a leader that missed the proposal
  /// itself still learns the payload.
  LogEntry entry;
  friend bool operator==(const FastVote&, const FastVote&) = default;
};

struct ClientApply {
  Command command;
  RequestId request_id;
  friend bool operator==(const ClientApply&, const ClientApply&) = default;
};

struct ClientApplyReply {
  enum class Outcome : std::uint8_t { kCommitted, kRedirect, kFailure };
  RequestId request_id;
  Outcome outcome = Outcome::kFailure;
  LogIndex committed_index;
  std::optional<NodeId> redirect;
  friend bool operator==(const ClientApplyReply&, const ClientApplyReply&) = default;
};

using Message = std::variant<RequestVote, RequestVoteReply, AppendEntries, AppendEntriesReply,
                             ForwardOperation, FastProposal, FastVote, ClientApply, ClientApplyReply>;

std::string_view variant_name(const Message& message);

/// Compact binary payload (LEB128 varints, length-prefixed bytes).
std::string encode_payload(const Message& message);
Message decode_payload(std::string_view variant, std::string_view bytes);

}  // namespace fastraft
