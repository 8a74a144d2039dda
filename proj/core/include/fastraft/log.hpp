#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "fastraft/types.hpp"

namespace fastraft {

/// Slot-addressed replicated log. Unlike a classic Raft log it may hold
/// gaps and overwritable tentative entries above the committed prefix.
///
/// Invariant maintained here: slots 1..classic_end() are all occupied by
/// non-tentative entries, and a command index tracks every occupied slot
/// so duplicate payloads can be detected in O(1).
class ReplicatedLog {
 public:
  const LogEntry* at(LogIndex index) const;

  /// Highest occupied slot, or 0 for an empty log.
  LogIndex last_index() const { return LogIndex{slots_.size()}; }

  /// Highest n such that every slot in [1, n] holds a non-tentative entry.
  LogIndex classic_end() const { return classic_end_; }

  /// Term of the entry at `index`, 0 for the sentinel or an empty slot.
  Term term_at(LogIndex index) const;

  void put(LogEntry entry);
  void erase(LogIndex index);
  void set_status(LogIndex index, EntryStatus status);

  /// Any occupied slot whose payload equals `command`. No-ops are never indexed.
  std::optional<LogIndex> find_command(const Command& command) const;
  std::vector<LogIndex> find_all(const Command& command) const;

  /// Copies of occupied slots in [from, to].
  std::vector<LogEntry> entries_between(LogIndex from, LogIndex to) const;
  std::vector<LogEntry> entries() const { return entries_between(LogIndex{1}, last_index()); }

  bool empty() const { return slots_.empty(); }

  friend bool operator==(const ReplicatedLog& a, const ReplicatedLog& b) { return a.slots_ == b.slots_; }

 private:
  void index_add(const LogEntry& entry);
  void index_remove(const LogEntry& entry);
  void recompute_classic_end_from(LogIndex start);

  std::vector<std::optional<LogEntry>> slots_;
  std::unordered_multimap<Command, std::uint64_t> by_command_;
  LogIndex classic_end_{0};
};

}  // namespace fastraft
