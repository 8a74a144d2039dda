#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fastraft {

/// Simulated time since the start of a run. Microsecond resolution so that
/// delay distributions expressed in milliseconds keep sub-millisecond detail.
using SimTime = std::chrono::microseconds;
using SimDuration = std::chrono::microseconds;

constexpr SimDuration from_ms(double ms) {
  return SimDuration{static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5))};
}

constexpr double to_ms(SimDuration d) { return static_cast<double>(d.count()) / 1000.0; }

/// Thrown when a cluster or simulation configuration violates its invariants.
class InvalidConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a serialized record cannot be parsed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered integer wrapper for identifiers that must not mix with each other.
template <typename Tag, typename Rep>
class Ordinal {
 public:
  using rep_type = Rep;

  constexpr Ordinal() = default;
  constexpr explicit Ordinal(Rep value) : value_(value) {}

  constexpr Rep value() const { return value_; }

  constexpr Ordinal next() const { return Ordinal{static_cast<Rep>(value_ + 1)}; }
  constexpr Ordinal prev() const { return Ordinal{static_cast<Rep>(value_ == 0 ? 0 : value_ - 1)}; }

  friend constexpr auto operator<=>(Ordinal, Ordinal) = default;

 private:
  Rep value_{};
};

using NodeId = Ordinal<struct NodeIdTag, std::uint32_t>;
/// Election epoch. Never decreases at a node.
using Term = Ordinal<struct TermTag, std::uint64_t>;
/// 1-based log position; 0 is the empty-log sentinel.
using LogIndex = Ordinal<struct LogIndexTag, std::uint64_t>;
using RequestId = Ordinal<struct RequestIdTag, std::uint64_t>;

/// Opaque replicated payload. The library never interprets its bytes; the
/// empty command is reserved for leader no-ops.
using Command = std::string;

enum class EntryStatus : std::uint8_t {
  kTentativeFast,
  kAcceptedClassic,
  kCommitted,
};

std::string_view to_string(EntryStatus status);
EntryStatus parse_entry_status(std::string_view text);

struct LogEntry {
  LogIndex index;
  Term term;
  Command command;
  EntryStatus status = EntryStatus::kAcceptedClassic;
  NodeId proposer;

  bool tentative() const { return status == EntryStatus::kTentativeFast; }
  bool committed() const { return status == EntryStatus::kCommitted; }
  bool is_noop() const { return command.empty(); }

  /// Same replicated value: proposer and payload agree. Term is a stamp that
  /// a new leader may refresh when it re-proposes an uncommitted slot.
  bool same_value(const LogEntry& other) const {
    return proposer == other.proposer && command == other.command;
  }

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

/// True iff both entries claim the same slot with a different identity
/// (term, command or proposer).
bool entry_conflicts(const LogEntry& a, const LogEntry& b);

std::size_t fast_quorum_size(std::size_t members);
std::size_t classic_quorum_size(std::size_t members);

struct ClusterConfig {
  std::vector<NodeId> members;
  SimDuration election_timeout_min = from_ms(150);
  SimDuration election_timeout_max = from_ms(300);
  SimDuration heartbeat_interval = from_ms(50);
  SimDuration fast_vote_timeout = from_ms(100);

  std::size_t size() const { return members.size(); }
  bool contains(NodeId id) const;

  /// Throws InvalidConfiguration when an invariant does not hold.
  void validate() const;

  /// Members 0..count-1 with default timing.
  static ClusterConfig with_members(std::size_t count);
};

std::string to_hex(std::string_view bytes);
std::string from_hex(std::string_view hex);

/// `index|term|proposer|status|hex(command)`
std::string to_canonical(const LogEntry& entry);
LogEntry parse_canonical(std::string_view line);

}  // namespace fastraft

template <typename Tag, typename Rep>
struct std::hash<fastraft::Ordinal<Tag, Rep>> {
  std::size_t operator()(fastraft::Ordinal<Tag, Rep> v) const noexcept {
    return std::hash<Rep>{}(v.value());
  }
};
