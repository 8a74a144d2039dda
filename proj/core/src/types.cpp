#include "fastraft/types.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace fastraft {

std::string_view to_string(EntryStatus status) {
  switch (status) {
    case EntryStatus::kTentativeFast:
      return "TENTATIVE_FAST";
    case EntryStatus::kAcceptedClassic:
      return "ACCEPTED_CLASSIC";
    case EntryStatus::kCommitted:
      return "COMMITTED";
  }
  return "UNKNOWN";
}

EntryStatus parse_entry_status(std::string_view text) {
  if (text == "TENTATIVE_FAST") return EntryStatus::kTentativeFast;
  if (text == "ACCEPTED_CLASSIC") return EntryStatus::kAcceptedClassic;
  if (text == "COMMITTED") return EntryStatus::kCommitted;
  throw FormatError("unknown entry status: " + std::string(text));
}

bool entry_conflicts(const LogEntry& a, const LogEntry& b) {
  if (a.index != b.index) return false;
  return a.term != b.term || a.command != b.command || a.proposer != b.proposer;
}

std::size_t fast_quorum_size(std::size_t members) {
  if (members == 0) throw InvalidConfiguration("cluster must have at least one member");
  return (3 * members + 3) / 4;
}

std::size_t classic_quorum_size(std::size_t members) {
  if (members == 0) throw InvalidConfiguration("cluster must have at least one member");
  return members / 2 + 1;
}

bool ClusterConfig::contains(NodeId id) const {
  return std::find(members.begin(), members.end(), id) != members.end();
}

void ClusterConfig::validate() const {
  if (members.empty()) throw InvalidConfiguration("cluster must have at least one member");
  std::set<NodeId> unique(members.begin(), members.end());
  if (unique.size() != members.size()) throw InvalidConfiguration("duplicate cluster member");
  if (heartbeat_interval <= SimDuration::zero())
    throw InvalidConfiguration("heartbeat interval must be positive");
  if (election_timeout_min <= 2 * heartbeat_interval)
    throw InvalidConfiguration("election timeout minimum must exceed twice the heartbeat interval");
  if (election_timeout_min >= election_timeout_max)
    throw InvalidConfiguration("election timeout range must be non-empty");
  if (fast_vote_timeout <= SimDuration::zero())
    throw InvalidConfiguration("fast vote timeout must be positive");
}

ClusterConfig ClusterConfig::with_members(std::size_t count) {
  ClusterConfig cfg;
  for (std::size_t i = 0; i < count; ++i) cfg.members.emplace_back(static_cast<std::uint32_t>(i));
  return cfg;
}

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw FormatError(std::string("bad ") + what + ": '" + std::string(text) + "'");
  return value;
}

}  // namespace

std::string from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw FormatError("odd-length hex string");
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw FormatError("invalid hex digit");
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

std::string to_canonical(const LogEntry& entry) {
  std::string out;
  out += std::to_string(entry.index.value());
  out += '|';
  out += std::to_string(entry.term.value());
  out += '|';
  out += std::to_string(entry.proposer.value());
  out += '|';
  out += to_string(entry.status);
  out += '|';
  out += to_hex(entry.command);
  return out;
}

LogEntry parse_canonical(std::string_view line) {
  auto parts = split(line, '|');
  if (parts.size() != 5) throw FormatError("log record needs 5 fields: '" + std::string(line) + "'");
  LogEntry entry;
  entry.index = LogIndex{parse_number<std::uint64_t>(parts[0], "index")};
  entry.term = Term{parse_number<std::uint64_t>(parts[1], "term")};
  entry.proposer = NodeId{parse_number<std::uint32_t>(parts[2], "proposer")};
  entry.status = parse_entry_status(parts[3]);
  entry.command = from_hex(parts[4]);
  if (entry.index == LogIndex{0}) throw FormatError("log index 0 is reserved");
  return entry;
}

}  // namespace fastraft
