#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fastraft/types.hpp"

namespace fastraft {

/// The durable part of a replica: survives crashes when persistence is on.
struct PersistentState {
  Term current_term;
  std::optional<NodeId> voted_for;
  std::vector<LogEntry> log;

  friend bool operator==(const PersistentState&, const PersistentState&) = default;
};

/// Header line `term|votedFor` (votedFor is `-` when unset), then one
/// canonical log record per line.
std::string serialize_snapshot(const PersistentState& state);
PersistentState parse_snapshot(std::string_view text);

void write_snapshot_file(const std::filesystem::path& path, const PersistentState& state);
PersistentState read_snapshot_file(const std::filesystem::path& path);

}  // namespace fastraft
