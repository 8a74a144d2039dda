#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fastraft/types.hpp"

namespace fastraft {

struct DelayModel {
  enum class Kind : std::uint8_t { kFixed, kUniform, kPerLink };

  Kind kind = Kind::kUniform;
  SimDuration fixed = from_ms(1);
  SimDuration min = from_ms(1);
  SimDuration max = from_ms(5);
  /// One-way delay for a directed (from, to) link. Links not listed draw
  /// from uniform(min, max).
  std::map<std::pair<NodeId, NodeId>, SimDuration> per_link;

  static DelayModel fixed_delay(SimDuration d);
  static DelayModel uniform(SimDuration lo, SimDuration hi);

  friend bool operator==(const DelayModel&, const DelayModel&) = default;
};

/// Cross-set traffic between `side_a` and `side_b` is dropped during [start, end).
struct PartitionWindow {
  SimTime start{0};
  SimTime end{0};
  std::vector<NodeId> side_a;
  std::vector<NodeId> side_b;

  bool active(SimTime t) const { return t >= start && t < end; }
  bool separates(NodeId from, NodeId to) const;

  friend bool operator==(const PartitionWindow&, const PartitionWindow&) = default;
};

struct CrashWindow {
  NodeId node;
  SimTime crash{0};
  std::optional<SimTime> restart;

  friend bool operator==(const CrashWindow&, const CrashWindow&) = default;
};

struct SimConfig {
  std::uint64_t seed = 1;
  double loss_probability = 0.0;
  DelayModel delay;
  std::vector<PartitionWindow> partitions;
  std::vector<CrashWindow> crashes;
  /// When false a restarted node comes back with an empty log and term 0.
  bool persistence = true;
  std::uint64_t event_budget = 10'000'000;
  /// If set, crash snapshots are written here and read back on restart.
  std::optional<std::filesystem::path> persist_dir;

  /// Throws InvalidConfiguration on out-of-range values, unknown nodes,
  /// overlapping crash windows or non-disjoint partition sides.
  void validate(const ClusterConfig& cluster) const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Ordered `key=value` lines. Blank lines and `#` comments are skipped;
/// keys may repeat (partition, crash, link).
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);
KeyValues read_key_values_file(const std::filesystem::path& path);

/// Applies one key to the config. Returns false for keys that belong to
/// some other component; throws InvalidConfiguration on malformed values.
bool apply_sim_key(SimConfig& config, std::string_view key, std::string_view value);
KeyValues sim_config_to_key_values(const SimConfig& config);

/// Milliseconds as written in config files (decimals allowed).
SimDuration parse_ms(std::string_view text);
std::string format_ms(SimDuration d);
double parse_fraction(std::string_view text);
std::uint64_t parse_u64(std::string_view text);
std::vector<NodeId> parse_node_list(std::string_view text);

}  // namespace fastraft
