#pragma once

#include <cstddef>
#include <vector>

#include "fastraft/sim_config.hpp"
#include "fastraft/simulator.hpp"

namespace fastraft {

/// Which node a client command is sent to.
struct TargetSelection {
  enum class Kind : std::uint8_t {
    kRoundRobin,
    kFixed,
    /// Seeded uniform choice among all members.
    kRandom,
    /// Lowest-id live node that is not the leader when the command arrives.
    kNonLeader,
  };

  Kind kind = Kind::kRoundRobin;
  NodeId fixed{0};

  friend bool operator==(const TargetSelection&, const TargetSelection&) = default;
};

struct WorkloadSpec {
  enum class Pattern : std::uint8_t { kBurst, kUniform };

  Pattern pattern = Pattern::kBurst;
  std::size_t burst_size = 10;
  SimDuration burst_interval = from_ms(100);
  SimDuration burst_spacing = from_ms(1);
  /// Commands per simulated second for the uniform pattern.
  double uniform_rate = 100.0;
  std::size_t total_commands = 200;
  TargetSelection target;
  std::size_t command_size = 16;
  /// First injection; leaves room for the initial election.
  SimTime start = from_ms(1000);

  void validate(const ClusterConfig& cluster) const;

  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// Unique payload for request `id`: `req-<id>` padded to `size` bytes.
Command workload_command(std::uint64_t id, std::size_t size);

/// Injection schedule. Random targets draw from the workload stream of `seed`.
std::vector<ClientInjection> generate_injections(const WorkloadSpec& spec, const ClusterConfig& cluster,
                                                 std::uint64_t seed);

bool apply_workload_key(WorkloadSpec& spec, std::string_view key, std::string_view value);
KeyValues workload_to_key_values(const WorkloadSpec& spec);

std::string to_string(TargetSelection target);
TargetSelection parse_target(std::string_view text);

}  // namespace fastraft
