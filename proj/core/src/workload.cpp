#include "fastraft/workload.hpp"

#include <cmath>

namespace fastraft {

void WorkloadSpec::validate(const ClusterConfig& cluster) const {
  if (total_commands == 0) throw InvalidConfiguration("workload needs at least one command");
  if (pattern == Pattern::kBurst && burst_size == 0) throw InvalidConfiguration("burst size must be positive");
  if (pattern == Pattern::kUniform && !(uniform_rate > 0.0 && std::isfinite(uniform_rate)))
    throw InvalidConfiguration("uniform rate must be positive");
  if (target.kind == TargetSelection::Kind::kFixed && !cluster.contains(target.fixed))
    throw InvalidConfiguration("fixed target is not a cluster member");
}

Command workload_command(std::uint64_t id, std::size_t size) {
  Command c = "req-" + std::to_string(id);
  if (c.size() < size) c.append(size - c.size(), '.');
  return c;
}

std::vector<ClientInjection> generate_injections(const WorkloadSpec& spec, const ClusterConfig& cluster,
                                                 std::uint64_t seed) {
  spec.validate(cluster);
  Rng rng(seed, RngStream::kWorkload);
  std::vector<ClientInjection> out;
  out.reserve(spec.total_commands);
  for (std::size_t i = 0; i < spec.total_commands; ++i) {
    ClientInjection inj;
    if (spec.pattern == WorkloadSpec::Pattern::kBurst) {
      const auto burst = static_cast<std::int64_t>(i / spec.burst_size);
      const auto within = static_cast<std::int64_t>(i % spec.burst_size);
      inj.at = spec.start + burst * spec.burst_interval + within * spec.burst_spacing;
    } else {
      inj.at = spec.start + from_ms(1000.0 * static_cast<double>(i) / spec.uniform_rate);
    }
    switch (spec.target.kind) {
      case TargetSelection::Kind::kRoundRobin:
        inj.target = cluster.members[i % cluster.size()];
        break;
      case TargetSelection::Kind::kFixed:
        inj.target = spec.target.fixed;
        break;
      case TargetSelection::Kind::kRandom:
        inj.target = cluster.members[rng.uniform_int(0, cluster.size() - 1)];
        break;
      case TargetSelection::Kind::kNonLeader:
        break;
    }
    inj.request_id = RequestId{i + 1};
    inj.command = workload_command(i + 1, spec.command_size);
    out.push_back(std::move(inj));
  }
  return out;
}

std::string to_string(TargetSelection target) {
  switch (target.kind) {
    case TargetSelection::Kind::kRoundRobin:
      return "round-robin";
    case TargetSelection::Kind::kFixed:
      return "fixed:" + std::to_string(target.fixed.value());
    case TargetSelection::Kind::kRandom:
      return "random";
    case TargetSelection::Kind::kNonLeader:
      return "non-leader";
  }
  return "round-robin";
}

TargetSelection parse_target(std::string_view text) {
  TargetSelection t;
  if (text == "round-robin") {
    t.kind = TargetSelection::Kind::kRoundRobin;
  } else if (text == "random") {
    t.kind = TargetSelection::Kind::kRandom;
  } else if (text == "non-leader") {
    t.kind = TargetSelection::Kind::kNonLeader;
  } else if (text.starts_with("fixed:")) {
    t.kind = TargetSelection::Kind::kFixed;
    auto v = parse_u64(text.substr(6));
    if (v > UINT32_MAX) throw InvalidConfiguration("node id out of range");
    t.fixed = NodeId{static_cast<std::uint32_t>(v)};
  } else {
    throw InvalidConfiguration("unknown target '" + std::string(text) +
                               "' (expected round-robin, random, non-leader or fixed:N)");
  }
  return t;
}

bool apply_workload_key(WorkloadSpec& spec, std::string_view key, std::string_view value) {
  if (key == "pattern") {
    if (value == "burst") {
      spec.pattern = WorkloadSpec::Pattern::kBurst;
    } else if (value == "uniform") {
      spec.pattern = WorkloadSpec::Pattern::kUniform;
    } else {
      throw InvalidConfiguration("pattern must be burst or uniform");
    }
  } else if (key == "burst_size") {
    spec.burst_size = parse_u64(value);
  } else if (key == "burst_interval") {
    spec.burst_interval = parse_ms(value);
  } else if (key == "burst_spacing") {
    spec.burst_spacing = parse_ms(value);
  } else if (key == "uniform_rate") {
    spec.uniform_rate = static_cast<double>(parse_u64(value));
  } else if (key == "commands") {
    spec.total_commands = parse_u64(value);
  } else if (key == "target") {
    spec.target = parse_target(value);
  } else if (key == "command_size") {
    spec.command_size = parse_u64(value);
  } else if (key == "start") {
    spec.start = parse_ms(value);
  } else {
    return false;
  }
  return true;
}

KeyValues workload_to_key_values(const WorkloadSpec& spec) {
  KeyValues kv;
  kv.emplace_back("pattern", spec.pattern == WorkloadSpec::Pattern::kBurst ? "burst" : "uniform");
  kv.emplace_back("burst_size", std::to_string(spec.burst_size));
  kv.emplace_back("burst_interval", format_ms(spec.burst_interval));
  kv.emplace_back("burst_spacing", format_ms(spec.burst_spacing));
  kv.emplace_back("uniform_rate", std::to_string(static_cast<std::uint64_t>(spec.uniform_rate)));
  kv.emplace_back("commands", std::to_string(spec.total_commands));
  kv.emplace_back("target", to_string(spec.target));
  kv.emplace_back("command_size", std::to_string(spec.command_size));
  kv.emplace_back("start", format_ms(spec.start));
  return kv;
}

}  // namespace fastraft
