#include "fastraft/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

namespace fastraft {

namespace {

SimTime random_time(Rng& rng, double lo_ms, double hi_ms) {
  return from_ms(lo_ms + rng.uniform01() * (hi_ms - lo_ms));
}

}  // namespace

Experiment fuzz_experiment(std::uint64_t seed, const FuzzOptions& options) {
  Rng rng(seed, RngStream::kFaults);
  Experiment e;
  e.nodes = rng.bernoulli(0.5) ? 3 : 5;
  e.node.protocol = options.protocols.at(rng.uniform_int(0, options.protocols.size() - 1));
  e.node.mutations = options.mutations;
  e.sim.seed = seed;
  e.sim.loss_probability = rng.uniform01() * options.loss_max;
  e.sim.delay = rng.bernoulli(0.3) ? DelayModel::uniform(from_ms(1), from_ms(30))
                                   : DelayModel::uniform(from_ms(1), from_ms(5));

  auto& w = e.workload;
  w.total_commands = rng.uniform_int(1, 20);
  w.burst_size = rng.uniform_int(1, 5);
  w.burst_interval = random_time(rng, 20, 300);
  w.burst_spacing = random_time(rng, 0, 5);
  w.start = random_time(rng, 200, 1500);
  w.command_size = 8;
  switch (rng.uniform_int(0, 3)) {
    case 0:
      w.target.kind = TargetSelection::Kind::kRoundRobin;
      break;
    case 1:
      w.target.kind = TargetSelection::Kind::kRandom;
      break;
    case 2:
      w.target.kind = TargetSelection::Kind::kNonLeader;
      break;
    default:
      w.target.kind = TargetSelection::Kind::kFixed;
      w.target.fixed = NodeId{static_cast<std::uint32_t>(rng.uniform_int(0, e.nodes - 1))};
      break;
  }

  if (options.faults) {
    const auto partitions = rng.uniform_int(0, 2);
    for (std::uint64_t i = 0; i < partitions; ++i) {
      PartitionWindow p;
      p.start = random_time(rng, 0, 4000);
      p.end = p.start + random_time(rng, 50, 2000);
      std::vector<NodeId> order;
      for (std::uint32_t n = 0; n < e.nodes; ++n) order.emplace_back(n);
      for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.uniform_int(0, k - 1)]);
      const auto split = rng.uniform_int(1, e.nodes - 1);
      p.side_a.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(split));
      p.side_b.assign(order.begin() + static_cast<std::ptrdiff_t>(split), order.end());
      std::sort(p.side_a.begin(), p.side_a.end());
      std::sort(p.side_b.begin(), p.side_b.end());
      e.sim.partitions.push_back(std::move(p));
    }
    const auto crashes = rng.uniform_int(0, 2);
    std::map<NodeId, SimTime> free_after;
    for (std::uint64_t i = 0; i < crashes; ++i) {
      NodeId node{static_cast<std::uint32_t>(rng.uniform_int(0, e.nodes - 1))};
      CrashWindow c{node, random_time(rng, 0, 4000), std::nullopt};
      if (rng.bernoulli(0.85)) c.restart = c.crash + random_time(rng, 50, 2000);
      auto busy = free_after.find(node);
      if (busy != free_after.end()) {
        if (busy->second == SimTime::max()) continue;
        const auto shift = busy->second + from_ms(1) - c.crash;
        if (shift.count() > 0) {
          c.crash += shift;
          if (c.restart) *c.restart += shift;
        }
      }
      free_after[node] = c.restart.value_or(SimTime::max());
      e.sim.crashes.push_back(c);
    }
  }
  return e;
}

std::vector<std::string> check_experiment(const Experiment& experiment, const RunResult& result) {
  std::vector<std::string> problems = result.audit.violations;
  if (result.metrics.aborted) problems.push_back("run aborted: " + result.metrics.abort_reason);
  if (experiment.sim.crashes.empty()) {
    for (const auto& c : result.metrics.commands) {
      if (!c.committed && !c.failure_reported) {
        problems.push_back("liveness: request " + std::to_string(c.request_id.value()) +
                           " neither committed nor failed back");
      }
    }
  }
  return problems;
}

void write_reproducer(const std::filesystem::path& dir, std::uint64_t seed, const Experiment& experiment) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream cfg(dir / (std::to_string(seed) + ".cfg"), std::ios::binary | std::ios::trunc);
    cfg << format_key_values(experiment_to_key_values(experiment));
  }
  const auto replay = run_workload(experiment, TraceMode::kRecord);
  std::ofstream trace(dir / (std::to_string(seed) + ".trace"), std::ios::binary | std::ios::trunc);
  for (const auto& line : replay.trace) trace << line << '\n';
}

FuzzReport run_fuzz(const FuzzOptions& options) {
  if (options.seeds == 0) throw InvalidConfiguration("fuzz needs at least one seed");
  if (!(options.loss_max >= 0.0 && options.loss_max < 1.0)) throw InvalidConfiguration("loss_max must lie in [0, 1)");
  if (options.protocols.empty()) throw InvalidConfiguration("fuzz needs at least one protocol");

  std::vector<std::vector<std::string>> problems(options.seeds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < options.seeds; i = next.fetch_add(1)) {
      const auto seed = options.first_seed + i;
      const auto experiment = fuzz_experiment(seed, options);
      const auto result = run_workload(experiment, TraceMode::kOff);
      problems[i] = check_experiment(experiment, result);
      if (!problems[i].empty() && options.out_dir) write_reproducer(*options.out_dir, seed, experiment);
    }
  };
  const auto threads = std::max<std::size_t>(1, std::min(options.threads, options.seeds));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  FuzzReport report;
  report.runs = options.seeds;
  for (std::size_t i = 0; i < options.seeds; ++i) {
    if (problems[i].empty()) continue;
    std::string reason;
    for (const auto& p : problems[i]) reason += p + "; ";
    reason.resize(reason.size() - 2);
    report.failures.push_back({options.first_seed + i, std::move(reason)});
  }
  return report;
}

}  // namespace fastraft
