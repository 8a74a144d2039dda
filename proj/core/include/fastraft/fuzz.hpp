#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fastraft/harness.hpp"

namespace fastraft {

struct FuzzOptions {
  std::uint64_t first_seed = 1;
  std::size_t seeds = 1000;
  double loss_max = 0.2;
  bool faults = true;
  /// Randomize over these protocols (per seed); defaults to both.
  std::vector<Protocol> protocols{Protocol::kRaft, Protocol::kFastRaft};
  TestMutations mutations;
  /// Reproducers (`<seed>.cfg`, `<seed>.trace`) are written here when set.
  std::optional<std::filesystem::path> out_dir;
  std::size_t threads = 1;
};

struct FuzzFailure {
  std::uint64_t seed = 0;
  std::string reason;
};

struct FuzzReport {
  std::size_t runs = 0;
  std::vector<FuzzFailure> failures;

  bool ok() const { return failures.empty(); }
};

/// Deterministic experiment for one fuzz seed: cluster size 3 or 5, loss in
/// [0, loss_max], and (with faults) random partitions and crash/restart windows.
Experiment fuzz_experiment(std::uint64_t seed, const FuzzOptions& options);

/// Runs one experiment and returns every safety or liveness problem found.
/// Liveness (every command committed or failed back) is only required when
/// no node crashes, since a crash drops the client's pending requests.
std::vector<std::string> check_experiment(const Experiment& experiment, const RunResult& result);

FuzzReport run_fuzz(const FuzzOptions& options);

/// Writes `<dir>/<seed>.cfg` and `<dir>/<seed>.trace` for a failing seed.
void write_reproducer(const std::filesystem::path& dir, std::uint64_t seed, const Experiment& experiment);

}  // namespace fastraft
