#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fastraft/fuzz.hpp"

namespace fastraft {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

TEST(Fuzz, ExperimentsAreDeterministicAndBounded) {
  FuzzOptions o;
  std::set<std::size_t> sizes;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto a = fuzz_experiment(seed, o);
    EXPECT_EQ(experiment_to_key_values(a), experiment_to_key_values(fuzz_experiment(seed, o)));
    EXPECT_TRUE(a.nodes == 3 || a.nodes == 5);
    EXPECT_GE(a.sim.loss_probability, 0.0);
    EXPECT_LE(a.sim.loss_probability, o.loss_max);
    EXPECT_NO_THROW(a.validate());
    sizes.insert(a.nodes);
  }
  EXPECT_EQ(sizes.size(), 2U);

  o.faults = false;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto a = fuzz_experiment(seed, o);
    EXPECT_TRUE(a.sim.crashes.empty());
    EXPECT_TRUE(a.sim.partitions.empty());
  }
}

TEST(Fuzz, CleanProtocolsSurviveTwoHundredSeeds) {
  FuzzOptions o;
  o.seeds = 200;
  o.threads = 4;
  const auto r = run_fuzz(o);
  EXPECT_EQ(r.runs, 200U);
  for (const auto& f : r.failures) ADD_FAILURE() << "seed " << f.seed << ": " << f.reason;
}

TEST(Fuzz, UndersizedFastQuorumIsCaughtAndReplays) {
  const auto dir = fs::temp_directory_path() / "fastraft-fuzz-test";
  fs::remove_all(dir);
  FuzzOptions o;
  o.seeds = 150;
  o.threads = 4;
  o.protocols = {Protocol::kFastRaft};
  o.mutations.fast_quorum_override = 1;
  o.out_dir = dir;
  const auto r = run_fuzz(o);
  ASSERT_FALSE(r.ok());

  const auto seed = r.failures.front().seed;
  const auto cfg = dir / (std::to_string(seed) + ".cfg");
  const auto trace = dir / (std::to_string(seed) + ".trace");
  ASSERT_TRUE(fs::exists(cfg));
  ASSERT_TRUE(fs::exists(trace));

  Experiment replay;
  apply_key_values(replay, read_key_values_file(cfg));
  const auto again = run_workload(replay, TraceMode::kRecord);
  EXPECT_EQ(join_lines(again.trace), slurp(trace));
  EXPECT_FALSE(check_experiment(replay, again).empty());
  fs::remove_all(dir);
}

TEST(Fuzz, CheckReportsLivenessOnlyWithoutCrashes) {
  auto e = fuzz_experiment(3, FuzzOptions{});
  e.sim.crashes.clear();
  auto r = run_workload(e);
  r.metrics.commands.front().committed.reset();
  r.metrics.commands.front().failure_reported = false;
  EXPECT_FALSE(check_experiment(e, r).empty());
  e.sim.crashes.push_back({NodeId{1}, from_ms(1500), from_ms(1800)});
  EXPECT_TRUE(check_experiment(e, r).empty());
}

}  // namespace
}  // namespace fastraft
