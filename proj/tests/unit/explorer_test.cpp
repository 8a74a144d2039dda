#include <gtest/gtest.h>

#include "explorer.hpp"

namespace fastraft::testing {
namespace {

ExploreStats explore(Protocol p, TestMutations m, ExploreBounds b) {
  NodeOptions o;
  o.protocol = p;
  o.mutations = m;
  Explorer x(3, o);
  x.settle_initial_leader();
  return x.explore(b);
}

ExploreBounds small_bounds() {
  ExploreBounds b;
  b.depth = 7;
  b.window = 2;
  b.max_drops = 1;
  b.max_timer_fires = 1;
  b.commands = 2;
  return b;
}

class ExplorerBoth : public ::testing::TestWithParam<Protocol> {};

TEST_P(ExplorerBoth, SmallBoundsAreClean) {
  const auto s = explore(GetParam(), {}, small_bounds());
  EXPECT_GT(s.states, 1000U);
  EXPECT_GT(s.completions, 0U);
  EXPECT_TRUE(s.violations.empty()) << s.violations.front();
}

INSTANTIATE_TEST_SUITE_P(Protocols, ExplorerBoth, ::testing::Values(Protocol::kRaft, Protocol::kFastRaft),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Explorer, DroppedVoteLogCheckIsFound) {
  ExploreBounds b;
  b.depth = 12;
  b.commands = 1;
  TestMutations m;
  m.skip_vote_log_check = true;
  const auto s = explore(Protocol::kRaft, m, b);
  ASSERT_FALSE(s.violations.empty());
  EXPECT_FALSE(s.counterexample.empty());
}

TEST(Explorer, StateLimitStopsEarly) {
  auto b = small_bounds();
  b.state_limit = 100;
  const auto s = explore(Protocol::kFastRaft, {}, b);
  EXPECT_LE(s.states, 101U);
}

}  // namespace
}  // namespace fastraft::testing
