#include <gtest/gtest.h>

#include <map>

#include "fastraft/log.hpp"
#include "fastraft/rng.hpp"

namespace fastraft {
namespace {

LogEntry make(std::uint64_t index, EntryStatus status, Command c = "c", std::uint64_t term = 1) {
  return LogEntry{LogIndex{index}, Term{term}, std::move(c), status, NodeId{0}};
}

TEST(ReplicatedLog, EmptyLog) {
  ReplicatedLog log;
  EXPECT_TRUE(log.empty());
  EXPECT_EQ(log.last_index(), LogIndex{0});
  EXPECT_EQ(log.classic_end(), LogIndex{0});
  EXPECT_EQ(log.term_at(LogIndex{0}), Term{0});
  EXPECT_EQ(log.at(LogIndex{1}), nullptr);
  EXPECT_THROW(log.put(make(0, EntryStatus::kAcceptedClassic)), std::out_of_range);
}

TEST(ReplicatedLog, TentativeEntriesAndGapsBoundTheClassicPrefix) {
  ReplicatedLog log;
  log.put(make(1, EntryStatus::kCommitted, "a"));
  log.put(make(2, EntryStatus::kAcceptedClassic, "b"));
  log.put(make(4, EntryStatus::kAcceptedClassic, "d"));
  EXPECT_EQ(log.classic_end(), LogIndex{2});
  EXPECT_EQ(log.last_index(), LogIndex{4});

  log.put(make(3, EntryStatus::kTentativeFast, "c"));
  EXPECT_EQ(log.classic_end(), LogIndex{2});
  log.set_status(LogIndex{3}, EntryStatus::kCommitted);
  EXPECT_EQ(log.classic_end(), LogIndex{4});

  log.put(make(2, EntryStatus::kTentativeFast, "x"));
  EXPECT_EQ(log.classic_end(), LogIndex{1});
  EXPECT_FALSE(log.find_command("b"));
  EXPECT_EQ(log.find_command("x"), LogIndex{2});
}

TEST(ReplicatedLog, EraseTrimsTrailingGaps) {
  ReplicatedLog log;
  log.put(make(1, EntryStatus::kAcceptedClassic, "a"));
  log.put(make(3, EntryStatus::kTentativeFast, "c"));
  log.erase(LogIndex{3});
  EXPECT_EQ(log.last_index(), LogIndex{1});
  log.erase(LogIndex{1});
  EXPECT_TRUE(log.empty());
  EXPECT_FALSE(log.find_command("a"));
}

TEST(ReplicatedLog, NoOpsAreNotIndexed) {
  ReplicatedLog log;
  log.put(make(1, EntryStatus::kAcceptedClassic, ""));
  EXPECT_FALSE(log.find_command(""));
  EXPECT_TRUE(log.find_all("").empty());
}

TEST(ReplicatedLog, DuplicatePayloadsAreAllFound) {
  ReplicatedLog log;
  log.put(make(5, EntryStatus::kTentativeFast, "dup"));
  log.put(make(2, EntryStatus::kAcceptedClassic, "dup"));
  EXPECT_EQ(log.find_all("dup"), (std::vector<LogIndex>{LogIndex{2}, LogIndex{5}}));
}

// Random operation sequences checked against a plain map model.
TEST(ReplicatedLog, MatchesReferenceModel) {
  Rng rng(2024);
  for (int round = 0; round < 200; ++round) {
    ReplicatedLog log;
    std::map<std::uint64_t, LogEntry> model;
    for (int step = 0; step < 60; ++step) {
      const auto i = rng.uniform_int(1, 12);
      const auto op = rng.uniform_int(0, 9);
      if (op < 6) {
        const auto status = static_cast<EntryStatus>(rng.uniform_int(0, 2));
        auto e = make(i, status, "v" + std::to_string(rng.uniform_int(0, 5)), rng.uniform_int(1, 3));
        log.put(e);
        model[i] = e;
      } else if (op < 8) {
        log.erase(LogIndex{i});
        model.erase(i);
      } else if (model.contains(i)) {
        const auto status = static_cast<EntryStatus>(rng.uniform_int(0, 2));
        log.set_status(LogIndex{i}, status);
        model[i].status = status;
      }

      std::uint64_t classic_end = 0;
      while (model.contains(classic_end + 1) && !model[classic_end + 1].tentative()) ++classic_end;
      ASSERT_EQ(log.classic_end(), LogIndex{classic_end});
      ASSERT_EQ(log.last_index(), LogIndex{model.empty() ? 0 : model.rbegin()->first});
      for (const auto& [k, e] : model) {
        ASSERT_NE(log.at(LogIndex{k}), nullptr);
        ASSERT_EQ(*log.at(LogIndex{k}), e);
      }
      for (int v = 0; v < 6; ++v) {
        const auto cmd = "v" + std::to_string(v);
        std::vector<LogIndex> expect;
        for (const auto& [k, e] : model) {
          if (e.command == cmd) expect.emplace_back(k);
        }
        ASSERT_EQ(log.find_all(cmd), expect);
      }
    }
  }
}

}  // namespace
}  // namespace fastraft
