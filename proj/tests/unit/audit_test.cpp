#include <gtest/gtest.h>

#include "fastraft/audit.hpp"

namespace fastraft {
namespace {

LogEntry entry(std::uint64_t index, std::uint64_t term, std::string command, std::uint32_t proposer = 0,
               EntryStatus status = EntryStatus::kCommitted) {
  return LogEntry{LogIndex{index}, Term{term}, std::move(command), status, NodeId{proposer}};
}

using Logs = std::map<NodeId, std::vector<LogEntry>>;

TEST(CompareLogs, TentativeSuffixesMayDiffer) {
  const std::vector<LogEntry> prefix{entry(1, 1, "a"), entry(2, 1, "b")};
  Logs committed{{NodeId{0}, prefix}, {NodeId{1}, prefix}, {NodeId{2}, {prefix[0]}}};
  Logs full = committed;
  full[NodeId{0}].push_back(entry(3, 2, "x", 1, EntryStatus::kTentativeFast));
  full[NodeId{1}].push_back(entry(3, 2, "y", 2, EntryStatus::kTentativeFast));
  const auto r = compare_logs(committed, full);
  EXPECT_TRUE(r.ok()) << r.text();
  EXPECT_EQ(r.text(), "ok\n");
}

TEST(CompareLogs, MutatedCommittedEntryIsReportedAtItsIndex) {
  const std::vector<LogEntry> good{entry(1, 1, "a"), entry(2, 1, "b"), entry(3, 1, "c")};
  auto bad = good;
  bad[1].command = "B";
  const Logs committed{{NodeId{0}, good}, {NodeId{1}, bad}};
  const auto r = compare_logs(committed, committed);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.text().find("committed prefixes diverge at index 2"), std::string::npos) << r.text();
}

TEST(CompareLogs, ProposerIsPartOfTheValue) {
  const Logs committed{{NodeId{0}, {entry(1, 1, "a", 0)}}, {NodeId{1}, {entry(1, 1, "a", 1)}}};
  EXPECT_FALSE(compare_logs(committed, {}).ok());
}

TEST(CompareLogs, CommandCommittedTwiceIsReported) {
  const Logs committed{{NodeId{0}, {entry(1, 1, "a"), entry(2, 1, "a")}}};
  const auto r = compare_logs(committed, {});
  EXPECT_NE(r.text().find("exactly-once"), std::string::npos) << r.text();
  // No-ops may repeat.
  EXPECT_TRUE(compare_logs({{NodeId{0}, {entry(1, 1, ""), entry(2, 2, "")}}}, {}).ok());
}

TEST(CompareLogs, LogMatchingOverClassicPrefix) {
  Logs full{{NodeId{0}, {entry(1, 1, "a", 0, EntryStatus::kAcceptedClassic), entry(2, 2, "b", 0, EntryStatus::kAcceptedClassic)}},
            {NodeId{1}, {entry(1, 1, "z", 0, EntryStatus::kAcceptedClassic), entry(2, 2, "b", 0, EntryStatus::kAcceptedClassic)}}};
  const auto r = compare_logs({}, full);
  EXPECT_NE(r.text().find("log matching"), std::string::npos) << r.text();
  // No index with a shared term: no anchor, no claim.
  full[NodeId{1}][0].term = Term{2};
  full[NodeId{1}][1].term = Term{3};
  EXPECT_TRUE(compare_logs({}, full).ok());
}

TEST(SafetyAuditor, TwoLeadersInOneTerm) {
  SafetyAuditor a;
  a.observe(NodeId{0}, from_ms(1), BecameLeader{Term{2}});
  a.observe(NodeId{0}, from_ms(2), BecameLeader{Term{3}});
  EXPECT_TRUE(a.report().ok());
  a.observe(NodeId{1}, from_ms(3), BecameLeader{Term{2}});
  ASSERT_EQ(a.report().violations.size(), 1U);
  EXPECT_NE(a.report().text().find("election safety"), std::string::npos);
}

TEST(SafetyAuditor, ConflictingCommitsAtOneIndex) {
  SafetyAuditor a;
  a.observe(NodeId{0}, from_ms(1), EntryCommitted{entry(4, 1, "a", 0), true, false});
  a.observe(NodeId{1}, from_ms(2), EntryCommitted{entry(4, 1, "a", 0), false, false});
  EXPECT_TRUE(a.report().ok());
  a.observe(NodeId{2}, from_ms(3), EntryCommitted{entry(4, 2, "b", 2), false, false});
  EXPECT_NE(a.report().text().find("commit agreement: index 4"), std::string::npos) << a.report().text();
}

TEST(SafetyAuditor, RefreshedTermIsTheSameValue) {
  SafetyAuditor a;
  a.observe(NodeId{0}, from_ms(1), EntryCommitted{entry(4, 1, "a", 1), true, true});
  a.observe(NodeId{2}, from_ms(2), EntryCommitted{entry(4, 3, "a", 1), false, false});
  EXPECT_TRUE(a.report().ok()) << a.report().text();
}

TEST(SafetyAuditor, CommandAtTwoIndexes) {
  SafetyAuditor a;
  a.observe(NodeId{0}, from_ms(1), EntryCommitted{entry(4, 1, "a", 1), true, false});
  a.observe(NodeId{0}, from_ms(2), EntryCommitted{entry(5, 1, "a", 1), true, false});
  EXPECT_NE(a.report().text().find("exactly-once"), std::string::npos);
}

TEST(SafetyAuditor, CommitIndexRegressionAndNodeViolations) {
  SafetyAuditor a;
  a.observe(NodeId{1}, from_ms(1), CommitAdvanced{LogIndex{0}, LogIndex{3}});
  EXPECT_TRUE(a.report().ok());
  a.observe(NodeId{1}, from_ms(2), CommitAdvanced{LogIndex{3}, LogIndex{2}});
  a.observe(NodeId{2}, from_ms(3), ProtocolViolation{"boom"});
  EXPECT_EQ(a.report().violations.size(), 2U);
  EXPECT_NE(a.report().text().find("node 2: boom"), std::string::npos);
}

TEST(AuditReport, MergeAppends) {
  AuditReport a;
  a.add("one");
  AuditReport b;
  b.add("two");
  a.merge(b);
  EXPECT_EQ(a.text(), "one\ntwo\n");
}

}  // namespace
}  // namespace fastraft
