#include <gtest/gtest.h>

#include <filesystem>

#include "fastraft/harness.hpp"
#include "fastraft/message.hpp"
#include "fastraft/persistence.hpp"
#include "fastraft/sim_config.hpp"

namespace fastraft {
namespace {

LogEntry e(std::uint64_t i, std::uint64_t t, Command c, EntryStatus s, std::uint32_t p) {
  return LogEntry{LogIndex{i}, Term{t}, std::move(c), s, NodeId{p}};
}

std::vector<Message> samples() {
  const auto a = e(1, 2, "alpha", EntryStatus::kCommitted, 1);
  const auto b = e(300, 7, std::string("\0\x01", 2), EntryStatus::kTentativeFast, 4);
  return {
      RequestVote{Term{3}, NodeId{2}, LogIndex{10}, Term{2}, LogIndex{8}},
      RequestVoteReply{Term{3}, true, {a, b}},
      AppendEntries{Term{5}, NodeId{0}, LogIndex{4}, Term{4}, {a}, LogIndex{3},
                    SelfApprovedAnnouncement{Term{5}, {NodeId{0}, NodeId{1}}, LogIndex{4}}},
      AppendEntries{Term{5}, NodeId{0}, LogIndex{0}, Term{0}, {}, LogIndex{0}, std::nullopt},
      AppendEntriesReply{Term{5}, false, LogIndex{2}},
      ForwardOperation{Term{1}, NodeId{3}, "cmd"},
      FastProposal{Term{2}, NodeId{0}, LogIndex{6}, ProposalId{NodeId{1}, 9}, b},
      FastVote{Term{2}, NodeId{2}, ProposalId{NodeId{1}, 9}, LogIndex{300}, true, b},
      ClientApply{"payload", RequestId{77}},
      ClientApplyReply{RequestId{77}, ClientApplyReply::Outcome::kRedirect, LogIndex{0}, NodeId{2}},
  };
}

TEST(Message, PayloadRoundTrip) {
  for (const auto& m : samples()) {
    const auto name = variant_name(m);
    SCOPED_TRACE(std::string(name));
    EXPECT_EQ(decode_payload(name, encode_payload(m)), m);
  }
}

TEST(Message, VariantNames) {
  const auto s = samples();
  EXPECT_EQ(variant_name(s[0]), "RequestVote");
  EXPECT_EQ(variant_name(s[2]), "AppendEntries");
  EXPECT_EQ(variant_name(s[6]), "FastProposal");
  EXPECT_EQ(variant_name(s[7]), "FastVote");
}

TEST(Message, TruncatedPayloadIsRejected) {
  const auto m = samples()[2];
  auto bytes = encode_payload(m);
  bytes.pop_back();
  EXPECT_THROW(decode_payload(variant_name(m), bytes), FormatError);
  EXPECT_THROW(decode_payload("NoSuchMessage", ""), FormatError);
}

TEST(Snapshot, SerializedFormat) {
  PersistentState s{Term{4}, NodeId{1}, {e(1, 1, "", EntryStatus::kCommitted, 0), e(2, 4, "x", EntryStatus::kTentativeFast, 2)}};
  const auto text = serialize_snapshot(s);
  EXPECT_EQ(text, "4|1\n1|1|0|COMMITTED|\n2|4|2|TENTATIVE_FAST|78\n");
  EXPECT_EQ(parse_snapshot(text), s);

  PersistentState blank{Term{0}, std::nullopt, {}};
  EXPECT_EQ(serialize_snapshot(blank), "0|-\n");
  EXPECT_EQ(parse_snapshot("0|-\n"), blank);
  EXPECT_THROW(parse_snapshot(""), FormatError);
  EXPECT_THROW(parse_snapshot("4\n"), FormatError);
}

TEST(Snapshot, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "fastraft-snapshot-test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  PersistentState s{Term{9}, std::nullopt, {e(1, 9, "k", EntryStatus::kAcceptedClassic, 3)}};
  write_snapshot_file(dir / "n.snapshot", s);
  EXPECT_EQ(read_snapshot_file(dir / "n.snapshot"), s);
  std::filesystem::remove_all(dir);
}

TEST(SimConfigText, RoundTripsEveryField) {
  SimConfig c;
  c.seed = 42;
  c.loss_probability = 0.125;
  c.delay.kind = DelayModel::Kind::kPerLink;
  c.delay.min = from_ms(2);
  c.delay.max = from_ms(3.5);
  c.delay.per_link[{NodeId{0}, NodeId{1}}] = from_ms(7);
  c.partitions.push_back({from_ms(100), from_ms(250), {NodeId{0}}, {NodeId{1}, NodeId{2}}});
  c.crashes.push_back({NodeId{2}, from_ms(300), from_ms(900)});
  c.crashes.push_back({NodeId{1}, from_ms(1000), std::nullopt});
  c.persistence = false;
  c.event_budget = 5000;

  SimConfig back;
  for (const auto& [k, v] : parse_key_values(format_key_values(sim_config_to_key_values(c)))) {
    ASSERT_TRUE(apply_sim_key(back, k, v)) << k;
  }
  EXPECT_EQ(back, c);
}

TEST(SimConfigText, RejectsMalformedValues) {
  SimConfig c;
  EXPECT_THROW(apply_sim_key(c, "loss", "1.5"), InvalidConfiguration);
  EXPECT_THROW(apply_sim_key(c, "loss", "abc"), InvalidConfiguration);
  EXPECT_THROW(apply_sim_key(c, "delay", "gaussian:1"), InvalidConfiguration);
  EXPECT_THROW(apply_sim_key(c, "crash", "1"), InvalidConfiguration);
  EXPECT_FALSE(apply_sim_key(c, "protocol", "raft"));
  EXPECT_THROW(parse_key_values("novalue\n"), InvalidConfiguration);
  EXPECT_EQ(parse_key_values("# comment\n\n a = b \n").size(), 1U);
}

TEST(SimConfigValidate, CatchesBadSchedules) {
  const auto cluster = ClusterConfig::with_members(3);
  SimConfig c;
  c.crashes = {{NodeId{1}, from_ms(100), from_ms(500)}, {NodeId{1}, from_ms(400), from_ms(600)}};
  EXPECT_THROW(c.validate(cluster), InvalidConfiguration);
  c.crashes = {{NodeId{1}, from_ms(100), from_ms(50)}};
  EXPECT_THROW(c.validate(cluster), InvalidConfiguration);
  c.crashes = {{NodeId{5}, from_ms(100), std::nullopt}};
  EXPECT_THROW(c.validate(cluster), InvalidConfiguration);
  c.crashes.clear();
  c.partitions = {{from_ms(0), from_ms(10), {NodeId{0}, NodeId{1}}, {NodeId{1}}}};
  EXPECT_THROW(c.validate(cluster), InvalidConfiguration);
  c.partitions.clear();
  EXPECT_NO_THROW(c.validate(cluster));
}

TEST(ExperimentText, RoundTripsThroughKeyValues) {
  Experiment x = default_sweep_experiment();
  x.nodes = 5;
  x.node.protocol = Protocol::kRaft;
  x.node.self_approved = std::vector<NodeId>{NodeId{0}, NodeId{3}};
  x.node.mutations.fast_quorum_override = 2;
  x.workload.pattern = WorkloadSpec::Pattern::kUniform;
  x.workload.uniform_rate = 250;
  x.workload.target = TargetSelection{TargetSelection::Kind::kFixed, NodeId{4}};
  x.sim.seed = 17;
  x.sim.crashes.push_back({NodeId{3}, from_ms(50), std::nullopt});

  Experiment back;
  apply_key_values(back, parse_key_values(format_key_values(experiment_to_key_values(x))));
  EXPECT_EQ(format_key_values(experiment_to_key_values(back)), format_key_values(experiment_to_key_values(x)));
  EXPECT_EQ(back.nodes, 5U);
  EXPECT_EQ(back.workload, x.workload);
  EXPECT_EQ(back.sim, x.sim);

  EXPECT_THROW(apply_key_values(back, {{"bogus", "1"}}), InvalidConfiguration);
  EXPECT_THROW(apply_key_values(back, {{"nodes", "0"}}), InvalidConfiguration);
}

}  // namespace
}  // namespace fastraft
