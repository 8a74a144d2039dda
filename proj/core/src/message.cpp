#include "fastraft/message.hpp"

namespace fastraft {

namespace {

class Writer {
 public:
  void u64(std::uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<char>((v & 0x7f) | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<char>(v));
  }
  void flag(bool b) { u64(b ? 1 : 0); }
  void bytes(std::string_view b) {
    u64(b.size());
    out_.append(b);
  }
  void entry(const LogEntry& e) {
    u64(e.index.value());
    u64(e.term.value());
    u64(e.proposer.value());
    u64(static_cast<std::uint64_t>(e.status));
    bytes(e.command);
  }
  void entries(const std::vector<LogEntry>& es) {
    u64(es.size());
    for (const auto& e : es) entry(e);
  }
  void proposal_id(const ProposalId& id) {
    u64(id.proposer.value());
    u64(id.sequence);
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (pos_ >= in_.size()) throw FormatError("truncated payload");
      auto byte = static_cast<unsigned char>(in_[pos_++]);
      v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
      if ((byte & 0x80) == 0) return v;
    }
    throw FormatError("varint too long");
  }
  bool flag() { return u64() != 0; }
  std::string bytes() {
    auto n = u64();
    if (n > in_.size() - pos_) throw FormatError("truncated bytes field");
    std::string out(in_.substr(pos_, n));
    pos_ += n;
    return out;
  }
  LogEntry entry() {
    LogEntry e;
    e.index = LogIndex{u64()};
    e.term = Term{u64()};
    e.proposer = NodeId{static_cast<std::uint32_t>(u64())};
    auto status = u64();
    if (status > 2) throw FormatError("bad entry status");
    e.status = static_cast<EntryStatus>(status);
    e.command = bytes();
    return e;
  }
  std::vector<LogEntry> entries() {
    auto n = u64();
    if (n > in_.size()) throw FormatError("implausible entry count");
    std::vector<LogEntry> es;
    es.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) es.push_back(entry());
    return es;
  }
  ProposalId proposal_id() {
    ProposalId id;
    id.proposer = NodeId{static_cast<std::uint32_t>(u64())};
    id.sequence = u64();
    return id;
  }
  NodeId node() { return NodeId{static_cast<std::uint32_t>(u64())}; }

  void finish() const {
    if (pos_ != in_.size()) throw FormatError("trailing bytes in payload");
  }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view variant_name(const Message& message) {
  return std::visit(Overloaded{
                        [](const RequestVote&) { return std::string_view{"RequestVote"}; },
                        [](const RequestVoteReply&) { return std::string_view{"RequestVoteReply"}; },
                        [](const AppendEntries&) { return std::string_view{"AppendEntries"}; },
                        [](const AppendEntriesReply&) { return std::string_view{"AppendEntriesReply"}; },
                        [](const ForwardOperation&) { return std::string_view{"ForwardOperation"}; },
                        [](const FastProposal&) { return std::string_view{"FastProposal"}; },
                        [](const FastVote&) { return std::string_view{"FastVote"}; },
                        [](const ClientApply&) { return std::string_view{"ClientApply"}; },
                        [](const ClientApplyReply&) { return std::string_view{"ClientApplyReply"}; },
                    },
                    message);
}

std::string encode_payload(const Message& message) {
  Writer w;
  std::visit(Overloaded{
                 [&](const RequestVote& m) {
                   w.u64(m.term.value());
                   w.u64(m.candidate.value());
                   w.u64(m.last_log_index.value());
                   w.u64(m.last_log_term.value());
                   w.u64(m.commit_index.value());
                 },
                 [&](const RequestVoteReply& m) {
                   w.u64(m.term.value());
                   w.flag(m.granted);
                   w.entries(m.uncommitted);
                 },
                 [&](const AppendEntries& m) {
                   w.u64(m.term.value());
                   w.u64(m.leader.value());
                   w.u64(m.prev_log_index.value());
                   w.u64(m.prev_log_term.value());
                   w.entries(m.entries);
                   w.u64(m.leader_commit.value());
                   w.flag(m.approved.has_value());
                   if (m.approved) {
                     w.u64(m.approved->epoch.value());
                     w.u64(m.approved->approved.size());
                     for (auto id : m.approved->approved) w.u64(id.value());
                     w.u64(m.approved->fast_floor.value());
                   }
                 },
                 [&](const AppendEntriesReply& m) {
                   w.u64(m.term.value());
                   w.flag(m.success);
                   w.u64(m.match_index.value());
                 },
                 [&](const ForwardOperation& m) {
                   w.u64(m.term.value());
                   w.u64(m.origin.value());
                   w.bytes(m.command);
                 },
                 [&](const FastProposal& m) {
                   w.u64(m.term.value());
                   w.u64(m.leader.value());
                   w.u64(m.fast_floor.value());
                   w.proposal_id(m.id);
                   w.entry(m.entry);
                 },
                 [&](const FastVote& m) {
                   w.u64(m.term.value());
                   w.u64(m.voter.value());
                   w.proposal_id(m.id);
                   w.u64(m.index.value());
                   w.flag(m.accept);
                   w.entry(m.entry);
                 },
                 [&](const ClientApply& m) {
                   w.bytes(m.command);
                   w.u64(m.request_id.value());
                 },
                 [&](const ClientApplyReply& m) {
                   w.u64(m.request_id.value());
                   w.u64(static_cast<std::uint64_t>(m.outcome));
                   w.u64(m.committed_index.value());
                   w.flag(m.redirect.has_value());
                   if (m.redirect) w.u64(m.redirect->value());
                 },
             },
             message);
  return w.take();
}

Message decode_payload(std::string_view variant, std::string_view bytes) {
  Reader r(bytes);
  Message out;
  if (variant == "RequestVote") {
    RequestVote m;
    m.term = Term{r.u64()};
    m.candidate = r.node();
    m.last_log_index = LogIndex{r.u64()};
    m.last_log_term = Term{r.u64()};
    m.commit_index = LogIndex{r.u64()};
    out = m;
  } else if (variant == "RequestVoteReply") {
    RequestVoteReply m;
    m.term = Term{r.u64()};
    m.granted = r.flag();
    m.uncommitted = r.entries();
    out = std::move(m);
  } else if (variant == "AppendEntries") {
    AppendEntries m;
    m.term = Term{r.u64()};
    m.leader = r.node();
    m.prev_log_index = LogIndex{r.u64()};
    m.prev_log_term = Term{r.u64()};
    m.entries = r.entries();
    m.leader_commit = LogIndex{r.u64()};
    if (r.flag()) {
      SelfApprovedAnnouncement a;
      a.epoch = Term{r.u64()};
      auto n = r.u64();
      if (n > bytes.size()) throw FormatError("implausible member count");
      for (std::uint64_t i = 0; i < n; ++i) a.approved.push_back(r.node());
      a.fast_floor = LogIndex{r.u64()};
      m.approved = std::move(a);
    }
    out = std::move(m);
  } else if (variant == "AppendEntriesReply") {
    AppendEntriesReply m;
    m.term = Term{r.u64()};
    m.success = r.flag();
    m.match_index = LogIndex{r.u64()};
    out = m;
  } else if (variant == "ForwardOperation") {
    ForwardOperation m;
    m.term = Term{r.u64()};
    m.origin = r.node();
    m.command = r.bytes();
    out = std::move(m);
  } else if (variant == "FastProposal") {
    FastProposal m;
    m.term = Term{r.u64()};
    m.leader = r.node();
    m.fast_floor = LogIndex{r.u64()};
    m.id = r.proposal_id();
    m.entry = r.entry();
    out = std::move(m);
  } else if (variant == "FastVote") {
    FastVote m;
    m.term = Term{r.u64()};
    m.voter = r.node();
    m.id = r.proposal_id();
    m.index = LogIndex{r.u64()};
    m.accept = r.flag();
    m.entry = r.entry();
    out = std::move(m);
  } else if (variant == "ClientApply") {
    ClientApply m;
    m.command = r.bytes();
    m.request_id = RequestId{r.u64()};
    out = std::move(m);
  } else if (variant == "ClientApplyReply") {
    ClientApplyReply m;
    m.request_id = RequestId{r.u64()};
    auto outcome = r.u64();
    if (outcome > 2) throw FormatError("bad reply outcome");
    m.outcome = static_cast<ClientApplyReply::Outcome>(outcome);
    m.committed_index = LogIndex{r.u64()};
    if (r.flag()) m.redirect = r.node();
    out = m;
  } else {
    throw FormatError("unknown message variant: " + std::string(variant));
  }
  r.finish();
  return out;
}

}  // namespace fastraft
