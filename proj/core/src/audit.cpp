#include "fastraft/audit.hpp"

#include <algorithm>

namespace fastraft {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string describe(const LogEntry& e) { return to_canonical(e); }

std::string node_name(NodeId n) { return "node " + std::to_string(n.value()); }

/// Slots 1..n holding non-tentative entries, as a dense vector.
std::vector<const LogEntry*> classic_prefix(const std::vector<LogEntry>& log) {
  std::vector<const LogEntry*> out;
  for (const auto& e : log) {
    if (e.index.value() != out.size() + 1 || e.tentative()) break;
    out.push_back(&e);
  }
  return out;
}

}  // namespace

void AuditReport::merge(const AuditReport& other) {
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

std::string AuditReport::text() const {
  if (ok()) return "ok\n";
  std::string out;
  for (const auto& v : violations) out += v + "\n";
  return out;
}

void SafetyAuditor::observe(NodeId node, SimTime at, const Observation& observation) {
  const auto when = " at t=" + std::to_string(to_ms(at)) + "ms";
  std::visit(Overloaded{
                 [&](const BecameLeader& b) {
                   auto [it, fresh] = leaders_.try_emplace(b.term, node);
                   if (!fresh && it->second != node) {
                     report_.add("election safety: " + node_name(it->second) + " and " + node_name(node) +
                                 " both leader in term " + std::to_string(b.term.value()) + when);
                   }
                 },
                 [&](const EntryCommitted& c) {
                   const auto& e = c.entry;
                   auto [it, fresh] = committed_.try_emplace(e.index, Committed{e.proposer, e.command, node});
                   if (!fresh && (it->second.proposer != e.proposer || it->second.command != e.command)) {
                     report_.add("commit agreement: index " + std::to_string(e.index.value()) + " committed as " +
                                 describe(e) + " at " + node_name(node) + " but as proposer " +
                                 std::to_string(it->second.proposer.value()) + " command " +
                                 to_hex(it->second.command) + " at " + node_name(it->second.first_seen_at) + when);
                   }
                   if (!e.command.empty()) {
                     auto [ct, cfresh] = command_index_.try_emplace(e.command, e.index);
                     if (!cfresh && ct->second != e.index) {
                       report_.add("exactly-once: command " + to_hex(e.command) + " committed at indexes " +
                                   std::to_string(ct->second.value()) + " and " + std::to_string(e.index.value()) +
                                   when);
                     }
                   }
                 },
                 [&](const CommitAdvanced& a) {
                   if (a.to <= a.from) {
                     report_.add("commit index of " + node_name(node) + " moved backwards from " +
                                 std::to_string(a.from.value()) + " to " + std::to_string(a.to.value()) + when);
                   }
                 },
                 [&](const ProtocolViolation& v) { report_.add(node_name(node) + ": " + v.what + when); },
                 [](const FastProposed&) {},
                 [](const ClientReplied&) {},
             },
             observation);
}

AuditReport compare_logs(const std::map<NodeId, std::vector<LogEntry>>& committed_prefixes,
                         const std::map<NodeId, std::vector<LogEntry>>& full_logs) {
  AuditReport report;

  for (auto a = committed_prefixes.begin(); a != committed_prefixes.end(); ++a) {
    for (auto b = std::next(a); b != committed_prefixes.end(); ++b) {
      const auto n = std::min(a->second.size(), b->second.size());
      for (std::size_t i = 0; i < n; ++i) {
        const auto& x = a->second[i];
        const auto& y = b->second[i];
        if (x.index != y.index || !x.same_value(y)) {
          report.add("committed prefixes diverge at index " + std::to_string(x.index.value()) + ": " +
                     node_name(a->first) + " has " + describe(x) + ", " + node_name(b->first) + " has " +
                     describe(y));
          break;
        }
      }
    }
  }

  for (const auto& [node, prefix] : committed_prefixes) {
    std::map<Command, LogIndex> seen;
    for (const auto& e : prefix) {
      if (e.command.empty()) continue;
      auto [it, fresh] = seen.try_emplace(e.command, e.index);
      if (!fresh) {
        report.add("exactly-once: " + node_name(node) + " committed command " + to_hex(e.command) + " at " +
                   std::to_string(it->second.value()) + " and " + std::to_string(e.index.value()));
      }
    }
  }

  std::map<NodeId, std::vector<const LogEntry*>> prefixes;
  for (const auto& [node, log] : full_logs) prefixes[node] = classic_prefix(log);
  for (auto a = prefixes.begin(); a != prefixes.end(); ++a) {
    for (auto b = std::next(a); b != prefixes.end(); ++b) {
      const auto n = std::min(a->second.size(), b->second.size());
      // Highest index where both logs carry the same term; everything up to
      // it must match.
      std::size_t anchor = 0;
      for (std::size_t i = n; i > 0; --i) {
        if (a->second[i - 1]->term == b->second[i - 1]->term) {
          anchor = i;
          break;
        }
      }
      for (std::size_t i = 0; i < anchor; ++i) {
        if (!a->second[i]->same_value(*b->second[i])) {
          report.add("log matching: " + node_name(a->first) + " and " + node_name(b->first) +
                     " agree on the term at index " + std::to_string(anchor) + " but differ at index " +
                     std::to_string(i + 1) + ": " + describe(*a->second[i]) + " vs " + describe(*b->second[i]));
          break;
        }
      }
    }
  }
  return report;
}

}  // namespace fastraft
