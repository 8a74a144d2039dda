#pragma once

#include <map>
#include <string>
#include <vector>

#include "fastraft/node.hpp"

namespace fastraft {

struct AuditReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  void add(std::string what) { violations.push_back(std::move(what)); }
  void merge(const AuditReport& other);
  /// One violation per line, or "ok".
  std::string text() const;
};

/// Online checker fed with every observation of a run. Checks Election
/// Safety (one leader per term), Commit Agreement (one committed value per
/// index, cluster-wide, ever) and node-reported protocol violations.
class SafetyAuditor {
 public:
  void observe(NodeId node, SimTime at, const Observation& observation);
  const AuditReport& report() const { return report_; }

 private:
  struct Committed {
    NodeId proposer;
    Command command;
    NodeId first_seen_at;
  };

  std::map<Term, NodeId> leaders_;
  std::map<LogIndex, Committed> committed_;
  std::map<Command, LogIndex> command_index_;
  AuditReport report_;
};

/// Offline comparison of final node states:
///  - committed prefixes agree pairwise (by index, proposer and command);
///  - Log Matching over classic prefixes: equal terms at an index imply
///    equal values at every earlier index;
///  - no command is committed at two indexes.
AuditReport compare_logs(const std::map<NodeId, std::vector<LogEntry>>& committed_prefixes,
                         const std::map<NodeId, std::vector<LogEntry>>& full_logs);

}  // namespace fastraft
