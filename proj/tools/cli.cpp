#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "fastraft/fuzz.hpp"
#include "fastraft/harness.hpp"

namespace fastraft::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A string flag that maps onto one experiment config key.
struct KeyFlag {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

struct ExperimentFlags {
  std::string config_file;
  std::vector<std::string> overrides;
  std::vector<KeyFlag> flags;

  void attach(CLI::App& app, const std::vector<std::pair<std::string, std::string>>& names) {
    app.add_option("--config", config_file, "key=value config file; flags override its values")
        ->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "Extra KEY=VALUE override (repeatable, applied last)");
    flags.reserve(names.size());
    for (const auto& [flag, help] : names) {
      auto& f = flags.emplace_back();
      f.key = flag;
      for (auto& c : f.key) c = c == '-' ? '_' : c;
      f.option = app.add_option("--" + flag, f.value, help);
    }
  }

  /// Config file, then named flags, then --set pairs.
  void apply(Experiment& e) const {
    if (!config_file.empty()) apply_key_values(e, read_key_values_file(config_file));
    for (const auto& f : flags) {
      if (f.option->count() > 0) apply_key_values(e, {{f.key, f.value}});
    }
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
      apply_key_values(e, {{kv.substr(0, eq), kv.substr(eq + 1)}});
    }
  }
};

const std::vector<std::pair<std::string, std::string>> kRunFlags = {
    {"protocol", "raft or fastraft (default fastraft)"},
    {"nodes", "Cluster size (default 3)"},
    {"loss", "Per-message loss probability in [0, 1] (default 0)"},
    {"seed", "Simulation seed (default 1)"},
    {"delay", "fixed:MS | uniform:MIN:MAX | perlink:MIN:MAX (default uniform:1:5)"},
    {"commands", "Total client commands (default 200)"},
    {"pattern", "burst or uniform (default burst)"},
    {"burst-size", "Commands per burst (default 10)"},
    {"burst-interval", "ms between bursts (default 100)"},
    {"burst-spacing", "ms between commands in a burst (default 1)"},
    {"uniform-rate", "Commands per simulated second for the uniform pattern (default 100)"},
    {"target", "round-robin | random | non-leader | fixed:N (default round-robin)"},
    {"command-size", "Command payload bytes (default 16)"},
    {"start", "ms of the first injection (default 1000)"},
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) throw UsageError("empty item in list '" + text + "'");
    out.push_back(item);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::vector<Protocol> parse_protocols(const std::string& text) {
  std::vector<Protocol> out;
  for (const auto& p : split_list(text)) out.push_back(parse_protocol(p));
  return out;
}

std::size_t default_threads() { return std::max(1U, std::thread::hardware_concurrency()); }

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void print_summary(std::ostream& out, const Experiment& e, const RunResult& r) {
  const auto& m = r.metrics;
  std::size_t tracks[3] = {0, 0, 0};
  for (const auto& c : m.commands) {
    if (c.committed) ++tracks[static_cast<int>(c.track)];
  }
  const auto l = m.latencies_ms();
  out << "protocol=" << to_string(e.node.protocol) << " nodes=" << e.nodes << " seed=" << e.sim.seed
      << " loss=" << e.sim.loss_probability << '\n';
  out << "commands=" << m.commands.size() << " committed=" << m.committed_count() << " failures=" << m.failure_count
      << " aborted=" << (m.aborted ? 1 : 0) << '\n';
  out << "latency_ms mean=" << fixed3(m.mean_latency_ms()) << " p50=" << fixed3(percentile(l, 50))
      << " p99=" << fixed3(percentile(l, 99)) << '\n';
  out << "tracks fast=" << tracks[0] << " classic=" << tracks[1] << " fallback=" << tracks[2]
      << " fast_share=" << fixed3(m.fast_share()) << '\n';
  out << "messages";
  for (const auto& [variant, n] : m.messages_by_variant) out << ' ' << variant << '=' << n;
  out << '\n';
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.trace_hash));
  out << "trace_hash=" << hash << " end_ms=" << format_ms(m.end_time) << '\n';
  out << "audit: " << r.audit.text() << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot write " + path);
  f << text;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string join_trace(const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  return text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic simulator and test harness for Raft and Fast Raft clusters", "fastraft"};
  app.require_subcommand(1);

  // sim
  auto* sim = app.add_subcommand("sim", "Run one seeded simulation and audit it");
  ExperimentFlags sim_flags;
  sim_flags.attach(*sim, kRunFlags);
  std::string sim_trace;
  std::string sim_metrics;
  sim->add_option("--trace", sim_trace, "Write the event trace to this file");
  sim->add_option("--metrics", sim_metrics, "Also write the metrics summary to this file");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Latency sweep over loss levels and protocols (CSV)");
  ExperimentFlags sweep_flags;
  sweep_flags.attach(*sweep, {{"nodes", "Cluster size (default 3)"},
                              {"commands", "Commands per run (default 200)"},
                              {"delay", "Delay model (default uniform:1:5)"},
                              {"target", "Target selection (default non-leader)"}});
  std::string sweep_levels = "0,0.01,0.02,0.04,0.06,0.08";
  std::string sweep_protocols = "raft,fastraft";
  std::size_t sweep_seeds = 30;
  std::uint64_t sweep_first_seed = 1;
  std::size_t sweep_threads = default_threads();
  std::string sweep_out;
  sweep->add_option("--loss-levels", sweep_levels, "Comma-separated loss fractions")->capture_default_str();
  sweep->add_option("--protocols", sweep_protocols, "Comma-separated protocols")->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "Seeds per grid point")->capture_default_str();
  sweep->add_option("--first-seed", sweep_first_seed, "Seed of the first run at each point")->capture_default_str();
  sweep->add_option("--threads", sweep_threads, "Worker threads (default: hardware concurrency)");
  sweep->add_option("--out", sweep_out, "CSV output file (default stdout)");

  // fuzz
  auto* fuzz = app.add_subcommand("fuzz", "Seeded safety campaign with random faults");
  FuzzOptions fuzz_opts;
  std::size_t fuzz_seeds = 1000;
  std::string fuzz_protocols = "raft,fastraft";
  std::string fuzz_out = "fuzz-failures";
  bool fuzz_no_faults = false;
  fuzz_opts.threads = default_threads();
  fuzz->add_option("--seeds", fuzz_seeds, "Number of seeds")->capture_default_str();
  fuzz->add_option("--first-seed", fuzz_opts.first_seed, "First seed")->capture_default_str();
  fuzz->add_option("--loss-max", fuzz_opts.loss_max, "Loss is drawn from [0, loss-max]")->capture_default_str();
  fuzz->add_flag("--no-faults", fuzz_no_faults, "Disable crashes and partitions");
  fuzz->add_option("--protocols", fuzz_protocols, "Protocols to draw from")->capture_default_str();
  fuzz->add_option("--out-dir", fuzz_out, "Reproducer directory for failing seeds")->capture_default_str();
  fuzz->add_option("--threads", fuzz_opts.threads, "Worker threads (default: hardware concurrency)");
  fuzz->add_option("--fast-quorum", fuzz_opts.mutations.fast_quorum_override,
                   "Test build: replace the fast quorum size");
  fuzz->add_flag("--skip-vote-log-check", fuzz_opts.mutations.skip_vote_log_check,
                 "Test build: grant votes without the log up-to-date check");
  fuzz->add_flag("--skip-commit-term-guard", fuzz_opts.mutations.skip_commit_term_guard,
                 "Test build: commit entries from earlier terms by counting replicas");
  fuzz->add_flag("--skip-election-noop", fuzz_opts.mutations.skip_election_noop,
                 "Test build: no no-op entry on election (raft)");

  // check-trace
  auto* check = app.add_subcommand("check-trace", "Replay a reproducer and compare traces byte for byte");
  std::string check_cfg;
  std::string check_trace;
  check->add_option("config", check_cfg, "Reproducer config (<seed>.cfg)")->required()->check(CLI::ExistingFile);
  check->add_option("trace", check_trace, "Expected trace (<seed>.trace)")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      Experiment e;
      sim_flags.apply(e);
      e.validate();
      const auto result = run_workload(e, sim_trace.empty() ? TraceMode::kHash : TraceMode::kRecord);
      std::ostringstream summary;
      print_summary(summary, e, result);
      out << summary.str();
      if (!sim_trace.empty()) write_text(sim_trace, join_trace(result.trace));
      if (!sim_metrics.empty()) write_text(sim_metrics, summary.str());
      return result.audit.ok() && !result.metrics.aborted ? kExitOk : kExitFailure;
    }

    if (sweep->parsed()) {
      SweepSpec spec;
      spec.base = default_sweep_experiment();
      sweep_flags.apply(spec.base);
      spec.base.validate();
      spec.loss_levels.clear();
      for (const auto& l : split_list(sweep_levels)) spec.loss_levels.push_back(parse_fraction(l));
      spec.protocols = parse_protocols(sweep_protocols);
      if (sweep_seeds == 0) throw UsageError("--seeds must be at least 1");
      spec.seeds = sweep_seeds;
      spec.first_seed = sweep_first_seed;
      spec.threads = sweep_threads;
      const auto rows = latency_sweep(spec);
      if (sweep_out.empty()) {
        write_sweep_csv(out, rows);
      } else {
        std::ostringstream csv;
        write_sweep_csv(csv, rows);
        write_text(sweep_out, csv.str());
      }
      bool ok = true;
      for (const auto& r : rows) {
        if (!r.flagged()) continue;
        ok = false;
        err << "flagged: loss=" << r.loss << " protocol=" << to_string(r.protocol) << " aborted=" << r.aborted_runs
            << " audit_failures=" << r.audit_failures << '\n';
      }
      return ok ? kExitOk : kExitFailure;
    }

    if (fuzz->parsed()) {
      if (fuzz_seeds == 0) throw UsageError("--seeds must be at least 1");
      fuzz_opts.seeds = fuzz_seeds;
      fuzz_opts.faults = !fuzz_no_faults;
      fuzz_opts.protocols = parse_protocols(fuzz_protocols);
      fuzz_opts.out_dir = fuzz_out;
      const auto report = run_fuzz(fuzz_opts);
      for (const auto& f : report.failures) out << "seed " << f.seed << ": " << f.reason << '\n';
      out << "runs=" << report.runs << " failures=" << report.failures.size() << '\n';
      if (!report.ok()) out << "reproducers written to " << fuzz_out << '\n';
      return report.ok() ? kExitOk : kExitFailure;
    }

    if (check->parsed()) {
      Experiment e;
      apply_key_values(e, read_key_values_file(check_cfg));
      const auto expected = read_text(check_trace);
      const auto replay = run_workload(e, TraceMode::kRecord);
      const auto actual = join_trace(replay.trace);
      out << "audit: " << replay.audit.text() << '\n';
      if (actual == expected) {
        out << "trace identical (" << replay.trace.size() << " lines)\n";
        return kExitOk;
      }
      std::istringstream a(actual);
      std::istringstream b(expected);
      std::string la;
      std::string lb;
      for (std::size_t line = 1;; ++line) {
        const bool more_a = static_cast<bool>(std::getline(a, la));
        const bool more_b = static_cast<bool>(std::getline(b, lb));
        if (!more_a && !more_b) break;
        if (more_a != more_b || la != lb) {
          out << "trace differs at line " << line << "\n  expected: " << (more_b ? lb : "<eof>")
              << "\n  replayed: " << (more_a ? la : "<eof>") << '\n';
          break;
        }
      }
      return kExitFailure;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidConfiguration& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fastraft::cli
