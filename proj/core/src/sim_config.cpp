#include "fastraft/sim_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fastraft {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    auto at = s.find(sep);
    parts.push_back(s.substr(0, at));
    if (at == std::string_view::npos) break;
    s.remove_prefix(at + 1);
  }
  return parts;
}

std::string join_nodes(const std::vector<NodeId>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i != 0) out += ',';
    out += std::to_string(nodes[i].value());
  }
  return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw InvalidConfiguration(std::string(key) + "=" + std::string(value) + ": " + std::string(why));
}

}  // namespace

DelayModel DelayModel::fixed_delay(SimDuration d) {
  DelayModel m;
  m.kind = Kind::kFixed;
  m.fixed = d;
  return m;
}

DelayModel DelayModel::uniform(SimDuration lo, SimDuration hi) {
  DelayModel m;
  m.kind = Kind::kUniform;
  m.min = lo;
  m.max = hi;
  return m;
}

bool PartitionWindow::separates(NodeId from, NodeId to) const {
  auto in = [](const std::vector<NodeId>& side, NodeId n) {
    return std::find(side.begin(), side.end(), n) != side.end();
  };
  return (in(side_a, from) && in(side_b, to)) || (in(side_b, from) && in(side_a, to));
}

void SimConfig::validate(const ClusterConfig& cluster) const {
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
    throw InvalidConfiguration("loss probability must lie in [0, 1]");
  if (event_budget == 0) throw InvalidConfiguration("event budget must be positive");
  switch (delay.kind) {
    case DelayModel::Kind::kFixed:
      if (delay.fixed.count() < 0) throw InvalidConfiguration("fixed delay must be non-negative");
      break;
    case DelayModel::Kind::kPerLink:
      for (const auto& [link, d] : delay.per_link) {
        if (!cluster.contains(link.first) || !cluster.contains(link.second))
          throw InvalidConfiguration("per-link delay names a node outside the cluster");
        if (d.count() < 0) throw InvalidConfiguration("per-link delay must be non-negative");
      }
      [[fallthrough]];
    case DelayModel::Kind::kUniform:
      if (delay.min.count() < 0 || delay.max < delay.min)
        throw InvalidConfiguration("uniform delay needs 0 <= min <= max");
      break;
  }
  for (const auto& p : partitions) {
    if (p.end <= p.start) throw InvalidConfiguration("partition window must end after it starts");
    if (p.side_a.empty() || p.side_b.empty()) throw InvalidConfiguration("partition sides must be non-empty");
    std::set<NodeId> seen;
    for (const auto* side : {&p.side_a, &p.side_b}) {
      for (auto n : *side) {
        if (!cluster.contains(n)) throw InvalidConfiguration("partition names a node outside the cluster");
        if (!seen.insert(n).second) throw InvalidConfiguration("partition sides must be disjoint");
      }
    }
  }
  std::map<NodeId, std::vector<const CrashWindow*>> by_node;
  for (const auto& c : crashes) {
    if (!cluster.contains(c.node)) throw InvalidConfiguration("crash names a node outside the cluster");
    if (c.restart && *c.restart <= c.crash) throw InvalidConfiguration("restart must come after crash");
    by_node[c.node].push_back(&c);
  }
  for (auto& [node, windows] : by_node) {
    std::sort(windows.begin(), windows.end(), [](auto* a, auto* b) { return a->crash < b->crash; });
    for (std::size_t i = 0; i + 1 < windows.size(); ++i) {
      if (!windows[i]->restart || *windows[i]->restart > windows[i + 1]->crash)
        throw InvalidConfiguration("overlapping crash windows for node " + std::to_string(node.value()));
    }
  }
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw InvalidConfiguration("line " + std::to_string(line_no) + ": expected key=value");
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

KeyValues read_key_values_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfiguration("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

SimDuration parse_ms(std::string_view text) {
  text = trim(text);
  double ms = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), ms);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty() || !std::isfinite(ms) || ms < 0)
    throw InvalidConfiguration("bad millisecond value '" + std::string(text) + "'");
  return from_ms(ms);
}

std::string format_ms(SimDuration d) {
  const auto us = d.count();
  std::string out = std::to_string(us / 1000);
  if (us % 1000 != 0) {
    auto frac = std::to_string(1000 + us % 1000).substr(1);
    while (frac.back() == '0') frac.pop_back();
    out += "." + frac;
  }
  return out;
}

double parse_fraction(std::string_view text) {
  text = trim(text);
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty() || !(v >= 0.0 && v <= 1.0))
    throw InvalidConfiguration("bad fraction '" + std::string(text) + "' (expected a value in [0, 1])");
  return v;
}

std::uint64_t parse_u64(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty())
    throw InvalidConfiguration("bad integer '" + std::string(text) + "'");
  return v;
}

std::vector<NodeId> parse_node_list(std::string_view text) {
  std::vector<NodeId> nodes;
  if (trim(text).empty()) return nodes;
  for (auto part : split(text, ',')) {
    auto v = parse_u64(part);
    if (v > UINT32_MAX) throw InvalidConfiguration("node id out of range");
    nodes.emplace_back(static_cast<std::uint32_t>(v));
  }
  return nodes;
}

bool apply_sim_key(SimConfig& config, std::string_view key, std::string_view value) {
  if (key == "seed") {
    config.seed = parse_u64(value);
  } else if (key == "loss") {
    config.loss_probability = parse_fraction(value);
  } else if (key == "delay") {
    // fixed:D | uniform:MIN:MAX | perlink:MIN:MAX (links via `link=`)
    auto parts = split(value, ':');
    if (parts[0] == "fixed" && parts.size() == 2) {
      config.delay.kind = DelayModel::Kind::kFixed;
      config.delay.fixed = parse_ms(parts[1]);
    } else if ((parts[0] == "uniform" || parts[0] == "perlink") && parts.size() == 3) {
      config.delay.kind = parts[0] == "uniform" ? DelayModel::Kind::kUniform : DelayModel::Kind::kPerLink;
      config.delay.min = parse_ms(parts[1]);
      config.delay.max = parse_ms(parts[2]);
    } else {
      bad(key, value, "expected fixed:D, uniform:MIN:MAX or perlink:MIN:MAX");
    }
  } else if (key == "link") {
    // FROM>TO:D
    auto colon = value.find(':');
    auto arrow = value.find('>');
    if (colon == std::string_view::npos || arrow == std::string_view::npos || arrow > colon)
      bad(key, value, "expected FROM>TO:MS");
    auto from = parse_node_list(value.substr(0, arrow));
    auto to = parse_node_list(value.substr(arrow + 1, colon - arrow - 1));
    if (from.size() != 1 || to.size() != 1) bad(key, value, "expected FROM>TO:MS");
    config.delay.per_link[{from[0], to[0]}] = parse_ms(value.substr(colon + 1));
  } else if (key == "partition") {
    // START:END:A,B,../C,D,..
    auto parts = split(value, ':');
    if (parts.size() != 3) bad(key, value, "expected START:END:A/B");
    auto sides = split(parts[2], '/');
    if (sides.size() != 2) bad(key, value, "expected two sides separated by '/'");
    PartitionWindow p;
    p.start = parse_ms(parts[0]);
    p.end = parse_ms(parts[1]);
    p.side_a = parse_node_list(sides[0]);
    p.side_b = parse_node_list(sides[1]);
    config.partitions.push_back(std::move(p));
  } else if (key == "crash") {
    // NODE:CRASH[:RESTART]
    auto parts = split(value, ':');
    if (parts.size() != 2 && parts.size() != 3) bad(key, value, "expected NODE:CRASH[:RESTART]");
    auto node = parse_node_list(parts[0]);
    if (node.size() != 1) bad(key, value, "expected a single node");
    CrashWindow c{node[0], parse_ms(parts[1]), std::nullopt};
    if (parts.size() == 3) c.restart = parse_ms(parts[2]);
    config.crashes.push_back(c);
  } else if (key == "persistence") {
    if (value != "0" && value != "1") bad(key, value, "expected 0 or 1");
    config.persistence = value == "1";
  } else if (key == "event_budget") {
    config.event_budget = parse_u64(value);
  } else if (key == "persist_dir") {
    config.persist_dir = std::filesystem::path(std::string(value));
  } else {
    return false;
  }
  return true;
}

KeyValues sim_config_to_key_values(const SimConfig& config) {
  KeyValues kv;
  kv.emplace_back("seed", std::to_string(config.seed));
  {
    std::ostringstream loss;
    loss.precision(17);
    loss << config.loss_probability;
    kv.emplace_back("loss", loss.str());
  }
  switch (config.delay.kind) {
    case DelayModel::Kind::kFixed:
      kv.emplace_back("delay", "fixed:" + format_ms(config.delay.fixed));
      break;
    case DelayModel::Kind::kUniform:
      kv.emplace_back("delay", "uniform:" + format_ms(config.delay.min) + ":" + format_ms(config.delay.max));
      break;
    case DelayModel::Kind::kPerLink:
      kv.emplace_back("delay", "perlink:" + format_ms(config.delay.min) + ":" + format_ms(config.delay.max));
      for (const auto& [link, d] : config.delay.per_link) {
        kv.emplace_back("link", std::to_string(link.first.value()) + ">" + std::to_string(link.second.value()) +
                                    ":" + format_ms(d));
      }
      break;
  }
  for (const auto& p : config.partitions) {
    kv.emplace_back("partition",
                    format_ms(p.start) + ":" + format_ms(p.end) + ":" + join_nodes(p.side_a) + "/" + join_nodes(p.side_b));
  }
  for (const auto& c : config.crashes) {
    std::string v = std::to_string(c.node.value()) + ":" + format_ms(c.crash);
    if (c.restart) v += ":" + format_ms(*c.restart);
    kv.emplace_back("crash", v);
  }
  kv.emplace_back("persistence", config.persistence ? "1" : "0");
  kv.emplace_back("event_budget", std::to_string(config.event_budget));
  if (config.persist_dir) kv.emplace_back("persist_dir", config.persist_dir->string());
  return kv;
}

}  // namespace fastraft
