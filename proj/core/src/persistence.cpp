#include "fastraft/persistence.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace fastraft {

std::string serialize_snapshot(const PersistentState& state) {
  std::string out = std::to_string(state.current_term.value());
  out += '|';
  out += state.voted_for ? std::to_string(state.voted_for->value()) : std::string("-");
  out += '\n';
  for (const auto& entry : state.log) {
    out += to_canonical(entry);
    out += '\n';
  }
  return out;
}

PersistentState parse_snapshot(std::string_view text) {
  PersistentState state;
  bool header = true;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      header = false;
      auto bar = line.find('|');
      if (bar == std::string_view::npos) throw FormatError("snapshot header must be term|votedFor");
      std::uint64_t term = 0;
      auto term_text = line.substr(0, bar);
      auto [p, ec] = std::from_chars(term_text.data(), term_text.data() + term_text.size(), term);
      if (ec != std::errc{} || p != term_text.data() + term_text.size() || term_text.empty())
        throw FormatError("bad snapshot term");
      state.current_term = Term{term};
      auto vote = line.substr(bar + 1);
      if (vote != "-") {
        std::uint32_t id = 0;
        auto [q, ec2] = std::from_chars(vote.data(), vote.data() + vote.size(), id);
        if (ec2 != std::errc{} || q != vote.data() + vote.size() || vote.empty())
          throw FormatError("bad snapshot votedFor");
        state.voted_for = NodeId{id};
      }
      continue;
    }
    if (line.empty()) continue;
    state.log.push_back(parse_canonical(line));
  }
  if (header) throw FormatError("empty snapshot");
  return state;
}

void write_snapshot_file(const std::filesystem::path& path, const PersistentState& state) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write snapshot " + tmp.string());
    out << serialize_snapshot(state);
  }
  std::filesystem::rename(tmp, path);
}

PersistentState read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read snapshot " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

}  // namespace fastraft
