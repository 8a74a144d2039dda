#include "fastraft/log.hpp"

#include <algorithm>

namespace fastraft {

const LogEntry* ReplicatedLog::at(LogIndex index) const {
  const auto i = index.value();
  if (i == 0 || i > slots_.size()) return nullptr;
  const auto& slot = slots_[i - 1];
  return slot ? &*slot : nullptr;
}

Term ReplicatedLog::term_at(LogIndex index) const {
  const auto* entry = at(index);
  return entry ? entry->term : Term{0};
}

void ReplicatedLog::put(LogEntry entry) {
  const auto i = entry.index.value();
  if (i == 0) throw std::out_of_range("log index 0 is reserved");
  if (i > slots_.size()) slots_.resize(i);
  auto& slot = slots_[i - 1];
  if (slot) index_remove(*slot);
  index_add(entry);
  const bool tentative = entry.tentative();
  slot = std::move(entry);
  if (tentative) {
    if (i <= classic_end_.value()) classic_end_ = LogIndex{i - 1};
  } else if (i == classic_end_.value() + 1) {
    recompute_classic_end_from(LogIndex{i});
  }
}

void ReplicatedLog::erase(LogIndex index) {
  const auto i = index.value();
  if (i == 0 || i > slots_.size() || !slots_[i - 1]) return;
  index_remove(*slots_[i - 1]);
  slots_[i - 1].reset();
  if (i <= classic_end_.value()) classic_end_ = LogIndex{i - 1};
  while (!slots_.empty() && !slots_.back()) slots_.pop_back();
}

void ReplicatedLog::set_status(LogIndex index, EntryStatus status) {
  const auto i = index.value();
  if (i == 0 || i > slots_.size() || !slots_[i - 1]) throw std::out_of_range("set_status on empty slot");
  auto& entry = *slots_[i - 1];
  const bool was_tentative = entry.tentative();
  entry.status = status;
  if (was_tentative && !entry.tentative() && i == classic_end_.value() + 1) {
    recompute_classic_end_from(index);
  } else if (!was_tentative && entry.tentative() && i <= classic_end_.value()) {
    classic_end_ = LogIndex{i - 1};
  }
}

std::optional<LogIndex> ReplicatedLog::find_command(const Command& command) const {
  if (command.empty()) return std::nullopt;
  auto it = by_command_.find(command);
  if (it == by_command_.end()) return std::nullopt;
  return LogIndex{it->second};
}

std::vector<LogIndex> ReplicatedLog::find_all(const Command& command) const {
  std::vector<LogIndex> out;
  if (command.empty()) return out;
  auto [lo, hi] = by_command_.equal_range(command);
  for (auto it = lo; it != hi; ++it) out.emplace_back(it->second);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<LogEntry> ReplicatedLog::entries_between(LogIndex from, LogIndex to) const {
  std::vector<LogEntry> out;
  const auto lo = std::max<std::uint64_t>(from.value(), 1);
  const auto hi = std::min<std::uint64_t>(to.value(), slots_.size());
  for (auto i = lo; i <= hi; ++i) {
    if (slots_[i - 1]) out.push_back(*slots_[i - 1]);
  }
  return out;
}

void ReplicatedLog::index_add(const LogEntry& entry) {
  if (!entry.command.empty()) by_command_.emplace(entry.command, entry.index.value());
}

void ReplicatedLog::index_remove(const LogEntry& entry) {
  if (entry.command.empty()) return;
  auto [lo, hi] = by_command_.equal_range(entry.command);
  for (auto it = lo; it != hi; ++it) {
    if (it->second == entry.index.value()) {
      by_command_.erase(it);
      return;
    }
  }
}

void ReplicatedLog::recompute_classic_end_from(LogIndex start) {
  auto i = start.value();
  while (i <= slots_.size() && slots_[i - 1] && !slots_[i - 1]->tentative()) ++i;
  classic_end_ = LogIndex{i - 1};
}

}  // namespace fastraft
