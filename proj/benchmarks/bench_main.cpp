#include <benchmark/benchmark.h>

#include "fastraft/harness.hpp"
#include "fastraft/log.hpp"
#include "fastraft/message.hpp"

namespace fastraft {
namespace {

void BM_LogAppend(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    ReplicatedLog log;
    for (std::uint64_t i = 1; i <= n; ++i) {
      log.put(LogEntry{LogIndex{i}, Term{1}, workload_command(i, 16), EntryStatus::kAcceptedClassic, NodeId{0}});
    }
    benchmark::DoNotOptimize(log.classic_end());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_LogAppend)->Arg(1000)->Arg(10000);

void BM_EncodeDecodeAppendEntries(benchmark::State& state) {
  AppendEntries ae{Term{3}, NodeId{0}, LogIndex{10}, Term{3}, {}, LogIndex{9}, std::nullopt};
  for (std::uint64_t i = 11; i < 11 + static_cast<std::uint64_t>(state.range(0)); ++i) {
    ae.entries.push_back(LogEntry{LogIndex{i}, Term{3}, workload_command(i, 16), EntryStatus::kAcceptedClassic,
                                  NodeId{1}});
  }
  const Message m = ae;
  for (auto _ : state) {
    const auto bytes = encode_payload(m);
    benchmark::DoNotOptimize(decode_payload("AppendEntries", bytes));
  }
}
BENCHMARK(BM_EncodeDecodeAppendEntries)->Arg(1)->Arg(32);

void BM_QuorumSizes(benchmark::State& state) {
  std::size_t acc = 0;
  for (auto _ : state) {
    for (std::size_t m = 1; m <= 100; ++m) acc += fast_quorum_size(m) + classic_quorum_size(m);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_QuorumSizes);

void BM_RunWorkload(benchmark::State& state) {
  auto exp = default_sweep_experiment();
  exp.node.protocol = state.range(0) == 0 ? Protocol::kRaft : Protocol::kFastRaft;
  exp.sim.loss_probability = 0.02;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_workload(exp, TraceMode::kOff).metrics.mean_latency_ms());
  }
}
BENCHMARK(BM_RunWorkload)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace fastraft

BENCHMARK_MAIN();
