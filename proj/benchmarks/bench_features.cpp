#include <benchmark/benchmark.h>

#include "roledyn/features.hpp"
#include "roledyn/synthetic.hpp"

namespace {

roledyn::SnapshotGraph random_snapshot(std::size_t edges) {
  auto set = roledyn::synth::random_temporal(edges, 1, 7);
  roledyn::BinOptions b;
  b.origin = 0.0;
  return bin_snapshots(set, b).at(1);
}

void BM_LearnFeatures(benchmark::State& state) {
  const auto g = random_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::learn_features(g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LearnFeatures)->RangeMultiplier(2)->Range(1 << 12, 1 << 16)->Complexity(benchmark::oN);

void BM_BaseFeatures(benchmark::State& state) {
  const auto g = random_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::base_features(g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BaseFeatures)->RangeMultiplier(2)->Range(1 << 12, 1 << 16)->Complexity(benchmark::oN);

}  // namespace
