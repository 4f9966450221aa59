#include <benchmark/benchmark.h>

#include "roledyn/interpretation.hpp"
#include "roledyn/synthetic.hpp"

namespace {

roledyn::SnapshotGraph random_snapshot(std::size_t edges) {
  auto set = roledyn::synth::random_temporal(edges, 1, 11);
  roledyn::BinOptions b;
  b.origin = 0.0;
  return bin_snapshots(set, b).at(1);
}

void BM_PageRank(benchmark::State& state) {
  const auto g = random_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::pagerank(g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PageRank)->RangeMultiplier(2)->Range(1 << 12, 1 << 16)->Complexity(benchmark::oN);

void BM_Betweenness(benchmark::State& state) {
  const auto g = random_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::betweenness_centrality(g));
}
BENCHMARK(BM_Betweenness)->RangeMultiplier(2)->Range(1 << 10, 1 << 13)->Unit(benchmark::kMillisecond);

void BM_Clustering(benchmark::State& state) {
  const auto g = random_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::clustering_coefficient(g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Clustering)->RangeMultiplier(2)->Range(1 << 12, 1 << 16)->Complexity(benchmark::oN);

}  // namespace
