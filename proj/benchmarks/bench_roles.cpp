#include <benchmark/benchmark.h>

#include "roledyn/nmf.hpp"
#include "roledyn/roles.hpp"

namespace {

Eigen::MatrixXd planted(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank) {
  roledyn::UnitRng rng(3);
  Eigen::MatrixXd G(rows, rank), F(rank, cols);
  for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = rng.next();
  for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = rng.next();
  return G * F;
}

void BM_Nmf(benchmark::State& state) {
  const auto V = planted(state.range(0), 20, 4);
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::nmf(V, 4, {200, 1e-12, 1}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nmf)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN);

void BM_MdlSelectRank(benchmark::State& state) {
  const auto V = planted(state.range(0), 16, 3);
  roledyn::MdlOptions o;
  o.restarts = 1;
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::mdl_select_rank(V, 1, 6, o));
}
BENCHMARK(BM_MdlSelectRank)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_Memberships(benchmark::State& state) {
  const auto V = planted(state.range(0), 16, 3);
  roledyn::RoleModel model;
  model.basis = planted(3, 16, 3);
  model.column_scale = Eigen::VectorXd::Ones(16);
  for (auto _ : state) benchmark::DoNotOptimize(roledyn::estimate_memberships(V, model));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Memberships)->RangeMultiplier(4)->Range(1024, 65536)->Complexity(benchmark::oN);

}  // namespace
