// Serial reference vs OpenMP kernels. Both paths produce identical numbers;
// only the wall time differs.
#include "convexito/brownian.hpp"
#include "convexito/cone_grid.hpp"
#include "convexito/corpus.hpp"
#include "convexito/estimators.hpp"

#include <benchmark/benchmark.h>

namespace {

cvx::Execution mode(const benchmark::State& st) {
  return st.range(0) ? cvx::Execution::parallel : cvx::Execution::serial;
}

void BM_TraceEstimate(benchmark::State& st) {
  const auto f = cvx::Registry::builtin().get("power4_1d");
  const cvx::Vec x = cvx::from_values({1.0});
  for (auto _ : st) benchmark::DoNotOptimize(cvx::trace_estimate(f, x, 0.01, 200000, 7, mode(st)).mean);
}
BENCHMARK(BM_TraceEstimate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CompensatorPaths(benchmark::State& st) {
  const auto f = cvx::Registry::builtin().get("abs_1d");
  cvx::PathConfig cfg;
  cfg.n = 5000;
  cfg.steps = 500;
  for (auto _ : st)
    benchmark::DoNotOptimize(cvx::compensator_path_estimate(f, cvx::from_values({0.0}), cfg, mode(st)).mean);
}
BENCHMARK(BM_CompensatorPaths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CapArea(benchmark::State& st) {
  const auto grid = cvx::build_grid(3, 0.1);
  for (auto _ : st) benchmark::DoNotOptimize(cvx::cap_area_estimate(grid, 100000, 3, mode(st)).size());
}
BENCHMARK(BM_CapArea)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
