#include <benchmark/benchmark.h>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/core/population.hpp"

namespace {

void BM_RngUniform(benchmark::State& state) {
  fluidrl::Rng rng(42);
  double acc = 0.0;
  for (auto _ : state) acc += rng.uniform();
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_RngUniform);

void BM_RngCategorical(benchmark::State& state) {
  fluidrl::Rng rng(42);
  std::vector<double> w{0.3, 0.175, 0.175, 0.175, 0.175};
  int acc = 0;
  for (auto _ : state) acc += rng.categorical(w);
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_RngCategorical);

void BM_ResolveSpawns(benchmark::State& state) {
  for (auto _ : state) {
    fluidrl::PopulationState pop(16, 16);
    pop.set_alive(1);
    pop.set_alive(2);
    fluidrl::resolve_spawns(pop, {1, 2});
    benchmark::DoNotOptimize(pop);
  }
}
BENCHMARK(BM_ResolveSpawns);

}  // namespace

BENCHMARK_MAIN();
