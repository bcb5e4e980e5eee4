// Serial reference vs OpenMP Monte-Carlo round simulation.
#include <benchmark/benchmark.h>

#include <cmath>

#include "odsim/mc.h"
#include "odsim/parallel.h"
#include "odsim/rng.h"

namespace {

odsim::Categorical dirichlet(int size, odsim::Rng& rng) {
  std::vector<double> w(size);
  double total = 0.0;
  for (auto& x : w) total += (x = -std::log(1.0 - rng.uniform()));
  for (auto& x : w) x /= total;
  return odsim::Categorical(w);
}

struct Pair {
  odsim::Categorical p, q;
};

Pair make_pair() {
  odsim::Rng rng(7);
  odsim::Categorical p = dirichlet(16, rng);
  odsim::Categorical q = dirichlet(16, rng);
  return {std::move(p), std::move(q)};
}

constexpr long kRounds = 1L << 18;

void BM_Serial(benchmark::State& state) {
  const Pair pair = make_pair();
  for (auto _ : state) {
    auto s = odsim::mc::simulate_pair_serial(pair.p, pair.q, 4, kRounds, 1);
    benchmark::DoNotOptimize(s.emitted_total);
  }
  state.SetItemsProcessed(state.iterations() * kRounds);
}

void BM_Parallel(benchmark::State& state) {
  const Pair pair = make_pair();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto s = odsim::mc::simulate_pair_parallel(pair.p, pair.q, 4, kRounds, 1, threads);
    benchmark::DoNotOptimize(s.emitted_total);
  }
  state.SetItemsProcessed(state.iterations() * kRounds);
}

}  // namespace

BENCHMARK(BM_Serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Parallel)
    ->RangeMultiplier(2)
    ->Range(1, 8)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
