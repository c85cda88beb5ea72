#include <benchmark/benchmark.h>

#include "nsw/generate.hpp"
#include "nsw/market.hpp"
#include "nsw/oracle.hpp"
#include "nsw/rng.hpp"
#include "nsw/stable.hpp"

namespace {

nsw::Instance make(int n, int m, std::uint64_t seed) {
  nsw::GenerateParams gp;
  gp.seed = seed;
  gp.n = n;
  gp.m = m;
  nsw::Instance inst = nsw::generate(gp);
  for (int tries = 0; inst.total_items() < n && tries < 64; ++tries) {
    gp.seed = nsw::Rng::derive(seed, 1000 + tries);
    inst = nsw::generate(gp);
  }
  return inst;
}

void bm_exact(benchmark::State& state) {
  const auto inst = make(static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(1)), 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(nsw::oracle::solve_exact(inst));
}
BENCHMARK(bm_exact)->Args({2, 2})->Args({3, 3})->Args({4, 4});

void bm_market_equilibrium(benchmark::State& state) {
  const auto inst = make(static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(1)), 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(nsw::market::scaling_algorithm(inst));
}
BENCHMARK(bm_market_equilibrium)->Args({2, 2})->Args({3, 3})->Args({4, 4});

void bm_eval_q(benchmark::State& state) {
  const auto inst = make(3, static_cast<int>(state.range(0)), 11);
  std::vector<double> w(inst.m);
  for (int i = 0; i < inst.m; ++i) w[i] = 0.5 + i;
  for (auto _ : state) benchmark::DoNotOptimize(nsw::stable::eval_q(inst, w));
}
BENCHMARK(bm_eval_q)->Arg(2)->Arg(4)->Arg(8);

void bm_randomized_round(benchmark::State& state) {
  const auto inst = make(3, 3, 13);
  nsw::Allocation x = nsw::Allocation::zeros(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j) x.x[a][i][j] = 1.0 / inst.n;
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(nsw::stable::randomized_round(inst, x, seed++));
}
BENCHMARK(bm_randomized_round);

}  // namespace

BENCHMARK_MAIN();
