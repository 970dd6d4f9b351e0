#include <functional>
#include <vector>

#include <benchmark/benchmark.h>

#include "lchern/verifysuite.hpp"

using namespace lchern;

namespace {

UnitaryLoop bench_loop() {
  const UnitaryLoop base = exp_loop(winding_generator(std::vector<int>{1, -1}), random_unitary(2, 3));
  return UnitaryLoop(wobble_family(base, random_anti_hermitian(2, 4, 0.4), {}));
}

void BM_expm(benchmark::State& state) {
  const CMat x = random_anti_hermitian(static_cast<int>(state.range(0)), 1, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(expm(x));
}
BENCHMARK(BM_expm)->Arg(2)->Arg(4)->Arg(8);

void BM_iterated_integral(benchmark::State& state) {
  const CMat a = random_anti_hermitian(2, 5, 1.0), b = random_anti_hermitian(2, 6, 1.0);
  std::vector<std::function<CMat(double)>> fns;
  for (int i = 0; i < state.range(0); ++i)
    fns.push_back([a, b, i](double t) -> CMat { return i % 2 ? CMat(t * a) : CMat(b); });
  QuadratureSpec q;
  for (auto _ : state) benchmark::DoNotOptimize(iterated_integral(fns, q, 2));
}
BENCHMARK(BM_iterated_integral)->Arg(2)->Arg(4)->Arg(6);

void BM_bch_odd(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const UnitaryLoop g = bench_loop();
  const auto fields = random_fourier_fields(g, 2 * k + 1, 7);
  QuadratureSpec q;
  q.grid_t = 128;
  for (auto _ : state) benchmark::DoNotOptimize(bch_odd(g, k, fields, 30, q));
}
BENCHMARK(BM_bch_odd)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_bcs_even(benchmark::State& state) {
  const UnitaryLoop g = bench_loop();
  const ConnectionPath path = gauge_path_connection(g);
  const auto fields = random_fourier_fields(g, 1, 8);
  QuadratureSpec q;
  q.grid_t = 128;
  q.grid_s = 4;
  for (auto _ : state) benchmark::DoNotOptimize(bcs_even(g, path, 0, fields, 20, q));
}
BENCHMARK(BM_bcs_even)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
