// Microbenchmarks for the hot paths: chain construction, inverse evaluation,
// trace building (quadratic in steps), the exact-step ensemble runners, the
// K-diffusion, and the derivative-sum parametrization candidate.

#include <benchmark/benchmark.h>

#include <complex>

#include "slelab/diffusion.hpp"
#include "slelab/driver.hpp"
#include "slelab/loewner.hpp"
#include "slelab/martingales.hpp"
#include "slelab/natural_param.hpp"

using namespace slelab;

namespace {

DrivingPath bench_driver(std::size_t n_steps) {
  return sample_brownian_driver(1.0, 1.0 / static_cast<double>(n_steps), 0.75, 7);
}

void BM_BuildChain(benchmark::State& state) {
  const DrivingPath drv = bench_driver(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_chain(drv));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildChain)->Arg(1024)->Arg(8192);

void BM_EvaluateInverse(benchmark::State& state) {
  const DrivingPath drv = bench_driver(static_cast<std::size_t>(state.range(0)));
  const SlitChain chain = build_chain(drv);
  const cplx w(drv.values.back(), 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_inverse(chain, w));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvaluateInverse)->Arg(1024)->Arg(8192);

void BM_Trace(benchmark::State& state) {
  const DrivingPath drv = bench_driver(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(trace(drv));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Trace)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_ReversePointODE(benchmark::State& state) {
  const DrivingPath drv = bench_driver(1024);
  const DrivingPath rev = reverse_driver(drv, 1.0).full;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reverse_point(rev, cplx(0.0, 0.1)));
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_ReversePointODE);

void BM_ConservationEnsemble(benchmark::State& state) {
  const std::size_t paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(martingale_conservation_test(
        0.75, 1.0, cplx(0.0, 1.0), {0.5}, paths, 1e-3, 11, 1));
  }
  state.SetItemsProcessed(state.iterations() * paths * 500);
}
BENCHMARK(BM_ConservationEnsemble)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SimulateK(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_K(1.0, 1.0, 8.0, 1e-3, KRegime::weighted, 0.0, 13));
  }
  state.SetItemsProcessed(state.iterations() * 8000);
}
BENCHMARK(BM_SimulateK);

void BM_TauDerivativeSum(benchmark::State& state) {
  const DrivingPath drv = bench_driver(2048);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(tau_derivative_sum(drv, n));
  }
}
BENCHMARK(BM_TauDerivativeSum)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
