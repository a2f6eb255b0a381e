#include <benchmark/benchmark.h>

#include "roughvol/experiments.hpp"
#include "roughvol/gaussfunc.hpp"
#include "roughvol/kernel.hpp"
#include "roughvol/simulate.hpp"

using namespace roughvol;

namespace {

ModelParams model(double eps) {
  ModelParams mp;
  mp.hurst = Hurst(0.3);
  mp.eps = eps;
  mp.vol_fn = VolFunction::sigmoid(0.15, 0.3, 3.0, 0.5);
  return mp;
}

void BM_Kernel(benchmark::State& state) {
  const KernelEval ke{Hurst(0.3)};
  double t = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_K(t, ke));
    t = t < 50.0 ? t * 1.37 : 0.01;
  }
}
BENCHMARK(BM_Kernel);

void BM_CovarianceCZ(benchmark::State& state) {
  const CovarianceEval ce{Hurst(0.3), state.range(0) ? CovRepr::Spectral : CovRepr::TimeDomain};
  double s = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cov_CZ(s, ce));
    s = s < 50.0 ? s * 1.37 : 0.01;
  }
}
BENCHMARK(BM_CovarianceCZ)->Arg(0)->Arg(1);

void BM_DBar(benchmark::State& state) {
  const KernelEval ke{Hurst(0.3)};
  const CovarianceEval ce{Hurst(0.3)};
  const auto f = VolFunction::sigmoid(0.1, 0.3, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(d_bar(f, ke, ce));
}
BENCHMARK(BM_DBar)->Unit(benchmark::kMillisecond);

void BM_SimulatePath(benchmark::State& state) {
  const ModelParams mp = model(1.0 / static_cast<double>(state.range(0)));
  const PathSimulator sim(mp, SimGrid::for_model(mp));
  auto ws = sim.make_workspace();
  PathBundle p;
  std::uint64_t i = 0;
  for (auto _ : state) {
    sim.simulate(1, i++, false, p, *ws);
    benchmark::DoNotOptimize(p.X.back());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulatePath)->Arg(10)->Arg(40)->Arg(80)->Unit(benchmark::kMicrosecond);

void BM_McPrice(benchmark::State& state) {
  const ModelParams mp = model(0.05);
  const Payoff ramp = Payoff::ramp(100, 130, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(mc_price(mp, ramp, state.range(0), 3).mean);
}
BENCHMARK(BM_McPrice)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
