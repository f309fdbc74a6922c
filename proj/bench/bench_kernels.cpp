#include <benchmark/benchmark.h>

#include "mvb/branching.hpp"
#include "mvb/moments.hpp"

using namespace mvb;

namespace {

RateModel critical_constant() { return RateModel(Curve::constant(1.0), Curve::constant(1.0)); }

SimulationSpec ensemble_spec() {
  SimulationSpec s;
  s.dt = 0.01;
  s.record_times = {5.0};
  s.engine = Engine::kParticle;
  return s;
}

void BM_EnsembleSerial(benchmark::State& st) {
  const auto m = critical_constant();
  const auto dyn = DynamicsSpec::diffusion(Curve::constant(0.0));
  const auto spec = ensemble_spec();
  for (auto _ : st) benchmark::DoNotOptimize(run_ensemble_serial(m, dyn, spec, st.range(0), 1));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_EnsembleOpenMP(benchmark::State& st) {
  const auto m = critical_constant();
  const auto dyn = DynamicsSpec::diffusion(Curve::constant(0.0));
  const auto spec = ensemble_spec();
  for (auto _ : st) benchmark::DoNotOptimize(run_ensemble(m, dyn, spec, st.range(0), 1));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

GeneratorMatrix oscillator(int n) {
  RateModel m(Curve::gaussian_bump(1.0, 0.5, 0.0, 0.7071067811865476), Curve::polynomial({0.5, 0.0, 1.0}), 1.5);
  return build_generator(m, DynamicsSpec::diffusion(Curve::constant(0.0)), Grid(-8.0, 8.0, n));
}

void moments_bench(benchmark::State& st, bool parallel) {
  const auto gen = oscillator(static_cast<int>(st.range(0)));
  MomentOptions mo;
  mo.dt = 1e-2;
  mo.snapshot_dt = 0.5;
  mo.parallel = parallel;
  const Vec f = Vec::Ones(gen.size());
  for (auto _ : st) benchmark::DoNotOptimize(solve_moments(f, 6, 2.0, gen, 1.5, mo));
}

void BM_MomentsSerial(benchmark::State& st) { moments_bench(st, false); }
void BM_MomentsOpenMP(benchmark::State& st) { moments_bench(st, true); }

void BM_PrincipalEigentriple(benchmark::State& st) {
  const auto gen = oscillator(static_cast<int>(st.range(0)));
  SpectralOptions so;
  so.fit_H = false;
  for (auto _ : st) benchmark::DoNotOptimize(principal_eigentriple(gen, so));
}

void BM_Survival(benchmark::State& st) {
  const auto gen = oscillator(801);
  SurvivalOptions so;
  so.dt = 1e-2;
  so.snapshot_dt = 1.0;
  for (auto _ : st) benchmark::DoNotOptimize(solve_survival(10.0, gen, so));
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleOpenMP)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentsSerial)->Arg(401)->Arg(801)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentsOpenMP)->Arg(401)->Arg(801)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PrincipalEigentriple)->Arg(401)->Arg(801)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Survival)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
