#include <benchmark/benchmark.h>

#include "hdnsm/bootstrap.hpp"
#include "hdnsm/simulation.hpp"

using namespace hdnsm;

namespace {

struct Fixture {
  Dataset data;
  TuningConfig cfg;
  RunGrids grids;
  EstimationContext ctx;

  Fixture() {
    DgpConfig dgp;
    dgp.n = 250;
    dgp.p = 100;
    dgp.seed = 7;
    data = simulate_dgp(dgp);
    grids = default_grids(data, cfg, std::vector<double>{0.25, 0.5, 0.75});
    ctx = prepare_context(data, grids, cfg, true, ExecMode::parallel);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void bm_prepare_context(benchmark::State& state) {
  const auto mode = static_cast<ExecMode>(state.range(0));
  Fixture& f = fixture();
  for (auto _ : state) {
    EstimationContext ctx = prepare_context(f.data, f.grids, f.cfg, true, mode);
    benchmark::DoNotOptimize(ctx.pi_mu);
  }
}

void bm_bootstrap(benchmark::State& state) {
  const auto mode = static_cast<ExecMode>(state.range(0));
  Fixture& f = fixture();
  MultiplierSpec spec;
  spec.B = 50;
  spec.seed = 3;
  for (auto _ : state) {
    BootstrapDraws draws = bootstrap_curves(f.ctx, spec, mode);
    benchmark::DoNotOptimize(draws.mu);
  }
}

}  // namespace

BENCHMARK(bm_prepare_context)
    ->Arg(static_cast<int>(ExecMode::serial))
    ->Arg(static_cast<int>(ExecMode::parallel))
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bm_bootstrap)
    ->Arg(static_cast<int>(ExecMode::serial))
    ->Arg(static_cast<int>(ExecMode::parallel))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
