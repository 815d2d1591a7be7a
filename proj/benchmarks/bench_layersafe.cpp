#include <benchmark/benchmark.h>

#include "layersafe/certify.hpp"
#include "layersafe/controller.hpp"
#include "layersafe/scenario.hpp"

namespace ls = layersafe;

namespace {

ls::Scenario study() { return ls::load_scenario(std::string(LAYERSAFE_SCENARIO_DIR) + "/paper_fig2.scn"); }

void BM_SafeVelocity(benchmark::State& state) {
  const ls::BarrierFn b(ls::ObstacleField({{ls::Vec2(-0.1, 0.3), 0.5}, {ls::Vec2(1.3, -0.3), 0.5}}));
  ls::Vec2 z(0.9, 0.3);
  const ls::Vec2 zd(-1.0, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ls::safe_velocity(b, 0.5, z, zd));
    z[1] += 1e-9;
  }
}
BENCHMARK(BM_SafeVelocity);

void BM_Rollout(benchmark::State& state) {
  ls::Scenario s = study();
  s.integrator.horizon = static_cast<double>(state.range(0));
  const auto pair = s.model();
  const auto law = s.law();
  const ls::Vec x0 = s.initial_state();
  for (auto _ : state) benchmark::DoNotOptimize(ls::integrate(pair, law, x0, s.integrator));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.integrator.steps()));
}
BENCHMARK(BM_Rollout)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_CertifySmallGrid(benchmark::State& state) {
  const ls::Scenario s = study();
  const ls::Grid g{s.certify.lower, s.certify.upper, {8, 6}};
  ls::CertifyOptions opts;
  opts.velocity = ls::VelocityMode::zero;
  opts.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ls::certify_initial_set(s, g, 5.0, opts));
}
BENCHMARK(BM_CertifySmallGrid)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
