#include <benchmark/benchmark.h>

#include "esdelay/analysis.hpp"
#include "esdelay/experiments.hpp"
#include "esdelay/sim.hpp"

using namespace esdelay;

static void BM_StabilityConditions(benchmark::State& state) {
  const validated_problem p = example_problem("example3_2");
  for (auto _ : state) {
    const condition_values cv = stability_conditions(p, 0.25);
    benchmark::DoNotOptimize(cv.phi2[0]);
  }
}
BENCHMARK(BM_StabilityConditions);

static void BM_FindEpsStar(benchmark::State& state) {
  const validated_problem p = example_problem("example3_2");
  for (auto _ : state) {
    const eps_star_result r = find_eps_star(p);
    benchmark::DoNotOptimize(r.eps_star);
  }
}
BENCHMARK(BM_FindEpsStar);

static void BM_RefineUltimateBound(benchmark::State& state) {
  const validated_problem p = example_problem("example3_3");
  for (auto _ : state) {
    const refinement_result r = refine_ultimate_bound(p, 0.25, 1e-3, 1e-4);
    benchmark::DoNotOptimize(r.final_ub[0]);
  }
}
BENCHMARK(BM_RefineUltimateBound);

static void BM_ReproduceTable(benchmark::State& state) {
  for (auto _ : state) {
    const table_diff d = reproduce_table("table2");
    benchmark::DoNotOptimize(d.all_pass);
  }
}
BENCHMARK(BM_ReproduceTable);

static void BM_ContinuousSimulation(benchmark::State& state) {
  const validated_problem p = example_problem("example3_2");
  sim_config cfg;
  cfg.epsilon = 0.25;
  cfg.horizon = double(state.range(0));
  cfg.init_theta_hat = {0.5, -0.5};
  cfg.record_stride = 1u << 20;  // integration cost only
  std::size_t steps = 0;
  for (auto _ : state) {
    const sim_trace tr = simulate(p, cfg);
    benchmark::DoNotOptimize(tr.theta_hat[0].back());
    steps += std::size_t((cfg.horizon - tr.control_start) / (cfg.epsilon / 400.0));
  }
  state.SetItemsProcessed(int64_t(steps));
}
BENCHMARK(BM_ContinuousSimulation)->Arg(20)->Arg(80);

static void BM_SampledSimulation(benchmark::State& state) {
  const validated_problem p = example_problem("example4_2");
  sim_config cfg;
  cfg.epsilon = 0.1;
  cfg.horizon = double(state.range(0));
  cfg.init_theta_hat = {0.5, -0.5};
  cfg.record_stride = 1u << 20;
  for (auto _ : state) {
    const sim_trace tr = simulate(p, cfg);
    benchmark::DoNotOptimize(tr.theta_hat[0].back());
  }
}
BENCHMARK(BM_SampledSimulation)->Arg(50)->Arg(200);

static void BM_FundamentalSolution(benchmark::State& state) {
  for (auto _ : state) {
    const fundamental_solution_sample fs =
        fundamental_solution(0.5, [](double) { return 0.7; }, 0.0, 12.0, 1e-3);
    benchmark::DoNotOptimize(fs.x.back());
  }
}
BENCHMARK(BM_FundamentalSolution);

BENCHMARK_MAIN();
