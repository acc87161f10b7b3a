#include <limits>

#include <benchmark/benchmark.h>

#include "mmtc/harness.hpp"

using namespace mmtc;

namespace {

struct Setup {
  SyntheticInstance inst;
  MseEvaluator ev;
  SelectionPlan plan;

  Setup(int sensors, std::size_t rows, double varphi)
      : inst(make_instance(ExperimentConfig{}, sensors, varphi, trial_seed(1, 0))),
        ev(MseEvaluator::from(inst.model, inst.link)),
        plan(random_feasible_plan(inst.link.tx_power, rows, 4,
                                  std::numeric_limits<double>::infinity(), 7)) {}
};

void BM_Averaged(benchmark::State& state) {
  const Setup s(30, static_cast<std::size_t>(state.range(0)), 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(s.ev.averaged(s.plan));
}
BENCHMARK(BM_Averaged)->Arg(4)->Arg(8)->Arg(12)->Arg(16);

void BM_Bound(benchmark::State& state) {
  const Setup s(30, static_cast<std::size_t>(state.range(0)), 0.9);
  const int k = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(s.ev.bound(s.plan, k, 1e-15));
}
BENCHMARK(BM_Bound)->Args({12, 3})->Args({12, 5})->Args({30, 3})->Args({30, 5});

void BM_RowOptions(benchmark::State& state) {
  const Setup s(30, static_cast<std::size_t>(state.range(0)), 0.9);
  std::vector<RowOption> options;
  for (int i = 0; i < 30; ++i) {
    if (!s.plan.contains(i)) options.push_back({i, 4});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.ev.bound_row_options(s.plan, 0, options, 5, 1e-15));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(options.size()));
}
BENCHMARK(BM_RowOptions)->Arg(6)->Arg(12);

void BM_OptimizeSeparate(benchmark::State& state) {
  const Setup s(30, static_cast<std::size_t>(state.range(0)), 0.9);
  OptimizerConfig cfg;
  const SelectionPlan init = SelectionPlan::uniform(s.plan.selected, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize_separate(s.ev, s.inst.link.tx_power, cfg, init).value);
  }
}
BENCHMARK(BM_OptimizeSeparate)->Arg(3)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_OptimizeJoint(benchmark::State& state) {
  const Setup s(30, static_cast<std::size_t>(state.range(0)), 0.9);
  OptimizerConfig cfg;
  const SelectionPlan init = SelectionPlan::uniform(s.plan.selected, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize_joint(s.ev, s.inst.link.tx_power, cfg, init).value);
  }
}
BENCHMARK(BM_OptimizeJoint)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
