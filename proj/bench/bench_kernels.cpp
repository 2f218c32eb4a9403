// Serial reference path against the OpenMP path for each parallel kernel.
// The second argument selects the path: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "qchaos/echo.hpp"
#include "qchaos/execution.hpp"
#include "qchaos/openrotor.hpp"
#include "qchaos/partitions.hpp"
#include "qchaos/timescales.hpp"

using namespace qchaos;

namespace {

Execution path(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel, " + std::to_string(max_threads()) + " threads");
}

void BM_Refine(benchmark::State& state) {
  auto map = maps::MapSpec::baker();
  partitions::RefineOptions o;
  o.n_max = 12;
  o.samples = 200'000;
  o.execution = path(state);
  for (auto _ : state) benchmark::DoNotOptimize(partitions::refine(map, maps::GridPartition::generating_for(map), o));
  label(state);
}

void BM_EnsembleEcho(benchmark::State& state) {
  auto map = wave::KickedMap::torus(7.0, 4096, 8);
  echo::EnsembleOptions o;
  o.members = 16;
  o.execution = path(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(echo::ensemble_echo(map, echo::Perturbation::cos_theta, 6.0, 40, o));
  label(state);
}

void BM_Curves(benchmark::State& state) {
  timescales::CurveOptions o;
  o.q_list = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0};
  o.points = 20'000;
  o.execution = path(state);
  for (auto _ : state) benchmark::DoNotOptimize(timescales::timescale_curves(o));
  label(state);
}

void BM_RotorScan(benchmark::State& state) {
  openrotor::ScanOptions o;
  o.execution = path(state);
  for (auto _ : state) benchmark::DoNotOptimize(openrotor::relaxation_scaling_scan({64, 128, 256, 512}, o));
  label(state);
}

}  // namespace

BENCHMARK(BM_Refine)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleEcho)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Curves)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RotorScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
