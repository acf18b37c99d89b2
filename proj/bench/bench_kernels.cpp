// Serial vs OpenMP penalized gradient, plus the per-iteration solver kernels.

#include <benchmark/benchmark.h>

#include <map>

#include "hpen/experiments.hpp"
#include "hpen/geometry.hpp"
#include "hpen/penalty.hpp"
#include "hpen/solvers.hpp"

using namespace hpen;

namespace {

const RegressionInstance& instance(std::size_t m) {
  static std::map<std::size_t, RegressionInstance> cache;
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, generate_regression_instance(30, 30, m, 1)).first;
  return it->second;
}

void BM_PenalizedGradSerial(benchmark::State& state) {
  const auto& inst = instance(static_cast<std::size_t>(state.range(0)));
  const PenaltyParams pp{100.0, 1e-3};
  const Vec x = Vec::Constant(30, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(penalized_grad_serial(inst.obj, inst.poly, pp, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PenalizedGradParallel(benchmark::State& state) {
  const auto& inst = instance(static_cast<std::size_t>(state.range(0)));
  const PenaltyParams pp{100.0, 1e-3};
  const Vec x = Vec::Constant(30, 0.01);
  Vec g(30);
  for (auto _ : state) {
    penalized_grad(inst.obj, inst.poly, pp, x, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SagaStep(benchmark::State& state) {
  const auto& inst = instance(500);
  const PenaltyParams pp{1e4, 1e-3};
  SagaState st = saga_init(inst.obj, inst.poly, pp, Vec::Zero(30));
  Vec scratch(30);
  std::size_t j = 0;
  for (auto _ : state) {
    saga_step(inst.obj, inst.poly, pp, st, j, 1e-9, scratch);
    j = (j + 7) % 500;
  }
}

void BM_Dykstra(benchmark::State& state) {
  const auto& inst = instance(static_cast<std::size_t>(state.range(0)));
  const Vec x = Vec::Constant(30, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(project_polyhedron(x, inst.poly, 1e-8).point);
}

}  // namespace

BENCHMARK(BM_PenalizedGradSerial)->Arg(500)->Arg(1000)->Arg(10000);
BENCHMARK(BM_PenalizedGradParallel)->Arg(500)->Arg(1000)->Arg(10000);
BENCHMARK(BM_SagaStep);
BENCHMARK(BM_Dykstra)->Arg(50)->Arg(500);

BENCHMARK_MAIN();
