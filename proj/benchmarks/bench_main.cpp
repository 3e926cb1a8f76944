#include <benchmark/benchmark.h>

#include <cmath>

#include <dlab/constructions.hpp>
#include <dlab/diffusion_sim.hpp>
#include <dlab/dirichlet_form.hpp>
#include <dlab/semigroup.hpp>

namespace {

using namespace dlab;

CoefficientSet rotating(const DiscreteSpace& s) {
  CoefficientSet co = CoefficientSet::trivial(s);
  co.a = EdgeField::symmetric_field(Vec::Constant(static_cast<Eigen::Index>(s.edge_count()), 1.5));
  co.theta1 = EdgeField::antisymmetric(Vec::Constant(static_cast<Eigen::Index>(s.edge_count()), 0.5));
  co.c = divergence(s, co.theta1);
  return co;
}

void BM_Assemble(benchmark::State& state) {
  const auto s = model_space(ModelKind::kCircle, static_cast<Index>(state.range(0)));
  const auto co = rotating(s);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(s, co).B.data());
}
BENCHMARK(BM_Assemble)->RangeMultiplier(2)->Range(16, 256);

void BM_SemigroupMatrix(benchmark::State& state) {
  const auto s = model_space(ModelKind::kCircle, static_cast<Index>(state.range(0)));
  const auto gen = generators(assemble(s, rotating(s)));
  const SemigroupEvaluator T(gen.L, s.measure());
  for (auto _ : state) benchmark::DoNotOptimize(T.matrix(0.5).data());
}
BENCHMARK(BM_SemigroupMatrix)->RangeMultiplier(2)->Range(16, 256);

void BM_SamplePaths(benchmark::State& state) {
  const auto s = model_space(ModelKind::kCircle, 64);
  const auto gen = generators(assemble(s, rotating(s)));
  SimConfig cfg;
  cfg.horizon = 1.0;
  cfg.n_paths = static_cast<std::size_t>(state.range(0));
  cfg.seed = 1;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_paths(gen.L, s.measure(), cfg).size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplePaths)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
