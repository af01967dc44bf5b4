#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qnmag/fem.hpp"
#include "qnmag/nonlinear.hpp"

namespace {

using namespace qnmag;

const Discretization& benchmark_disc(int level) {
  static std::vector<Discretization> cache;
  if (cache.empty()) {
    const GeometryDescriptor g = GeometryDescriptor::benchmark();
    Mesh m = generate_benchmark_mesh(g);
    for (int l = 0; l < 3; ++l) {
      if (l) m = refine_uniform(m);
      cache.emplace_back(m);
    }
  }
  return cache.at(static_cast<std::size_t>(level));
}

void BM_InnerMaximize(benchmark::State& state) {
  const HysteresisParams p = HysteresisParams::defaults();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> hd(-400.0, 400.0);
  std::uniform_real_distribution<double> jd(-1.0, 1.0);
  std::vector<std::pair<Vec2, Vec2>> cases(256);
  for (auto& c : cases) c = {{hd(rng), hd(rng)}, {jd(rng), jd(rng)}};
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [h, jp] = cases[i++ % cases.size()];
    benchmark::DoNotOptimize(inner_maximize(p, 60.0, h, jp));
  }
}
BENCHMARK(BM_InnerMaximize);

void BM_AssembleStiffness(benchmark::State& state) {
  const Discretization& disc = benchmark_disc(static_cast<int>(state.range(0)));
  const auto mu = PermeabilityField::uniform(disc.num_elements(), Mat2::identity(kMu0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_stiffness(disc, mu));
  state.counters["dofs"] = static_cast<double>(disc.num_dofs());
}
BENCHMARK(BM_AssembleStiffness)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_SolveCg(benchmark::State& state) {
  const Discretization& disc = benchmark_disc(static_cast<int>(state.range(0)));
  const auto mu = PermeabilityField::uniform(disc.num_elements(), Mat2::identity(kMu0));
  const SparseSpdMatrix A = assemble_stiffness(disc, mu);
  const SourceField src = build_source_field(disc, GeometryDescriptor::benchmark(), 1e5);
  const MaterialModel iron = MaterialModel::arctan();
  const FieldProblem problem(disc, iron, src);
  const DofVector F = residual(problem, DofVector(disc.num_dofs(), 0.0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_cg(A, F, CgConfig{}));
  state.counters["dofs"] = static_cast<double>(disc.num_dofs());
}
BENCHMARK(BM_SolveCg)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Residual(benchmark::State& state) {
  const Discretization& disc = benchmark_disc(static_cast<int>(state.range(0)));
  const SourceField src = build_source_field(disc, GeometryDescriptor::benchmark(), 1e5);
  const bool hysteretic = state.range(1) != 0;
  const MaterialModel iron = hysteretic ? MaterialModel::hysteresis(HysteresisParams::defaults())
                                        : MaterialModel::arctan();
  HysteresisState hs(disc.num_elements(), iron.num_cells());
  const FieldProblem problem(disc, iron, src, hysteretic ? &hs : nullptr);
  const DofVector u(disc.num_dofs(), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(residual(problem, u));
}
BENCHMARK(BM_Residual)->ArgsProduct({{0, 1}, {0, 1}})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
