#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "matzoh/calculus.hpp"
#include "matzoh/convex_body.hpp"
#include "matzoh/evolve.hpp"
#include "matzoh/grid.hpp"
#include "matzoh/invariance.hpp"
#include "matzoh/operators.hpp"

namespace {

using namespace matzoh;

std::shared_ptr<const Grid> square_grid(std::size_t n) {
  return std::make_shared<Grid>(std::vector<std::size_t>{n, n}, std::vector<double>{-1.0, -1.0},
                                std::vector<double>{2.0 / double(n - 1), 2.0 / double(n - 1)});
}

ScalarField bump_field(const std::shared_ptr<const Grid>& grid) {
  auto mask = std::make_shared<DomainMask>(DomainMask::box(grid));
  return ScalarField::sample(grid, mask, [](std::span<const double> x) {
    return std::exp(-(x[0] * x[0] + x[1] * x[1])) + 0.25 * x[0];
  });
}

void bench_gradient(benchmark::State& state) {
  const auto grid = square_grid(std::size_t(state.range(0)));
  const ScalarField field = bump_field(grid);
  for (auto _ : state) benchmark::DoNotOptimize(gradient(field));
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(grid->size()));
}
BENCHMARK(bench_gradient)->Arg(64)->Arg(256)->Arg(512);

void bench_hessian(benchmark::State& state) {
  const auto grid = square_grid(std::size_t(state.range(0)));
  const ScalarField field = bump_field(grid);
  for (auto _ : state) benchmark::DoNotOptimize(hessian(field));
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(grid->size()));
}
BENCHMARK(bench_hessian)->Arg(64)->Arg(256);

void bench_apply_q_heat(benchmark::State& state) {
  const auto grid = square_grid(std::size_t(state.range(0)));
  const ScalarField field = bump_field(grid);
  const auto op = QuasiLinearOperator::heat(2);
  for (auto _ : state) benchmark::DoNotOptimize(apply_Q(op, field));
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(grid->size()));
}
BENCHMARK(bench_apply_q_heat)->Arg(64)->Arg(256)->Arg(512);

void bench_apply_q_anisotropic(benchmark::State& state) {
  const auto grid = square_grid(std::size_t(state.range(0)));
  const ScalarField field = bump_field(grid);
  Eigen::MatrixXd a(2, 2);
  a << 4.0, 0.0, 0.0, 1.0;
  const auto op = QuasiLinearOperator::h_laplace(ConvexBody::ellipsoid(a));
  for (auto _ : state) benchmark::DoNotOptimize(apply_Q(op, field));
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(grid->size()));
}
BENCHMARK(bench_apply_q_anisotropic)->Arg(64)->Arg(256);

void bench_evolve_step(benchmark::State& state) {
  const auto grid = square_grid(std::size_t(state.range(0)));
  const ScalarField initial = bump_field(grid);
  const auto op = QuasiLinearOperator::heat(2);
  const BoundaryCondition bc = BoundaryCondition::dirichlet_from(initial);
  const double dt = 0.5 * cfl_dt(op, initial);
  ScalarField field = initial;
  for (auto _ : state) {
    field = step(field, op, bc, dt);
    benchmark::DoNotOptimize(field);
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(grid->size()));
}
BENCHMARK(bench_evolve_step)->Arg(64)->Arg(256)->Arg(512);

void bench_build_eta(benchmark::State& state) {
  const auto grid = square_grid(201);
  auto mask = std::make_shared<DomainMask>(DomainMask::box(grid));
  std::vector<ScalarField> snaps;
  for (int j = 0; j < 8; ++j) {
    const double t = 0.25 + 0.1 * double(j);
    snaps.push_back(ScalarField::sample(
        grid, mask,
        [t](std::span<const double> x) {
          const double r2 = x[0] * x[0] + x[1] * x[1];
          return std::exp(-r2 / (4.0 * t)) / (4.0 * 3.141592653589793 * t);
        },
        t));
  }
  const TimeSeriesField series(std::move(snaps));
  const std::size_t n_bins = std::size_t(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_eta(series, n_bins));
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(grid->size()) * 8);
}
BENCHMARK(bench_build_eta)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
