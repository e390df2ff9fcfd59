#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/evolve.hpp"
#include "matzoh/grid.hpp"
#include "matzoh/operators.hpp"

using namespace matzoh;

namespace {

ScalarField constant_field(const std::shared_ptr<const Grid>& grid, double c, double t = 0.0) {
  return ScalarField::sample(grid, testing::box_mask(grid),
                             [c](std::span<const double>) { return c; }, t);
}

double node_sum(const ScalarField& f) {
  double s = 0.0;
  for (std::size_t node : f.mask().active_nodes()) s += f.value(node);
  return s;
}

}  // namespace

TEST_SUITE("evolve") {

TEST_CASE("stable step bound for the heat operator") {
  auto grid1 = testing::grid_1d(101, 0.0, 1.0);  // spacing 0.01
  const ScalarField f1 = constant_field(grid1, 0.0);
  CHECK(cfl_dt(QuasiLinearOperator::heat(1), f1) == doctest::Approx(5e-5).epsilon(1e-12));

  auto grid2 = testing::grid_nd(2, 26, 0.0, 1.0);  // spacing 0.04
  const ScalarField f2 = constant_field(grid2, 0.0);
  CHECK(cfl_dt(QuasiLinearOperator::heat(2), f2) ==
        doctest::Approx(0.04 * 0.04 / 4.0).epsilon(1e-12));

  CHECK(cfl_dt(QuasiLinearOperator::heat(1), f1, 0.5) == doctest::Approx(2.5e-5).epsilon(1e-12));
}

TEST_CASE("stable step bound tightens with the local gradient for power kinds") {
  // Du = e1 everywhere, so the largest coefficient eigenvalue of the
  // p = 3 operator is (p - 1)|Du|^{p-2} = 2.
  auto grid = testing::grid_nd(2, 21, 0.0, 1.0);  // spacing 0.05
  const ScalarField ramp = ScalarField::sample(grid, testing::box_mask(grid),
                                               [](std::span<const double> x) { return x[0]; });
  CHECK(cfl_dt(QuasiLinearOperator::p_laplace(2, 3.0), ramp) ==
        doctest::Approx(0.05 * 0.05 / (4.0 * 2.0)).epsilon(1e-10));
}

TEST_CASE("step bound rejects bad arguments and degenerate coefficients") {
  auto grid = testing::grid_nd(2, 11, 0.0, 1.0);
  const ScalarField flat = constant_field(grid, 3.0);
  CHECK_THROWS_AS(cfl_dt(QuasiLinearOperator::heat(2), flat, 0.0), ConfigError);
  CHECK_THROWS_AS(cfl_dt(QuasiLinearOperator::heat(2), flat, -0.2), ConfigError);
  CHECK_THROWS_AS(cfl_dt(QuasiLinearOperator::heat(3), flat), ConfigError);  // dimension mismatch
  // A flat field has no gradient anywhere, so gradient-dependent
  // coefficients vanish identically.
  CHECK_THROWS_WITH_AS(cfl_dt(QuasiLinearOperator::p_laplace(2, 3.0), flat),
                       doctest::Contains("degenerate operator"), Error);
}

TEST_CASE("constants are fixed points of the stepper") {
  auto grid = testing::grid_nd(2, 17, -1.0, 1.0);
  const ScalarField f = constant_field(grid, 4.75);
  EvolveConfig config;
  config.snapshot_times = {0.05, 0.1, 0.2};
  const TimeSeriesField series =
      run(f, QuasiLinearOperator::heat(2), BoundaryCondition::frozen(), config);
  for (const ScalarField& snap : series.snapshots())
    for (std::size_t node : snap.mask().active_nodes()) CHECK(snap.value(node) == 4.75);
}

TEST_CASE("lowest Dirichlet eigenmode decays at unit rate") {
  const double pi = std::numbers::pi;
  auto grid = testing::grid_1d(201, 0.0, pi);  // spacing pi/200
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return std::sin(x[0]);
                                             },
                                             0.0);
  EvolveConfig config;
  config.snapshot_times = {1.0};
  const TimeSeriesField series =
      run(u0, QuasiLinearOperator::heat(1),
          BoundaryCondition::dirichlet(std::vector<double>(grid->size(), 0.0)), config);
  const double err = testing::max_interior_error(series.snapshot(0),
                                                 [](std::span<const double> x) {
                                                   return std::exp(-1.0) * std::sin(x[0]);
                                                 });
  CHECK(err <= 1e-2);
  CHECK(series.times() == std::vector<double>{1.0});
  CHECK(series.snapshot(0).time() == 1.0);
}

TEST_CASE("moving Dirichlet data manufactures a linear drift solution") {
  // u(x, t) = t + x1^2 / 2 solves u_t = laplacian u with boundary data
  // drifting at unit rate; quadratic space data makes the spatial
  // discretization exact, so only rounding is left.
  auto grid = testing::grid_nd(2, 41, -1.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return 0.5 * x[0] * x[0];
                                             },
                                             0.0);
  EvolveConfig config;
  config.snapshot_times = {0.25, 0.5};
  const TimeSeriesField series =
      run(u0, QuasiLinearOperator::heat(2),
          BoundaryCondition::dirichlet_from(u0, [](double t) { return t; }), config);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.times()[i];
    const double err = testing::max_interior_error(series.snapshot(i),
                                                   [t](std::span<const double> x) {
                                                     return t + 0.5 * x[0] * x[0];
                                                   });
    CHECK(err <= 5e-3);
  }
}

TEST_CASE("snapshots between steps interpolate linearly in time") {
  // The drift solution is linear in t, so linear-in-time snapshot
  // interpolation reproduces it exactly even when the requested time is
  // not a step multiple.
  auto grid = testing::grid_nd(2, 21, -1.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return 0.5 * x[0] * x[0];
                                             },
                                             0.0);
  EvolveConfig config;
  config.dt = 7e-4;  // 0.1237 is not a multiple of this
  config.snapshot_times = {0.1237};
  const TimeSeriesField series =
      run(u0, QuasiLinearOperator::heat(2),
          BoundaryCondition::dirichlet_from(u0, [](double t) { return t; }), config);
  const double err = testing::max_interior_error(series.snapshot(0),
                                                 [](std::span<const double> x) {
                                                   return 0.1237 + 0.5 * x[0] * x[0];
                                                 });
  CHECK(err <= 1e-10);
}

TEST_CASE("stepping respects the discrete extremum principle") {
  auto grid = testing::grid_nd(2, 33, 0.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
                                             },
                                             0.0);
  const double lo = u0.min();
  const double hi = u0.max();
  const double slack = 1e-12 * (hi - lo);
  EvolveConfig config;
  config.snapshot_times = {0.01, 0.05, 0.1, 0.3};
  const TimeSeriesField series =
      run(u0, QuasiLinearOperator::heat(2), BoundaryCondition::frozen(), config);
  for (const ScalarField& snap : series.snapshots()) {
    CHECK(snap.min() >= lo - slack);
    CHECK(snap.max() <= hi + slack);
  }
}

TEST_CASE("insulated boundaries conserve the node sum") {
  auto grid = testing::grid_nd(2, 41, 0.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               const double dx = x[0] - 0.4;
                                               const double dy = x[1] - 0.6;
                                               return std::exp(-20.0 * (dx * dx + dy * dy));
                                             },
                                             0.0);
  double abs_sum = 0.0;
  for (std::size_t node : u0.mask().active_nodes()) abs_sum += std::abs(u0.value(node));
  EvolveConfig config;
  config.snapshot_times = {0.5, 1.0};
  const TimeSeriesField series =
      run(u0, QuasiLinearOperator::heat(2), BoundaryCondition::neumann(), config);
  for (const ScalarField& snap : series.snapshots())
    CHECK(std::abs(node_sum(snap) - node_sum(u0)) <= 1e-8 * abs_sum);
}

TEST_CASE("insulated boundaries are only available for the heat kind") {
  auto grid = testing::grid_nd(2, 11, 0.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) { return x[0]; }, 0.0);
  EvolveConfig config;
  config.snapshot_times = {0.01};
  CHECK_THROWS_AS(run(u0, QuasiLinearOperator::p_laplace(2, 3.0), BoundaryCondition::neumann(),
                      config),
                  ConfigError);
}

TEST_CASE("halving the step halves the time discretization error") {
  const double pi = std::numbers::pi;
  auto grid = testing::grid_1d(51, 0.0, pi);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return std::sin(x[0]);
                                             },
                                             0.0);
  const auto bc = BoundaryCondition::dirichlet(std::vector<double>(grid->size(), 0.0));
  const double T = 0.1;
  const auto solve = [&](int n_steps) {
    EvolveConfig config;
    config.dt = T / n_steps;
    config.snapshot_times = {T};
    return run(u0, QuasiLinearOperator::heat(1), bc, config).snapshot(0);
  };
  const ScalarField ref = solve(1024);
  const auto err_against_ref = [&](const ScalarField& f) {
    double worst = 0.0;
    for (std::size_t node : f.mask().interior_nodes())
      worst = std::max(worst, std::abs(f.value(node) - ref.value(node)));
    return worst;
  };
  const double e1 = err_against_ref(solve(64));
  const double e2 = err_against_ref(solve(128));
  CHECK(e1 / e2 >= 1.7);
  CHECK(e1 / e2 <= 2.3);
}

TEST_CASE("a single step advances the time tag and validates dt") {
  auto grid = testing::grid_1d(101, 0.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return x[0] * (1.0 - x[0]);
                                             },
                                             0.25);
  const auto op = QuasiLinearOperator::heat(1);
  const double bound = cfl_dt(op, u0);
  const ScalarField next = step(u0, op, BoundaryCondition::frozen(), 0.5 * bound);
  CHECK(next.time() == doctest::Approx(0.25 + 0.5 * bound).epsilon(1e-14));
  CHECK_THROWS_AS(step(u0, op, BoundaryCondition::frozen(), 1.5 * bound), ConfigError);
  CHECK_THROWS_AS(step(u0, op, BoundaryCondition::frozen(), 0.0), ConfigError);
}

TEST_CASE("frozen boundaries keep their initial values bitwise") {
  auto grid = testing::grid_nd(2, 15, 0.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return std::sin(5.0 * x[0] + x[1]);
                                             },
                                             0.0);
  EvolveConfig config;
  config.snapshot_times = {0.02};
  const TimeSeriesField series =
      run(u0, QuasiLinearOperator::heat(2), BoundaryCondition::frozen(), config);
  for (std::size_t node : u0.mask().boundary_nodes())
    CHECK(series.snapshot(0).value(node) == u0.value(node));
}

TEST_CASE("run validates its configuration") {
  auto grid = testing::grid_1d(51, 0.0, 1.0);
  const ScalarField u0 = constant_field(grid, 1.0, 0.5);
  const auto op = QuasiLinearOperator::heat(1);
  const auto bc = BoundaryCondition::frozen();
  EvolveConfig config;
  CHECK_THROWS_AS(run(u0, op, bc, config), ConfigError);  // no snapshot times
  config.snapshot_times = {0.6, 0.6};
  CHECK_THROWS_AS(run(u0, op, bc, config), ConfigError);  // not strictly increasing
  config.snapshot_times = {0.25};
  CHECK_THROWS_AS(run(u0, op, bc, config), ConfigError);  // before the initial time
  config.snapshot_times = {0.6};
  config.dt = 10.0 * cfl_dt(op, u0);
  CHECK_THROWS_AS(run(u0, op, bc, config), ConfigError);  // unstable fixed step
  config.dt.reset();
  config.cfl_safety = 1.5;
  CHECK_THROWS_AS(run(u0, op, bc, config), ConfigError);
}

TEST_CASE("non-finite values abort with the offending step index") {
  auto grid = testing::grid_1d(51, 0.0, 1.0);
  const ScalarField u0 = ScalarField::sample(grid, testing::box_mask(grid),
                                             [](std::span<const double> x) {
                                               return x[0] * (1.0 - x[0]);
                                             },
                                             0.0);
  // Boundary data turns into NaN partway through the march.
  const auto bc = BoundaryCondition::dirichlet_from(u0, [](double t) {
    return t > 0.05 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  });
  EvolveConfig config;
  config.snapshot_times = {0.2};
  try {
    run(u0, QuasiLinearOperator::heat(1), bc, config);
    FAIL("expected a numerical failure");
  } catch (const NumericalError& e) {
    CHECK(e.step_index() > 0);
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("Dirichlet data exposes its time profile") {
  auto grid = testing::grid_1d(11, 0.0, 1.0);
  std::vector<double> vals(grid->size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = double(i);
  const auto bc = BoundaryCondition::dirichlet(vals, [](double t) { return t * t; });
  CHECK(bc.kind() == BoundaryCondition::Kind::dirichlet);
  CHECK(bc.has_time_offset());
  CHECK(bc.value_at(0, 2.0) == doctest::Approx(0.0 + 4.0).epsilon(1e-15));
  CHECK(bc.value_at(10, 3.0) == doctest::Approx(10.0 + 9.0).epsilon(1e-15));
  const auto plain = BoundaryCondition::dirichlet(vals);
  CHECK_FALSE(plain.has_time_offset());
  CHECK(plain.value_at(10, 3.0) == 10.0);
}

}  // TEST_SUITE("evolve")
