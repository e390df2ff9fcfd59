#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "matzoh/calculus.hpp"
#include "matzoh/errors.hpp"

using namespace matzoh;

namespace {

ScalarField sample_2d(std::size_t n, double a, double b,
                      const std::function<double(std::span<const double>)>& fn) {
  auto grid = testing::grid_nd(2, n, a, b);
  return ScalarField::sample(grid, testing::box_mask(grid), fn);
}

}  // namespace

TEST_SUITE("calculus") {

TEST_CASE("gradient of a constant vanishes everywhere") {
  const ScalarField f = sample_2d(9, 0.0, 1.0, [](std::span<const double>) { return 5.0; });
  const VectorField g = gradient(f);
  for (std::size_t node : f.mask().active_nodes()) {
    CHECK(g.at(node)[0] == 0.0);
    CHECK(g.at(node)[1] == 0.0);
  }
}

TEST_CASE("gradient is exact for affine fields, including boundary stencils") {
  const ScalarField f =
      sample_2d(9, -1.0, 1.0, [](std::span<const double> x) { return 3.0 * x[0] - 2.0 * x[1] + 0.5; });
  const VectorField g = gradient(f);
  for (std::size_t node : f.mask().active_nodes()) {
    CHECK(g.at(node)[0] == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(g.at(node)[1] == doctest::Approx(-2.0).epsilon(1e-13));
  }
}

TEST_CASE("gradient of sin on spacing 0.01 is second-order accurate") {
  auto grid = std::make_shared<Grid>(std::vector<std::size_t>{201, 5}, std::vector<double>{0.0, 0.0},
                                     std::vector<double>{0.01, 0.01});
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) { return std::sin(x[0]); });
  const VectorField g = gradient(f);
  double worst = 0.0;
  std::vector<double> x(2);
  for (std::size_t node : f.mask().interior_nodes()) {
    grid->coords(node, x);
    worst = std::max(worst, std::abs(g.at(node)[0] - std::cos(x[0])));
  }
  CHECK(worst <= 2e-5);
}

TEST_CASE("gradient is linear in the field") {
  const auto fa = [](std::span<const double> x) { return std::sin(x[0]) * x[1]; };
  const auto fb = [](std::span<const double> x) { return std::exp(x[1]) + x[0] * x[0]; };
  const ScalarField a = sample_2d(17, 0.0, 1.0, fa);
  const ScalarField b = sample_2d(17, 0.0, 1.0, fb);
  const ScalarField combo = sample_2d(17, 0.0, 1.0, [&](std::span<const double> x) {
    return 2.0 * fa(x) - 0.5 * fb(x);
  });
  const VectorField ga = gradient(a), gb = gradient(b), gc = gradient(combo);
  for (std::size_t node : a.mask().active_nodes()) {
    for (int c = 0; c < 2; ++c) {
      const double expect = 2.0 * ga.at(node)[std::size_t(c)] - 0.5 * gb.at(node)[std::size_t(c)];
      CHECK(gc.at(node)[std::size_t(c)] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("hessian is exact for quadratics") {
  const ScalarField f = sample_2d(11, -1.0, 1.0, [](std::span<const double> x) {
    return x[0] * x[1];
  });
  const SymmetricMatrixField h = hessian(f);
  for (std::size_t node : f.mask().interior_nodes()) {
    CHECK(h.entry(node, 0, 1) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(h.entry(node, 0, 0) == doctest::Approx(0.0).epsilon(1e-13));
  }

  const ScalarField r2 = sample_2d(11, -1.0, 1.0, [](std::span<const double> x) {
    return x[0] * x[0] + x[1] * x[1];
  });
  const SymmetricMatrixField h2 = hessian(r2);
  for (std::size_t node : r2.mask().interior_nodes()) {
    CHECK(h2.entry(node, 0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(h2.entry(node, 1, 1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(h2.entry(node, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("hessian of a smooth product stays within second-order tolerance") {
  auto grid = testing::grid_nd(2, 101, 0.0, 1.0);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return std::sin(x[0]) * std::cos(x[1]);
                                            });
  const SymmetricMatrixField h = hessian(f);
  double worst = 0.0;
  std::vector<double> x(2);
  for (std::size_t node : f.mask().interior_nodes()) {
    grid->coords(node, x);
    const double s0 = std::sin(x[0]), c0 = std::cos(x[0]);
    const double s1 = std::sin(x[1]), c1 = std::cos(x[1]);
    worst = std::max(worst, std::abs(h.entry(node, 0, 0) + s0 * c1));
    worst = std::max(worst, std::abs(h.entry(node, 1, 1) + s0 * c1));
    worst = std::max(worst, std::abs(h.entry(node, 0, 1) + c0 * s1));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("laplacian is exact for quadratics and harmonic polynomials") {
  const ScalarField r2 = sample_2d(11, -1.0, 1.0, [](std::span<const double> x) {
    return x[0] * x[0] + x[1] * x[1];
  });
  const ScalarField lap = laplacian(r2);
  for (std::size_t node : r2.mask().interior_nodes())
    CHECK(lap.value(node) == doctest::Approx(4.0).epsilon(1e-12));

  const ScalarField harmonic = sample_2d(11, -1.0, 1.0, [](std::span<const double> x) {
    return x[0] * x[0] - x[1] * x[1];
  });
  const ScalarField lap_h = laplacian(harmonic);
  for (std::size_t node : harmonic.mask().interior_nodes())
    CHECK(std::abs(lap_h.value(node)) <= 1e-11);
}

TEST_CASE("laplacian equals the hessian trace bitwise") {
  auto grid = testing::grid_nd(2, 33, 0.0, 1.0);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return std::sin(3.0 * x[0]) * std::exp(x[1]);
                                            });
  const ScalarField lap = laplacian(f);
  const SymmetricMatrixField h = hessian(f);
  for (std::size_t node : f.mask().active_nodes()) CHECK(lap.value(node) == h.trace(node));
}

TEST_CASE("laplacian converges at second order") {
  const auto worst_err = [](std::size_t n) {
    auto grid = testing::grid_1d(n, 0.0, 1.0);
    const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                              [](std::span<const double> x) {
                                                return std::sin(2.0 * x[0]);
                                              });
    const ScalarField lap = laplacian(f);
    double worst = 0.0;
    for (std::size_t node : f.mask().interior_nodes()) {
      const double x0 = grid->coords(node)[0];
      worst = std::max(worst, std::abs(lap.value(node) + 4.0 * std::sin(2.0 * x0)));
    }
    return worst;
  };
  const double ratio = worst_err(51) / worst_err(101);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("single-node derivative kernels agree with the field sweeps") {
  const ScalarField f = sample_2d(15, 0.0, 1.0, [](std::span<const double> x) {
    return std::sin(x[0] + 2.0 * x[1]);
  });
  const VectorField g = gradient(f);
  const SymmetricMatrixField h = hessian(f);
  for (std::size_t node : {std::size_t(16), std::size_t(100), std::size_t(200)}) {
    CHECK(derivative_at(f, node, 0) == g.at(node)[0]);
    CHECK(derivative_at(f, node, 1) == g.at(node)[1]);
    CHECK(second_derivative_at(f, node, 0) == h.entry(node, 0, 0));
    CHECK(second_derivative_at(f, node, 1) == h.entry(node, 1, 1));
  }
}

TEST_CASE("gradient requires at least three nodes per axis") {
  auto grid = std::make_shared<Grid>(std::vector<std::size_t>{2}, std::vector<double>{0.0},
                                     std::vector<double>{1.0});
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) { return x[0]; });
  CHECK_THROWS_AS(gradient(f), ConfigError);
}

TEST_CASE("interpolation is exact at nodes and for affine fields") {
  const ScalarField f = sample_2d(9, 0.0, 1.0, [](std::span<const double> x) {
    return 2.0 * x[0] - x[1] + 0.25;
  });
  // On a node.
  CHECK(interpolate(f, std::vector<double>{0.5, 0.5}) == doctest::Approx(0.75).epsilon(1e-14));
  // Strictly inside a cell: multilinear interpolation reproduces affine data.
  CHECK(interpolate(f, std::vector<double>{0.3125, 0.6875}) ==
        doctest::Approx(2.0 * 0.3125 - 0.6875 + 0.25).epsilon(1e-14));
}

TEST_CASE("cell-center interpolation averages the four corners") {
  const ScalarField f = sample_2d(5, 0.0, 1.0, [](std::span<const double> x) {
    return x[0] * x[1];
  });
  // Center of the first cell: corners 0, 0, 0, h*h -> mean h*h/4.
  const double h = 0.25;
  CHECK(interpolate(f, std::vector<double>{h / 2, h / 2}) ==
        doctest::Approx(h * h / 4.0).epsilon(1e-14));
}

TEST_CASE("interpolation outside the domain fails loudly") {
  const ScalarField f = sample_2d(9, 0.0, 1.0, [](std::span<const double> x) { return x[0]; });
  CHECK_THROWS_WITH_AS(interpolate(f, std::vector<double>{1.5, 0.5}),
                       doctest::Contains("outside domain"), Error);

  // A point whose cell touches exterior nodes is also outside.
  auto grid = testing::grid_nd(2, 21, -1.0, 1.0);
  auto disk = testing::predicate_mask(grid, [](std::span<const double> x) {
    return std::hypot(x[0], x[1]) <= 0.8;
  });
  const ScalarField g = ScalarField::sample(grid, disk,
                                            [](std::span<const double> x) { return x[0]; });
  CHECK_THROWS_WITH_AS(interpolate(g, std::vector<double>{0.79, 0.3}),
                       doctest::Contains("outside domain"), Error);
}

TEST_CASE("level points of a coordinate function lie on the plane") {
  const ScalarField f = sample_2d(21, 0.0, 1.0, [](std::span<const double> x) { return x[0]; });
  const auto points = level_set_points(f, 0.375);
  REQUIRE(!points.empty());
  for (const auto& p : points) CHECK(p[0] == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("level points of the distance field lie on the circle") {
  auto grid = testing::grid_nd(2, 101, -1.0, 1.0);  // spacing 0.02
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return std::hypot(x[0], x[1]);
                                            });
  const auto points = level_set_points(f, 0.5);
  REQUIRE(points.size() >= 40);
  for (const auto& p : points) CHECK(std::abs(std::hypot(p[0], p[1]) - 0.5) <= 5e-4);
}

TEST_CASE("levels outside the field range have no points") {
  const ScalarField f = sample_2d(9, 0.0, 1.0, [](std::span<const double> x) { return x[0]; });
  CHECK(level_set_points(f, 2.0).empty());
  CHECK(level_set_points(f, -1.0).empty());
}

TEST_CASE("level extraction commutes with adding a constant") {
  auto grid = testing::grid_nd(2, 41, -1.0, 1.0);
  auto mask = testing::box_mask(grid);
  const ScalarField f = ScalarField::sample(grid, mask, [](std::span<const double> x) {
    return std::hypot(x[0], x[1]);
  });
  std::vector<double> shifted(f.values().begin(), f.values().end());
  for (double& v : shifted) v += 7.25;
  const ScalarField g(grid, mask, shifted);

  const auto pf = level_set_points(f, 0.6);
  const auto pg = level_set_points(g, 0.6 + 7.25);
  REQUIRE(!pf.empty());
  REQUIRE(pf.size() == pg.size());
  // The emission order may legitimately differ when a node value sits
  // exactly on the level, so compare the two collections as point sets.
  auto nearest_gap = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  CHECK(nearest_gap(pf, pg) <= 1e-9);
  CHECK(nearest_gap(pg, pf) <= 1e-9);
}

TEST_CASE("crossing records interpolate consistently") {
  const ScalarField f = sample_2d(11, 0.0, 1.0, [](std::span<const double> x) {
    return x[0] + 0.3 * x[1];
  });
  const ScalarField other = sample_2d(11, 0.0, 1.0, [](std::span<const double> x) {
    return 2.0 * x[0] + x[1];
  });
  const double s = 0.47;
  for (const EdgeCrossing& c : level_crossings(f, s)) {
    const auto p = crossing_point(f.grid(), c);
    CHECK(interpolate(f, p) == doctest::Approx(s).epsilon(1e-10));
    CHECK(value_at_crossing(other, c) ==
          doctest::Approx(2.0 * p[0] + p[1]).epsilon(1e-10));
  }
}

}  // TEST_SUITE("calculus")
