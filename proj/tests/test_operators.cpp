#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "matzoh/calculus.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/operators.hpp"

using namespace matzoh;

namespace {

Eigen::MatrixXd diag_4_1() {
  Eigen::MatrixXd a(2, 2);
  a << 4.0, 0.0, 0.0, 1.0;
  return a;
}

std::vector<Eigen::VectorXd> random_nonzero(int dim, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  while (static_cast<int>(out.size()) < n) {
    Eigen::VectorXd xi(dim);
    for (int d = 0; d < dim; ++d) xi[d] = gauss(rng);
    if (xi.norm() > 0.1) out.push_back(xi);
  }
  return out;
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("coefficient matrices of the built-in kinds") {
  const auto heat = QuasiLinearOperator::heat(2);
  CHECK((heat.coefficients(Eigen::Vector2d(0.3, -0.7)) - Eigen::MatrixXd::Identity(2, 2)).norm() ==
        0.0);
  CHECK((heat.coefficients(Eigen::Vector2d(0.0, 0.0)) - Eigen::MatrixXd::Identity(2, 2)).norm() ==
        0.0);

  const auto norm2 = QuasiLinearOperator::normalized_p_laplace(2, 2.0);
  CHECK((norm2.coefficients(Eigen::Vector2d(0.6, 0.8)) - Eigen::MatrixXd::Identity(2, 2)).norm() <=
        1e-15);

  const auto p3 = QuasiLinearOperator::p_laplace(2, 3.0);
  const Eigen::MatrixXd a = p3.coefficients(Eigen::Vector2d(1.0, 0.0));
  CHECK(a(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(a(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(a(0, 1)) <= 1e-15);

  const auto hl = QuasiLinearOperator::h_laplace(ConvexBody::ellipsoid(diag_4_1()));
  CHECK((hl.coefficients(Eigen::Vector2d(0.2, 0.9)) - diag_4_1()).norm() <= 1e-13);
}

TEST_CASE("coefficients are symmetric and elliptic for random gradients") {
  const std::vector<QuasiLinearOperator> ops = {
      QuasiLinearOperator::heat(2),
      QuasiLinearOperator::p_laplace(2, 1.5),
      QuasiLinearOperator::p_laplace(2, 3.0),
      QuasiLinearOperator::p_laplace(2, 4.5),
      QuasiLinearOperator::normalized_p_laplace(2, 3.0),
      QuasiLinearOperator::h_laplace(ConvexBody::ellipsoid(diag_4_1())),
  };
  for (const auto& op : ops) {
    for (const Eigen::VectorXd& xi : random_nonzero(2, 10, 61)) {
      const Eigen::MatrixXd a = op.coefficients(xi);
      CHECK((a - a.transpose()).norm() <= 1e-14 * std::max(1.0, a.norm()));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("non-heat kinds reject a vanishing gradient") {
  const auto p3 = QuasiLinearOperator::p_laplace(2, 3.0);
  CHECK_THROWS_WITH_AS(p3.coefficients(Eigen::Vector2d(0.0, 0.0)),
                       doctest::Contains("degenerate gradient"), Error);
  const auto hl = QuasiLinearOperator::h_laplace(ConvexBody::euclidean_ball(2));
  CHECK_THROWS_AS(hl.coefficients(Eigen::Vector2d(0.0, 0.0)), Error);
}

TEST_CASE("construction validates the exponent and the floor") {
  CHECK_THROWS_AS(QuasiLinearOperator::p_laplace(2, 1.0), ConfigError);
  CHECK_THROWS_AS(QuasiLinearOperator::p_laplace(2, 0.5), ConfigError);
  CHECK_THROWS_AS(QuasiLinearOperator::normalized_p_laplace(2, 0.9), ConfigError);
  auto op = QuasiLinearOperator::heat(2);
  CHECK_THROWS_AS(op.set_gradient_floor(0.0), ConfigError);
  CHECK_THROWS_AS(op.set_gradient_floor(-1.0), ConfigError);
  op.set_gradient_floor(1e-6);
  CHECK(op.gradient_floor() == 1e-6);
}

TEST_CASE("declared homogeneity degrees are recovered numerically") {
  const std::vector<double> sigmas = {0.5, 1.0, 2.0, 4.0, 8.0};
  const Eigen::Vector2d xi(0.3, 0.8);
  CHECK(std::abs(estimate_alpha(QuasiLinearOperator::heat(2), xi, sigmas)) <= 1e-8);
  CHECK(estimate_alpha(QuasiLinearOperator::p_laplace(2, 3.5), xi, sigmas) ==
        doctest::Approx(1.5).epsilon(1e-8));
  CHECK(std::abs(estimate_alpha(QuasiLinearOperator::normalized_p_laplace(2, 4.0), xi, sigmas)) <=
        1e-8);
  CHECK(std::abs(estimate_alpha(
            QuasiLinearOperator::h_laplace(ConvexBody::ellipsoid(diag_4_1())), xi, sigmas)) <=
        1e-8);
  CHECK(QuasiLinearOperator::p_laplace(2, 3.5).alpha() == doctest::Approx(1.5));
}

TEST_CASE("heat operator value of |x|^2 is 2N at interior nodes") {
  auto grid = testing::grid_nd(2, 21, -1.0, 1.0);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return x[0] * x[0] + x[1] * x[1];
                                            });
  const ScalarField q = apply_Q(QuasiLinearOperator::heat(2), f);
  for (std::size_t node : f.mask().interior_nodes())
    CHECK(q.value(node) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("heat operator equals the laplacian bitwise") {
  auto grid = testing::grid_nd(2, 33, 0.0, 1.0);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return std::sin(2.0 * x[0]) * std::cosh(x[1]);
                                            });
  const ScalarField q = apply_Q(QuasiLinearOperator::heat(2), f);
  const ScalarField lap = laplacian(f);
  for (std::size_t node : f.mask().active_nodes()) CHECK(q.value(node) == lap.value(node));
}

TEST_CASE("power-type operator on the paraboloid matches the closed form") {
  // For u = |x|^2/2: Du = x, D2u = I, so the operator value is
  // |x|^{p-2} (N + p - 2).
  auto grid = testing::grid_nd(2, 41, 0.1, 1.1);  // keep |Du| away from zero
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return 0.5 * (x[0] * x[0] + x[1] * x[1]);
                                            });
  const double p = 3.0;
  const ScalarField q = apply_Q(QuasiLinearOperator::p_laplace(2, p), f);
  double worst = 0.0;
  std::vector<double> x(2);
  for (std::size_t node : f.mask().interior_nodes()) {
    grid->coords(node, x);
    const double r = std::hypot(x[0], x[1]);
    worst = std::max(worst, std::abs(q.value(node) - std::pow(r, p - 2.0) * p));
  }
  CHECK(worst <= 1e-10);  // quadratic data: derivatives are exact
}

TEST_CASE("gradient-floor violations report the offending nodes") {
  auto grid = testing::grid_nd(2, 21, -1.0, 1.0);  // node at the origin
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return x[0] * x[0] + x[1] * x[1];
                                            });
  const auto p3 = QuasiLinearOperator::p_laplace(2, 3.0);
  CHECK_THROWS_WITH_AS(apply_Q(p3, f), doctest::Contains("node"), Error);
}

TEST_CASE("generalized gradient reduces to |Du|^2 for the heat kind") {
  auto grid = testing::grid_nd(2, 15, 0.0, 1.0);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) { return x[0]; });
  const ScalarField g = apply_G(QuasiLinearOperator::heat(2), f);
  for (std::size_t node : f.mask().active_nodes())
    CHECK(g.value(node) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("generalized gradient of the power operator at unit slope is p - 1") {
  auto grid = testing::grid_nd(2, 15, 0.0, 1.0);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) { return x[0]; });
  const ScalarField g = apply_G(QuasiLinearOperator::p_laplace(2, 3.0), f);
  for (std::size_t node : f.mask().interior_nodes())
    CHECK(g.value(node) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("generalized gradient of the anisotropic kind is twice the gauge energy") {
  // For Du = e1 and the ellipsoid body diag(4,1): Du . (A Du) = 4.
  auto grid = testing::grid_nd(2, 15, 0.0, 1.0);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) { return x[0]; });
  const auto hl = QuasiLinearOperator::h_laplace(ConvexBody::ellipsoid(diag_4_1()));
  const ScalarField g = apply_G(hl, f);
  for (std::size_t node : f.mask().interior_nodes())
    CHECK(g.value(node) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("generalized gradient equals the coefficient quadratic form pointwise") {
  auto grid = testing::grid_nd(2, 25, 0.2, 1.2);
  const ScalarField f = ScalarField::sample(grid, testing::box_mask(grid),
                                            [](std::span<const double> x) {
                                              return std::sin(x[0]) + 0.5 * x[1] * x[1];
                                            });
  const auto op = QuasiLinearOperator::p_laplace(2, 2.5);
  const ScalarField g = apply_G(op, f);
  const VectorField grad = gradient(f);
  for (std::size_t node : f.mask().interior_nodes()) {
    Eigen::Vector2d xi(grad.at(node)[0], grad.at(node)[1]);
    const double expect = xi.dot(op.coefficients(xi) * xi);
    CHECK(g.value(node) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("pointwise power operator agrees with the divergence form") {
  // sum a_ij(Du) u_ij versus the finite-difference divergence of
  // |Du|^{p-2} Du, compared away from the boundary where both are
  // second-order evaluations of the same smooth flux.
  auto grid = testing::grid_nd(2, 65, 0.0, 1.0);
  auto mask = testing::box_mask(grid);
  const ScalarField f = ScalarField::sample(grid, mask, [](std::span<const double> x) {
    return std::sin(x[0]) + 2.0 * x[1];
  });
  const double p = 3.0;
  const ScalarField q = apply_Q(QuasiLinearOperator::p_laplace(2, p), f);

  const VectorField grad = gradient(f);
  std::vector<std::vector<double>> flux(2, std::vector<double>(grid->size(), 0.0));
  for (std::size_t node : f.mask().active_nodes()) {
    const double w = std::pow(grad.norm2(node), p - 2.0);
    for (int c = 0; c < 2; ++c) flux[std::size_t(c)][node] = w * grad.at(node)[std::size_t(c)];
  }
  const ScalarField flux0(grid, mask, flux[0]);
  const ScalarField flux1(grid, mask, flux[1]);

  double worst = 0.0;
  for (std::size_t node : f.mask().interior_nodes()) {
    const auto idx = grid->unflatten(node);
    // Two layers in: interior nodes whose neighbors use centered stencils.
    if (idx[0] < 2 || idx[0] > 62 || idx[1] < 2 || idx[1] > 62) continue;
    const double div = derivative_at(flux0, node, 0) + derivative_at(flux1, node, 1);
    worst = std::max(worst, std::abs(q.value(node) - div));
  }
  CHECK(worst <= 1e-2);
}

}  // TEST_SUITE("operators")
