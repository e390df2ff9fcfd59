#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "matzoh/convex_body.hpp"
#include "matzoh/errors.hpp"

using namespace matzoh;

namespace {

Eigen::Vector2d v2(double a, double b) { return Eigen::Vector2d(a, b); }

Eigen::MatrixXd diag_4_1() {
  Eigen::MatrixXd a(2, 2);
  a << 4.0, 0.0, 0.0, 1.0;
  return a;
}

std::vector<Eigen::VectorXd> random_directions(int dim, int n, unsigned seed) {
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

TEST_SUITE("convex_body") {

TEST_CASE("support values of the built-in bodies") {
  const ConvexBody ball = ConvexBody::euclidean_ball(2);
  CHECK(ball.support(v2(3.0, 0.0)) == doctest::Approx(3.0).epsilon(1e-14));

  const ConvexBody ell = ConvexBody::ellipsoid(diag_4_1());
  CHECK(ell.support(v2(1.0, 0.0)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ell.support(v2(0.0, 1.0)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("support is 1-homogeneous, even, and satisfies the degree-1 identity") {
  const Eigen::MatrixXd b = (Eigen::MatrixXd(2, 2) << 1.0, 0.5, 0.5, -1.0).finished();
  const std::vector<ConvexBody> bodies = {
      ConvexBody::euclidean_ball(2),
      ConvexBody::ellipsoid(diag_4_1()),
      ConvexBody::perturbed_ball(2, 0.05, b),
  };
  for (const ConvexBody& body : bodies) {
    for (const Eigen::VectorXd& xi : random_directions(2, 12, 23)) {
      const double h = body.support(xi);
      for (double sigma : {0.5, 2.0, 10.0})
        CHECK(std::abs(body.support(sigma * xi) - sigma * h) <= 1e-12 * sigma * h);
      CHECK(body.support(-xi) == h);
      // Euler identity for degree-1 homogeneity: xi . Dh(xi) = h(xi).
      CHECK(std::abs(xi.dot(body.support_gradient(xi)) - h) <= 1e-12 * h);
    }
  }
}

TEST_CASE("evaluation at the origin is rejected") {
  const ConvexBody ball = ConvexBody::euclidean_ball(3);
  CHECK_THROWS_AS(ball.support(Eigen::VectorXd::Zero(3)), Error);
  CHECK_THROWS_AS(ball.dH(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("gauge energy derivatives of the ball are the identity map") {
  const ConvexBody ball = ConvexBody::euclidean_ball(2);
  const Eigen::VectorXd xi = v2(0.8, -0.6);
  CHECK((ball.dH(xi) - xi).norm() <= 1e-14);
  CHECK((ball.d2H(xi) - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-14);
  CHECK(ball.H(xi) == doctest::Approx(0.5 * xi.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("gauge energy derivatives of the ellipsoid body are the matrix map") {
  const ConvexBody ell = ConvexBody::ellipsoid(diag_4_1());
  CHECK((ell.dH(v2(0.0, 1.0)) - v2(0.0, 1.0)).norm() <= 1e-14);
  CHECK((ell.dH(v2(1.0, 0.0)) - v2(4.0, 0.0)).norm() <= 1e-14);
  for (const Eigen::VectorXd& xi : random_directions(2, 8, 31)) {
    CHECK((ell.dH(xi) - diag_4_1() * xi).norm() <= 1e-12 * xi.norm());
    CHECK((ell.d2H(xi) - diag_4_1()).norm() <= 1e-12);
  }
}

TEST_CASE("degree-2 Euler identity: xi . DH = 2H") {
  const Eigen::MatrixXd b = (Eigen::MatrixXd(2, 2) << 0.3, -0.2, -0.2, 0.9).finished();
  const std::vector<ConvexBody> bodies = {
      ConvexBody::euclidean_ball(2),
      ConvexBody::ellipsoid(diag_4_1()),
      ConvexBody::perturbed_ball(2, 0.04, b),
  };
  for (const ConvexBody& body : bodies) {
    for (const Eigen::VectorXd& xi : random_directions(2, 12, 37)) {
      const double lhs = xi.dot(body.dH(xi));
      const double rhs = 2.0 * body.H(xi);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    }
  }
}

TEST_CASE("analytic derivatives agree with finite differences of H at unit scale") {
  const Eigen::MatrixXd b = (Eigen::MatrixXd(2, 2) << 0.7, 0.1, 0.1, -0.4).finished();
  const ConvexBody body = ConvexBody::perturbed_ball(2, 0.05, b);
  for (const Eigen::VectorXd& raw : random_directions(2, 6, 41)) {
    const Eigen::VectorXd xi = raw / raw.norm();
    const Eigen::VectorXd g = body.dH(xi);
    const double step = 1e-6;
    for (int d = 0; d < 2; ++d) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
      e[d] = step;
      const double fd = (body.H(xi + e) - body.H(xi - e)) / (2.0 * step);
      CHECK(std::abs(g[d] - fd) <= 1e-6);
    }
  }
}

TEST_CASE("support hessian annihilates the radial direction") {
  const Eigen::MatrixXd b = (Eigen::MatrixXd(2, 2) << 0.5, 0.2, 0.2, -0.3).finished();
  const std::vector<ConvexBody> bodies = {
      ConvexBody::euclidean_ball(2),
      ConvexBody::ellipsoid(diag_4_1()),
      ConvexBody::perturbed_ball(2, 0.05, b),
  };
  for (const ConvexBody& body : bodies) {
    for (const Eigen::VectorXd& raw : random_directions(2, 8, 43)) {
      const Eigen::VectorXd nu = raw / raw.norm();
      CHECK((body.support_hessian(nu) * nu).norm() <= 1e-10);
    }
  }
}

TEST_CASE("boundary samples of the ball are unit vectors") {
  const ConvexBody ball = ConvexBody::euclidean_ball(2);
  const auto points = wulff_boundary(ball, 16);
  REQUIRE(points.size() == 16);
  for (const auto& p : points) CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boundary samples of the ellipsoid body satisfy the quadric equation") {
  const ConvexBody ell = ConvexBody::ellipsoid(diag_4_1());
  for (const auto& p : wulff_boundary(ell, 64))
    CHECK(std::abs(p[0] * p[0] / 4.0 + p[1] * p[1] - 1.0) <= 1e-10);
}

TEST_CASE("the first boundary sample direction is e1") {
  const ConvexBody ball = ConvexBody::euclidean_ball(3);
  const auto points = wulff_boundary(ball, 1);
  REQUIRE(points.size() == 1);
  CHECK(points[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(points[0][1]) <= 1e-12);
  CHECK(std::abs(points[0][2]) <= 1e-12);
}

TEST_CASE("uniform convexity check on the built-ins") {
  const C2PlusReport ball = check_C2_plus(ConvexBody::euclidean_ball(2), 64);
  CHECK(ball.pass);
  CHECK(ball.min_tangential_eigenvalue == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(ball.max_radial_residual <= 1e-10);

  const C2PlusReport ell = check_C2_plus(ConvexBody::ellipsoid(diag_4_1()), 64);
  CHECK(ell.pass);
  CHECK(ell.min_tangential_eigenvalue > 0.0);
}

TEST_CASE("a perturbation strong enough to break convexity is detected") {
  // h(theta) = 1 + eps cos(2 theta) on the unit circle: the tangential
  // curvature h + h'' = 1 - 3 eps cos(2 theta) first turns negative at
  // eps = 1/3.
  Eigen::MatrixXd b(2, 2);
  b << 1.0, 0.0, 0.0, -1.0;
  CHECK(check_C2_plus(ConvexBody::perturbed_ball(2, 0.05, b), 128).pass);
  CHECK(!check_C2_plus(ConvexBody::perturbed_ball(2, 0.5, b), 128).pass);
}

TEST_CASE("custom bodies fall back to finite-difference derivatives") {
  const ConvexBody custom = ConvexBody::custom(
      2, [](const Eigen::VectorXd& xi) { return xi.norm(); });
  const ConvexBody ball = ConvexBody::euclidean_ball(2);
  for (const Eigen::VectorXd& raw : random_directions(2, 6, 53)) {
    const Eigen::VectorXd xi = raw / raw.norm();
    CHECK(custom.support(xi) == doctest::Approx(ball.support(xi)).epsilon(1e-12));
    CHECK((custom.support_gradient(xi) - ball.support_gradient(xi)).norm() <= 1e-6);
    CHECK((custom.d2H(xi) - ball.d2H(xi)).norm() <= 1e-5);
  }
}

TEST_CASE("quasi-uniform directions have unit norm and lead with e1 off the sphere") {
  for (int dim : {1, 2, 3, 4}) {
    const auto dirs = unit_directions(dim, 12);
    REQUIRE(dirs.size() == 12);
    for (const auto& nu : dirs) CHECK(nu.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // 1D, 2D, and the generic sampler start at e1; the 3D Fibonacci
  // lattice avoids the poles and only degenerates to e1 for n = 1.
  for (int dim : {1, 2, 4}) {
    const auto dirs = unit_directions(dim, 7);
    CHECK(dirs[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(unit_directions(3, 1)[0][0] == doctest::Approx(1.0).epsilon(1e-12));
}

}  // TEST_SUITE("convex_body")
