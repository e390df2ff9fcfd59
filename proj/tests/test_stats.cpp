#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "matzoh/stats.hpp"

using namespace matzoh;

TEST_SUITE("stats") {

TEST_CASE("pairwise sum matches extended-precision accumulation") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(10007);
  long double exact = 0.0L;
  for (double& x : v) {
    x = dist(rng);
    exact += static_cast<long double>(x);
  }
  CHECK(pairwise_sum(v) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-14));

  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  CHECK(pairwise_sum(std::vector<double>{3.5}) == 3.5);
}

TEST_CASE("mean and rms") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == doctest::Approx(2.5));
  CHECK(rms(v) == doctest::Approx(std::sqrt(30.0 / 4.0)));
}

TEST_CASE("median of absolute values skips NaN entries") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(median_abs(std::vector<double>{-3.0, 1.0, 2.0}) == doctest::Approx(2.0));
  CHECK(median_abs(std::vector<double>{nan, -3.0, nan, 1.0, 2.0}) == doctest::Approx(2.0));
  CHECK(median_abs(std::vector<double>{}) == 0.0);
}

TEST_CASE("line fit recovers an exact line with zero residual") {
  std::vector<double> x{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> y;
  for (double xi : x) y.push_back(-0.75 * xi + 2.25);
  const LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(-0.75).epsilon(1e-13));
  CHECK(fit.intercept == doctest::Approx(2.25).epsilon(1e-13));
  CHECK(fit.rms_residual <= 1e-13);
  CHECK(fit.slope_stderr <= 1e-12);
}

TEST_CASE("line fit standard error grows with scatter") {
  std::mt19937 rng(11);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(0.1 * i);
    y.push_back(2.0 * x.back() + noise(rng));
  }
  const LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK(fit.slope_stderr > 0.0);
  CHECK(fit.rms_residual > 0.0);
}

TEST_CASE("weighted line fit ignores zero-weight points") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  std::vector<double> y{1.0, 2.0, 3.0, 100.0};  // outlier
  std::vector<double> w{1.0, 1.0, 1.0, 0.0};
  const LineFit fit = fit_line(x, y, w);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("through-origin slope") {
  std::vector<double> x{1.0, 2.0, 3.0};
  std::vector<double> y{3.0, 6.0, 9.0};
  CHECK(fit_through_origin(x, y) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("three-point weights differentiate quadratics exactly on nonuniform abscissas") {
  const double x0 = 0.0, x1 = 0.3, x2 = 1.0;
  const auto q = [](double x) { return 2.0 * x * x - x + 1.0; };
  const auto dq = [](double x) { return 4.0 * x - 1.0; };
  const double y0 = q(x0), y1 = q(x1), y2 = q(x2);

  const double xs[3] = {x0, x1, x2};
  for (int at = 0; at < 3; ++at) {
    const ThreePointStencil w = d1_weights3(x0, x1, x2, at);
    const double d = w.w0 * y0 + w.w1 * y1 + w.w2 * y2;
    CHECK(d == doctest::Approx(dq(xs[at])).epsilon(1e-12));
  }
  const ThreePointStencil w2 = d2_weights3(x0, x1, x2);
  CHECK(w2.w0 * y0 + w2.w1 * y1 + w2.w2 * y2 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("five-point centered stencils are exact for quartics") {
  const double h = 0.1, c = 0.7;
  const auto f = [](double x) { return x * x * x * x - 2.0 * x * x + x; };
  double y[5];
  for (int i = 0; i < 5; ++i) y[i] = f(c + (i - 2) * h);
  CHECK(d1_central5(y, h) == doctest::Approx(4.0 * c * c * c - 4.0 * c + 1.0).epsilon(1e-11));
  CHECK(d2_central5(y, h) == doctest::Approx(12.0 * c * c - 4.0).epsilon(1e-10));
}

TEST_CASE("five-point stencils converge at fourth order on a smooth function") {
  const double c = 0.4;
  const auto err1 = [&](double h) {
    double y[5];
    for (int i = 0; i < 5; ++i) y[i] = std::sin(3.0 * (c + (i - 2) * h));
    return std::abs(d1_central5(y, h) - 3.0 * std::cos(3.0 * c));
  };
  const double ratio = err1(0.02) / err1(0.01);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

}  // TEST_SUITE("stats")
