#include "matzoh/stats.hpp"

#include <algorithm>
#include <cmath>

namespace matzoh {

namespace {

double pairwise_sum_impl(const double* v, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> v) { return pairwise_sum_impl(v.data(), v.size()); }

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double rms(std::span<const double> v) {
  if (v.empty()) return 0.0;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
  return std::sqrt(mean(sq));
}

double median_abs(std::span<const double> v) {
  std::vector<double> mags;
  mags.reserve(v.size());
  for (double x : v)
    if (std::isfinite(x)) mags.push_back(std::fabs(x));
  if (mags.empty()) return 0.0;
  const std::size_t mid = mags.size() / 2;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
  double hi = mags[mid];
  if (mags.size() % 2 == 0) {
    const double lo = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
    hi = 0.5 * (lo + hi);
  }
  return hi;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights) {
  LineFit out;
  const std::size_t n = std::min(x.size(), y.size());
  if (n == 0) return out;

  std::vector<double> w(n, 1.0);
  if (!weights.empty())
    for (std::size_t i = 0; i < n; ++i) w[i] = weights[i];

  std::vector<double> buf(n);
  auto wsum = [&](auto&& term) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = w[i] * term(i);
    return pairwise_sum(buf);
  };

  const double sw = wsum([&](std::size_t) { return 1.0; });
  if (sw <= 0.0) return out;
  const double mx = wsum([&](std::size_t i) { return x[i]; }) / sw;
  const double my = wsum([&](std::size_t i) { return y[i]; }) / sw;
  const double sxx = wsum([&](std::size_t i) { return (x[i] - mx) * (x[i] - mx); });
  const double sxy = wsum([&](std::size_t i) { return (x[i] - mx) * (y[i] - my); });
  if (sxx <= 0.0) {
    out.intercept = my;
    return out;
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;

  const double rss = wsum([&](std::size_t i) {
    const double r = y[i] - (out.slope * x[i] + out.intercept);
    return r * r;
  });
  out.rms_residual = std::sqrt(std::max(0.0, rss / sw));
  if (n > 2) {
    const double variance = rss / (static_cast<double>(n) - 2.0);
    out.slope_stderr = std::sqrt(std::max(0.0, variance / sxx));
  }
  return out;
}

double fit_through_origin(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n == 0) return 0.0;
  std::vector<double> num(n), den(n);
  for (std::size_t i = 0; i < n; ++i) {
    num[i] = x[i] * y[i];
    den[i] = x[i] * x[i];
  }
  const double d = pairwise_sum(den);
  if (d <= 0.0) return 0.0;
  return pairwise_sum(num) / d;
}

ThreePointStencil d1_weights3(double x0, double x1, double x2, int at) {
  const double h1 = x1 - x0;
  const double h2 = x2 - x1;
  const double h12 = h1 + h2;
  switch (at) {
    case 0:
      return {-(2.0 * h1 + h2) / (h1 * h12), h12 / (h1 * h2), -h1 / (h2 * h12)};
    case 2:
      return {h2 / (h1 * h12), -h12 / (h1 * h2), (h1 + 2.0 * h2) / (h2 * h12)};
    default:
      return {-h2 / (h1 * h12), (h2 - h1) / (h1 * h2), h1 / (h2 * h12)};
  }
}

ThreePointStencil d2_weights3(double x0, double x1, double x2) {
  const double h1 = x1 - x0;
  const double h2 = x2 - x1;
  const double h12 = h1 + h2;
  return {2.0 / (h1 * h12), -2.0 / (h1 * h2), 2.0 / (h2 * h12)};
}

double d1_central5(const double* y, double h) {
  return (y[0] - 8.0 * y[1] + 8.0 * y[3] - y[4]) / (12.0 * h);
}

double d2_central5(const double* y, double h) {
  return (-y[0] + 16.0 * y[1] - 30.0 * y[2] + 16.0 * y[3] - y[4]) / (12.0 * h * h);
}

}  // namespace matzoh
