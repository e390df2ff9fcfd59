#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace matzoh {

/// Deterministic pairwise (cascade) summation.  Used for every norm and
/// mean reported by the library so that reductions do not depend on a
/// parallel execution schedule and carry O(log n) rounding error.
double pairwise_sum(std::span<const double> v);

double mean(std::span<const double> v);

/// sqrt(mean(v_i^2)).
double rms(std::span<const double> v);

/// Median of |v_i| (NaN entries are skipped; 0 for an empty span).
double median_abs(std::span<const double> v);

/// Ordinary least squares line y ~ slope*x + intercept with optional
/// nonnegative weights.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Standard error of the slope estimate (0 when fewer than 3 points
  /// or an exact fit).
  double slope_stderr = 0.0;
  /// sqrt(weighted mean squared residual).
  double rms_residual = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

/// Least squares slope of y ~ slope*x through the origin.
double fit_through_origin(std::span<const double> x, std::span<const double> y);

/// Three-point finite-difference weights on possibly nonuniform
/// abscissas x0 < x1 < x2, exact for quadratics.
struct ThreePointStencil {
  double w0, w1, w2;
};

/// First-derivative weights evaluated at x[at] (at in {0,1,2}).
ThreePointStencil d1_weights3(double x0, double x1, double x2, int at);

/// Second-derivative weights (constant across the three abscissas).
ThreePointStencil d2_weights3(double x0, double x1, double x2);

/// Centered five-point first/second derivative on a uniform spacing h
/// (fourth-order accurate).
double d1_central5(const double* y, double h);
double d2_central5(const double* y, double h);

}  // namespace matzoh
