#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "matzoh/grid.hpp"

namespace matzoh {

/// Second-order finite-difference gradient at every non-exterior node:
/// centered where both axis neighbors are usable, one-sided
/// (three-point, second-order) at boundary nodes.  Exact for affine
/// fields.  Throws ConfigError("axis too small") when an axis has
/// fewer than 3 nodes.
VectorField gradient(const ScalarField& field);

/// Second-order symmetric Hessian.  Diagonal entries use the same
/// per-axis second-difference kernel as laplacian(); mixed partials are
/// composed first derivatives, which at interior nodes reduce to the
/// centered cross stencil.  Exact for quadratic fields.
SymmetricMatrixField hessian(const ScalarField& field);

/// Sum of per-axis second differences.  Bitwise equal to the trace of
/// hessian() because both run the identical kernels in axis order.
ScalarField laplacian(const ScalarField& field);

/// First derivative along one axis at one node (the gradient kernel).
double derivative_at(const ScalarField& field, std::size_t node, int axis);

/// Second derivative along one axis at one node (the laplacian kernel).
double second_derivative_at(const ScalarField& field, std::size_t node, int axis);

/// Multilinear interpolation.  The point must fall in a grid cell whose
/// 2^N corners are all non-exterior; otherwise throws
/// Error("outside domain").
double interpolate(const ScalarField& field, std::span<const double> point);

/// A grid edge (a,b) along one axis crossed by a level s, with the
/// crossing at (1-w)*x_a + w*x_b.  Degenerate "crossings" at nodes that
/// hit the level exactly are encoded with a == b and w == 0.
struct EdgeCrossing {
  std::size_t a = 0;
  std::size_t b = 0;
  double w = 0.0;
};

/// All crossings of the level {field == s} with grid edges between
/// non-exterior nodes (strict sign changes), plus non-exterior nodes
/// whose value equals s exactly.  Deterministic order.  Empty when s is
/// outside the field range.
std::vector<EdgeCrossing> level_crossings(const ScalarField& field, double s);

/// Interpolated value of another field sampled on the same grid at a
/// crossing point (linear along the edge, which agrees with multilinear
/// interpolation there).
double value_at_crossing(const ScalarField& field, const EdgeCrossing& c);

/// Physical coordinates of a crossing point.
std::vector<double> crossing_point(const Grid& grid, const EdgeCrossing& c);

/// Points on the level set {field == s}: the crossing points of
/// level_crossings().  Each returned point p satisfies
/// |interpolate(field, p) - s| <= eps_level with eps_level ~ spacing^2.
std::vector<std::vector<double>> level_set_points(const ScalarField& field, double s);

}  // namespace matzoh
