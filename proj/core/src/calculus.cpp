#include "matzoh/calculus.hpp"

#include <cmath>
#include <functional>

#include "matzoh/errors.hpp"
#include "matzoh/parallel.hpp"

namespace matzoh {

namespace {

void require_stencil_room(const Grid& grid) {
  for (std::size_t n : grid.shape())
    if (n < 3) throw ConfigError("axis too small: derivatives need at least 3 nodes per axis");
}

bool usable(const DomainMask& mask, const std::optional<std::size_t>& node) {
  return node && !mask.is_exterior(*node);
}

/// First derivative of an arbitrary node-indexed callable along `axis`.
/// Prefers the centered difference, then a second-order one-sided
/// stencil, then a first-order one-sided difference (still exact for
/// affine data).  Used directly for the gradient and recursively for
/// mixed second derivatives.
template <typename ValueAt>
double d1_generic(const Grid& grid, const DomainMask& mask, const ValueAt& value, std::size_t node,
                  int axis) {
  const double h = grid.spacing(axis);
  const auto prev = grid.neighbor(node, axis, -1);
  const auto next = grid.neighbor(node, axis, +1);
  const bool has_prev = usable(mask, prev);
  const bool has_next = usable(mask, next);
  if (has_prev && has_next) return (value(*next) - value(*prev)) / (2.0 * h);
  if (has_next) {
    const auto next2 = grid.neighbor(node, axis, +2);
    if (usable(mask, next2))
      return (-3.0 * value(node) + 4.0 * value(*next) - value(*next2)) / (2.0 * h);
    return (value(*next) - value(node)) / h;
  }
  if (has_prev) {
    const auto prev2 = grid.neighbor(node, axis, -2);
    if (usable(mask, prev2))
      return (3.0 * value(node) - 4.0 * value(*prev) + value(*prev2)) / (2.0 * h);
    return (value(node) - value(*prev)) / h;
  }
  throw Error("derivative: no usable stencil at node (domain too thin along axis)");
}

/// Second derivative kernel along one axis: centered where possible,
/// else a four-point second-order one-sided stencil, else the
/// three-point one-sided stencil that stays exact for quadratics.
template <typename ValueAt>
double d2_generic(const Grid& grid, const DomainMask& mask, const ValueAt& value, std::size_t node,
                  int axis) {
  const double h = grid.spacing(axis);
  const double h2 = h * h;
  const auto prev = grid.neighbor(node, axis, -1);
  const auto next = grid.neighbor(node, axis, +1);
  const bool has_prev = usable(mask, prev);
  const bool has_next = usable(mask, next);
  if (has_prev && has_next) return (value(*next) - 2.0 * value(node) + value(*prev)) / h2;
  if (has_next) {
    const auto n2 = grid.neighbor(node, axis, +2);
    if (!usable(mask, n2)) throw Error("derivative: no usable stencil at node");
    const auto n3 = grid.neighbor(node, axis, +3);
    if (usable(mask, n3))
      return (2.0 * value(node) - 5.0 * value(*next) + 4.0 * value(*n2) - value(*n3)) / h2;
    return (value(node) - 2.0 * value(*next) + value(*n2)) / h2;
  }
  if (has_prev) {
    const auto n2 = grid.neighbor(node, axis, -2);
    if (!usable(mask, n2)) throw Error("derivative: no usable stencil at node");
    const auto n3 = grid.neighbor(node, axis, -3);
    if (usable(mask, n3))
      return (2.0 * value(node) - 5.0 * value(*prev) + 4.0 * value(*n2) - value(*n3)) / h2;
    return (value(node) - 2.0 * value(*prev) + value(*n2)) / h2;
  }
  throw Error("derivative: no usable stencil at node");
}

}  // namespace

double derivative_at(const ScalarField& field, std::size_t node, int axis) {
  require_stencil_room(field.grid());
  auto value = [&](std::size_t n) { return field.value(n); };
  return d1_generic(field.grid(), field.mask(), value, node, axis);
}

double second_derivative_at(const ScalarField& field, std::size_t node, int axis) {
  require_stencil_room(field.grid());
  auto value = [&](std::size_t n) { return field.value(n); };
  return d2_generic(field.grid(), field.mask(), value, node, axis);
}

VectorField gradient(const ScalarField& field) {
  const Grid& grid = field.grid();
  const DomainMask& mask = field.mask();
  require_stencil_room(grid);
  VectorField out(field.grid_ptr(), field.mask_ptr());
  const auto& nodes = mask.active_nodes();
  auto value = [&](std::size_t n) { return field.value(n); };
  parallel_for(nodes.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t node = nodes[i];
      auto g = out.at(node);
      for (int k = 0; k < grid.dim(); ++k) g[static_cast<std::size_t>(k)] =
          d1_generic(grid, mask, value, node, k);
    }
  });
  return out;
}

SymmetricMatrixField hessian(const ScalarField& field) {
  const Grid& grid = field.grid();
  const DomainMask& mask = field.mask();
  require_stencil_room(grid);
  SymmetricMatrixField out(field.grid_ptr(), field.mask_ptr());
  const auto& nodes = mask.active_nodes();
  auto value = [&](std::size_t n) { return field.value(n); };
  parallel_for(nodes.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t node = nodes[i];
      for (int a = 0; a < grid.dim(); ++a) {
        out.entry(node, a, a) = d2_generic(grid, mask, value, node, a);
        for (int b = a + 1; b < grid.dim(); ++b) {
          // Mixed partial as the a-derivative of the b-derivative; at
          // interior nodes this is the centered cross stencil.
          auto inner = [&](std::size_t n) { return d1_generic(grid, mask, value, n, b); };
          out.entry(node, a, b) = d1_generic(grid, mask, inner, node, a);
        }
      }
    }
  });
  return out;
}

ScalarField laplacian(const ScalarField& field) {
  const Grid& grid = field.grid();
  const DomainMask& mask = field.mask();
  require_stencil_room(grid);
  std::vector<double> values(grid.size(), 0.0);
  const auto& nodes = mask.active_nodes();
  auto value = [&](std::size_t n) { return field.value(n); };
  parallel_for(nodes.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t node = nodes[i];
      double sum = 0.0;
      for (int k = 0; k < grid.dim(); ++k) sum += d2_generic(grid, mask, value, node, k);
      values[node] = sum;
    }
  });
  return ScalarField(field.grid_ptr(), field.mask_ptr(), std::move(values), field.time());
}

double interpolate(const ScalarField& field, std::span<const double> point) {
  const Grid& grid = field.grid();
  const DomainMask& mask = field.mask();
  const int dim = grid.dim();
  if (point.size() != static_cast<std::size_t>(dim))
    throw ConfigError("interpolate: point dimension mismatch");

  std::vector<std::size_t> base(static_cast<std::size_t>(dim));
  std::vector<double> w(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double t = (point[ku] - grid.origin()[ku]) / grid.spacing(k);
    const double top = static_cast<double>(grid.shape()[ku] - 1);
    if (!(t >= 0.0) || !(t <= top)) throw Error("outside domain: point leaves the grid");
    double cell = std::floor(t);
    if (cell >= top) cell = top - 1.0;  // point on the upper face uses the last cell
    base[ku] = static_cast<std::size_t>(cell);
    w[ku] = t - cell;
  }

  const std::size_t corners = std::size_t{1} << dim;
  double result = 0.0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim));
  for (std::size_t c = 0; c < corners; ++c) {
    double weight = 1.0;
    for (int k = 0; k < dim; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const bool high = (c >> ku) & 1u;
      idx[ku] = base[ku] + (high ? 1 : 0);
      weight *= high ? w[ku] : (1.0 - w[ku]);
    }
    const std::size_t node = grid.flatten(idx);
    if (mask.is_exterior(node)) throw Error("outside domain: cell touches exterior nodes");
    result += weight * field.value(node);
  }
  return result;
}

std::vector<EdgeCrossing> level_crossings(const ScalarField& field, double s) {
  const Grid& grid = field.grid();
  const DomainMask& mask = field.mask();
  std::vector<EdgeCrossing> out;
  for (std::size_t node : mask.active_nodes()) {
    if (field.value(node) == s) out.push_back({node, node, 0.0});
    for (int k = 0; k < grid.dim(); ++k) {
      const auto nb = grid.neighbor(node, k, +1);
      if (!usable(mask, nb)) continue;
      const double va = field.value(node);
      const double vb = field.value(*nb);
      if ((va - s) * (vb - s) < 0.0) out.push_back({node, *nb, (s - va) / (vb - va)});
    }
  }
  return out;
}

double value_at_crossing(const ScalarField& field, const EdgeCrossing& c) {
  if (c.a == c.b) return field.value(c.a);
  return (1.0 - c.w) * field.value(c.a) + c.w * field.value(c.b);
}

std::vector<double> crossing_point(const Grid& grid, const EdgeCrossing& c) {
  std::vector<double> xa = grid.coords(c.a);
  if (c.a == c.b) return xa;
  const std::vector<double> xb = grid.coords(c.b);
  for (std::size_t k = 0; k < xa.size(); ++k) xa[k] = (1.0 - c.w) * xa[k] + c.w * xb[k];
  return xa;
}

std::vector<std::vector<double>> level_set_points(const ScalarField& field, double s) {
  std::vector<std::vector<double>> points;
  for (const EdgeCrossing& c : level_crossings(field, s))
    points.push_back(crossing_point(field.grid(), c));
  return points;
}

}  // namespace matzoh
