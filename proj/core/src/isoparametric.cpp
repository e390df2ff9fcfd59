#include "matzoh/isoparametric.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "matzoh/calculus.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/invariance.hpp"
#include "matzoh/stats.hpp"

namespace matzoh {
namespace {

constexpr double kGradientFloor = 1e-8;
constexpr double kTiny = 1e-300;

/// Corner nodes and multilinear weights of the grid cell containing a point.
struct CellQuery {
  std::vector<std::size_t> nodes;
  std::vector<double> weights;
};

CellQuery locate_cell(const Grid& grid, const DomainMask& mask, std::span<const double> point) {
  const int dim = grid.dim();
  if (point.size() != static_cast<std::size_t>(dim))
    throw ConfigError("point dimension does not match the grid");

  std::vector<std::size_t> base(static_cast<std::size_t>(dim));
  std::vector<double> w(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double t = (point[ku] - grid.origin()[ku]) / grid.spacing(k);
    const double top = static_cast<double>(grid.shape()[ku] - 1);
    if (!(t >= 0.0) || !(t <= top)) throw Error("outside domain: point leaves the grid");
    double cell = std::floor(t);
    if (cell >= top) cell = top - 1.0;
    base[ku] = static_cast<std::size_t>(cell);
    w[ku] = t - cell;
  }

  const std::size_t corners = std::size_t{1} << dim;
  CellQuery query;
  query.nodes.resize(corners);
  query.weights.resize(corners);
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
    query.nodes[c] = node;
    query.weights[c] = weight;
  }
  return query;
}

std::vector<double> gather_interior(const ScalarField& field) {
  const auto& interior = field.mask().interior_nodes();
  std::vector<double> out;
  out.reserve(interior.size());
  for (const std::size_t node : interior) out.push_back(field.value(node));
  return out;
}

double spread(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

/// Normalized RMS of psi - F(phi) over interior nodes.  The denominator
/// max(range, RMS, floor) keeps constant targets well-posed, and the
/// absolute floor keeps identically-zero targets (an affine field under a
/// divergence-form operator) from turning rounding noise into an O(1)
/// residual.
constexpr double kResidualScaleFloor = 1e-8;

double normalized_fit_residual(const ScalarField& phi, std::span<const double> psi_interior,
                               const LevelFunctionFit& fit) {
  const auto& interior = phi.mask().interior_nodes();
  double acc = 0.0;
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const double d = psi_interior[i] - fit.eval(phi.value(interior[i]));
    acc += d * d;
  }
  const double num = std::sqrt(acc / static_cast<double>(interior.size()));
  const double denom = std::max({spread(psi_interior), rms(psi_interior), kResidualScaleFloor});
  return num / denom;
}

}  // namespace

double LevelFunctionFit::eval(double s) const {
  const std::size_t m = knots.size();
  if (m == 0) return 0.0;
  if (m == 1) return values[0];
  std::size_t hi = static_cast<std::size_t>(
      std::upper_bound(knots.begin(), knots.end(), s) - knots.begin());
  hi = std::clamp<std::size_t>(hi, 1, m - 1);
  const std::size_t lo = hi - 1;
  const double slope = (values[hi] - values[lo]) / (knots[hi] - knots[lo]);
  return values[lo] + slope * (s - knots[lo]);
}

double LevelFunctionFit::eval_derivative(double s) const {
  const std::size_t m = knots.size();
  if (m == 0) return 0.0;
  if (m == 1) return derivative.empty() ? 0.0 : derivative[0];
  if (s <= knots.front()) return derivative.front();
  if (s >= knots.back()) return derivative.back();
  std::size_t hi = static_cast<std::size_t>(
      std::upper_bound(knots.begin(), knots.end(), s) - knots.begin());
  hi = std::clamp<std::size_t>(hi, 1, m - 1);
  const std::size_t lo = hi - 1;
  const double w = (s - knots[lo]) / (knots[hi] - knots[lo]);
  return (1.0 - w) * derivative[lo] + w * derivative[hi];
}

LevelFunctionFit fit_level_function(const ScalarField& phi, const ScalarField& psi,
                                    std::size_t n_knots) {
  if (!(phi.grid() == psi.grid()))
    throw ConfigError("fit_level_function: fields live on different grids");
  const DomainMask& mask = phi.mask();
  const auto& interior = mask.interior_nodes();
  if (interior.size() < 2)
    throw ConfigError("fit_level_function: need at least two interior nodes");
  if (n_knots == 0) n_knots = default_n_bins(mask);
  if (n_knots < 2) throw ConfigError("fit_level_function: need at least two knots");

  double s_min = std::numeric_limits<double>::infinity();
  double s_max = -std::numeric_limits<double>::infinity();
  for (const std::size_t node : interior) {
    s_min = std::min(s_min, phi.value(node));
    s_max = std::max(s_max, phi.value(node));
  }
  if (!(s_max > s_min)) throw Error("fit_level_function: reference field is constant");

  const double width = (s_max - s_min) / static_cast<double>(n_knots);
  std::vector<std::size_t> counts(n_knots, 0);
  std::vector<double> sum_phi(n_knots, 0.0);
  std::vector<double> sum_psi(n_knots, 0.0);
  std::vector<double> psi_interior;
  psi_interior.reserve(interior.size());
  for (const std::size_t node : interior) {
    const double v = phi.value(node);
    auto bin = static_cast<std::size_t>((v - s_min) / width);
    bin = std::min(bin, n_knots - 1);
    counts[bin] += 1;
    sum_phi[bin] += v;
    sum_psi[bin] += psi.value(node);
    psi_interior.push_back(psi.value(node));
  }

  const std::size_t empty =
      static_cast<std::size_t>(std::count(counts.begin(), counts.end(), std::size_t{0}));
  if (5 * empty > n_knots)
    throw Error("insufficient level resolution: " + std::to_string(empty) + " of " +
                std::to_string(n_knots) + " level bins are empty");

  LevelFunctionFit fit;
  for (std::size_t b = 0; b < n_knots; ++b) {
    if (counts[b] == 0) continue;
    const double n = static_cast<double>(counts[b]);
    fit.knots.push_back(sum_phi[b] / n);
    fit.values.push_back(sum_psi[b] / n);
  }

  const std::size_t m = fit.knots.size();
  fit.derivative.resize(m, 0.0);
  if (m == 2) {
    const double slope = (fit.values[1] - fit.values[0]) / (fit.knots[1] - fit.knots[0]);
    fit.derivative[0] = fit.derivative[1] = slope;
  } else if (m >= 3) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t lo = (i == 0) ? 0 : (i == m - 1 ? m - 3 : i - 1);
      const int at = static_cast<int>(i - lo);
      const ThreePointStencil w =
          d1_weights3(fit.knots[lo], fit.knots[lo + 1], fit.knots[lo + 2], at);
      fit.derivative[i] =
          w.w0 * fit.values[lo] + w.w1 * fit.values[lo + 1] + w.w2 * fit.values[lo + 2];
    }
  }

  fit.residual = normalized_fit_residual(phi, psi_interior, fit);
  return fit;
}

IsoparametricVerdict isoparametric_residual(const ScalarField& phi, const QuasiLinearOperator& op,
                                            std::size_t n_knots, double tol_iso) {
  if (!(tol_iso > 0.0)) throw ConfigError("isoparametric_residual: tolerance must be positive");
  const ScalarField g_of_phi = apply_G(op, phi);
  const ScalarField q_of_phi = apply_Q(op, phi);

  IsoparametricVerdict verdict;
  verdict.tolerance = tol_iso;
  verdict.f_fit = fit_level_function(phi, g_of_phi, n_knots);
  verdict.g_fit = fit_level_function(phi, q_of_phi, n_knots);
  verdict.pass = verdict.f_fit.residual <= tol_iso && verdict.g_fit.residual <= tol_iso;

  if (op.kind() == QuasiLinearOperator::Kind::h_laplace) {
    // Euler's relation makes the gradient invariant equal 2 H(D phi); check
    // that an independent evaluation of 2 H agrees with the fitted f.
    const ConvexBody& body = op.body();
    const VectorField grad = gradient(phi);
    const auto& interior = phi.mask().interior_nodes();
    std::vector<double> two_h(interior.size(), 0.0);
    Eigen::VectorXd xi(phi.grid().dim());
    for (std::size_t i = 0; i < interior.size(); ++i) {
      const auto g = grad.at(interior[i]);
      for (int k = 0; k < phi.grid().dim(); ++k) xi[k] = g[static_cast<std::size_t>(k)];
      two_h[i] = (xi.norm() < op.gradient_floor()) ? 0.0 : 2.0 * body.H(xi);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < interior.size(); ++i) {
      const double d = two_h[i] - verdict.f_fit.eval(phi.value(interior[i]));
      acc += d * d;
    }
    const double num = std::sqrt(acc / static_cast<double>(interior.size()));
    const double denom = std::max({spread(two_h), rms(two_h), kTiny});
    verdict.h_consistency = num / denom;
    verdict.pass = verdict.pass && verdict.h_consistency <= tol_iso;
  }
  return verdict;
}

std::string to_string(SurfaceType type) {
  switch (type) {
    case SurfaceType::sphere: return "sphere";
    case SurfaceType::spherical_cylinder: return "spherical_cylinder";
    case SurfaceType::hyperplane: return "hyperplane";
    case SurfaceType::wulff_sphere: return "wulff_sphere";
    case SurfaceType::wulff_cylinder: return "wulff_cylinder";
    case SurfaceType::unknown: return "unknown";
  }
  return "unknown";
}

Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& nu) {
  const auto n = nu.size();
  if (n <= 1) return Eigen::MatrixXd(n, 0);
  Eigen::MatrixXd seed(n, n);
  seed.col(0) = nu;
  seed.rightCols(n - 1) = Eigen::MatrixXd::Identity(n, n).leftCols(n - 1);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(seed);
  const Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - 1);
}

FieldDerivatives::FieldDerivatives(const ScalarField& field)
    : field_(field), grad_(gradient(field)), hess_(hessian(field)) {}

Eigen::VectorXd FieldDerivatives::gradient_at(std::size_t node) const {
  const auto g = grad_.at(node);
  Eigen::VectorXd out(dim());
  for (int k = 0; k < dim(); ++k) out[k] = g[static_cast<std::size_t>(k)];
  return out;
}

Eigen::MatrixXd FieldDerivatives::hessian_at(std::size_t node) const {
  Eigen::MatrixXd out(dim(), dim());
  for (int i = 0; i < dim(); ++i)
    for (int j = i; j < dim(); ++j) out(i, j) = out(j, i) = hess_.entry(node, i, j);
  return out;
}

double FieldDerivatives::value_at(std::span<const double> point) const {
  const CellQuery q = locate_cell(field_.grid(), field_.mask(), point);
  double acc = 0.0;
  for (std::size_t c = 0; c < q.nodes.size(); ++c)
    acc += q.weights[c] * field_.value(q.nodes[c]);
  return acc;
}

Eigen::VectorXd FieldDerivatives::gradient_at(std::span<const double> point) const {
  const CellQuery q = locate_cell(field_.grid(), field_.mask(), point);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  for (std::size_t c = 0; c < q.nodes.size(); ++c) {
    const auto g = grad_.at(q.nodes[c]);
    for (int k = 0; k < dim(); ++k) out[k] += q.weights[c] * g[static_cast<std::size_t>(k)];
  }
  return out;
}

Eigen::MatrixXd FieldDerivatives::hessian_at(std::span<const double> point) const {
  const CellQuery q = locate_cell(field_.grid(), field_.mask(), point);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim(), dim());
  for (std::size_t c = 0; c < q.nodes.size(); ++c) {
    for (int i = 0; i < dim(); ++i)
      for (int j = i; j < dim(); ++j) {
        const double v = q.weights[c] * hess_.entry(q.nodes[c], i, j);
        out(i, j) += v;
        if (j != i) out(j, i) += v;
      }
  }
  return out;
}

namespace {

Eigen::VectorXd require_usable_gradient(const FieldDerivatives& phi, std::span<const double> x) {
  const Eigen::VectorXd g = phi.gradient_at(x);
  if (g.norm() < kGradientFloor)
    throw Error("degenerate gradient at sample point: |D phi| below floor");
  return g;
}

}  // namespace

Eigen::MatrixXd weingarten(const FieldDerivatives& phi, std::span<const double> x,
                           const ConvexBody& body) {
  const Eigen::VectorXd g = require_usable_gradient(phi, x);
  // D^2 h is (-1)-homogeneous, so D^2 h(D phi) D^2 phi equals
  // D^2 h(nu) D^2 phi / |D phi| without forming the unit normal.
  return body.support_hessian(g) * phi.hessian_at(x);
}

double aniso_mean_curvature(const FieldDerivatives& phi, std::span<const double> x,
                            const ConvexBody& body) {
  const Eigen::VectorXd g = require_usable_gradient(phi, x);
  const Eigen::MatrixXd hess = phi.hessian_at(x);
  const Eigen::MatrixXd product = body.d2H(g) * hess;
  const double radial = g.dot(product * g) / g.squaredNorm();
  return (product.trace() - radial) / body.support(g);
}

double IdentityResiduals::max() const { return std::max({sum, gradient, symmetry}); }

IdentityResiduals check_identities(const FieldDerivatives& phi, std::span<const double> x,
                                   const ConvexBody& body, const LevelFunctionFit& f_fit) {
  const Eigen::VectorXd g = require_usable_gradient(phi, x);
  const Eigen::MatrixXd hess = phi.hessian_at(x);
  const Eigen::VectorXd dh = body.dH(g);
  const Eigen::VectorXd a = body.d2H(g) * (hess * g);  // D^2H D^2phi Dphi
  const Eigen::VectorXd b = hess * dh;                 // D^2phi DH
  const double fp = f_fit.eval_derivative(phi.value_at(x));
  const Eigen::VectorXd rhs = fp * g;

  IdentityResiduals out;
  const double scale_sum = std::max({a.norm(), b.norm(), rhs.norm(), kTiny});
  out.sum = (a + b - rhs).norm() / scale_sum;
  const double scale_grad = std::max({2.0 * b.norm(), rhs.norm(), kTiny});
  out.gradient = (2.0 * b - rhs).norm() / scale_grad;
  const double scale_sym = std::max({a.norm(), b.norm(), kTiny});
  out.symmetry = (a - b).norm() / scale_sym;
  return out;
}

double shape_restriction_check(const FieldDerivatives& phi, std::span<const double> x,
                               const ConvexBody& body) {
  if (phi.dim() == 1) return 0.0;
  const Eigen::VectorXd g = require_usable_gradient(phi, x);
  const Eigen::MatrixXd hess = phi.hessian_at(x);
  const Eigen::MatrixXd w = body.support_hessian(g) * hess;
  const Eigen::MatrixXd s = body.d2H(g) * hess / body.support(g);
  const Eigen::MatrixXd t = tangent_basis(g.normalized());
  return (t.transpose() * (w - s) * t).cwiseAbs().maxCoeff();
}

AnisoGeometry aniso_geometry(const FieldDerivatives& phi, std::span<const double> x,
                             const ConvexBody& body, const LevelFunctionFit* f_fit) {
  AnisoGeometry out;
  out.W = weingarten(phi, x, body);
  out.M = aniso_mean_curvature(phi, x, body);
  out.tangent = tangent_basis(phi.gradient_at(x).normalized());
  if (f_fit != nullptr) out.identities = check_identities(phi, x, body, *f_fit);
  return out;
}

namespace {

struct SurfaceSample {
  Eigen::VectorXd point;
  Eigen::VectorXd normal;
  Eigen::VectorXd curvatures;       // ascending, N-1 entries
  Eigen::MatrixXd tangent;          // N x (N-1)
  Eigen::MatrixXd shape_on_tangent; // (N-1) x (N-1), before eigen-decomposition
};

/// Single-linkage clustering on sorted values: neighbors join one cluster
/// when their difference stays below max(1e-3, 0.05 |mean|).
std::vector<CurvatureCluster> cluster_curvatures(std::vector<double> pooled,
                                                 std::size_t n_samples) {
  std::sort(pooled.begin(), pooled.end());
  std::vector<CurvatureCluster> clusters;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= pooled.size(); ++i) {
    bool split = (i == pooled.size());
    if (!split) {
      const double gap = pooled[i] - pooled[i - 1];
      const double mean = 0.5 * (pooled[i] + pooled[i - 1]);
      split = gap > std::max(1e-3, 0.05 * std::abs(mean));
    }
    if (split) {
      const double count = static_cast<double>(i - start);
      double sum = 0.0;
      for (std::size_t k = start; k < i; ++k) sum += pooled[k];
      CurvatureCluster c;
      c.value = sum / count;
      c.multiplicity = static_cast<int>(
          std::llround(count / static_cast<double>(n_samples)));
      clusters.push_back(c);
      start = i;
    }
  }
  return clusters;
}

Eigen::VectorXd mean_point(const std::vector<Eigen::VectorXd>& points) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(points.front().size());
  for (const auto& p : points) acc += p;
  return acc / static_cast<double>(points.size());
}

}  // namespace

SurfaceTypeReport classify_surface(const ScalarField& phi, double s,
                                   const std::optional<ConvexBody>& body) {
  const Grid& grid = phi.grid();
  const DomainMask& mask = phi.mask();
  const int dim = grid.dim();
  if (body && body->dim() != dim)
    throw ConfigError("classify_surface: body dimension does not match the field");

  SurfaceTypeReport report;
  report.level = s;

  const auto crossings = level_crossings(phi, s);
  if (crossings.empty())
    throw Error("classify_surface: empty level set at s = " + std::to_string(s));

  if (dim == 1) {
    // One-dimensional "spheres" are symmetric point pairs.
    std::vector<double> xs;
    for (const auto& c : crossings) xs.push_back(crossing_point(grid, c)[0]);
    std::sort(xs.begin(), xs.end());
    std::vector<double> distinct;
    for (const double x : xs)
      if (distinct.empty() || x - distinct.back() > 0.25 * grid.spacing(0))
        distinct.push_back(x);
    report.n_samples = distinct.size();
    if (distinct.size() == 2) {
      report.type = SurfaceType::sphere;
      report.center = {0.5 * (distinct[0] + distinct[1])};
    } else if (distinct.size() == 1) {
      report.type = SurfaceType::hyperplane;
      report.center = {distinct[0]};
    }
    return report;
  }

  const std::size_t need = 10u * static_cast<std::size_t>(dim - 1);
  std::vector<EdgeCrossing> use;
  use.reserve(crossings.size());
  for (const auto& c : crossings)
    if (mask.is_interior(c.a) && mask.is_interior(c.b)) use.push_back(c);
  if (use.size() < need) use = crossings;
  if (use.size() < need)
    throw Error("classify_surface: too few samples on level " + std::to_string(s) + " (" +
                std::to_string(use.size()) + " < " + std::to_string(need) + ")");

  constexpr std::size_t kMaxSamples = 20000;
  const std::size_t stride = use.size() > kMaxSamples ? (use.size() + kMaxSamples - 1) / kMaxSamples : 1;

  const FieldDerivatives deriv(phi);
  std::vector<SurfaceSample> samples;
  samples.reserve(std::min(use.size(), kMaxSamples) + 1);
  for (std::size_t i = 0; i < use.size(); i += stride) {
    const auto& c = use[i];
    const double w = c.w;
    Eigen::VectorXd g(dim);
    Eigen::MatrixXd hess(dim, dim);
    {
      const Eigen::VectorXd ga = deriv.gradient_at(c.a);
      const Eigen::VectorXd gb = deriv.gradient_at(c.b);
      g = (1.0 - w) * ga + w * gb;
      const Eigen::MatrixXd ha = deriv.hessian_at(c.a);
      const Eigen::MatrixXd hb = deriv.hessian_at(c.b);
      hess = (1.0 - w) * ha + w * hb;
    }
    const double gnorm = g.norm();
    if (gnorm < kGradientFloor) continue;

    SurfaceSample sample;
    const auto pt = crossing_point(grid, c);
    sample.point = Eigen::Map<const Eigen::VectorXd>(pt.data(), dim);
    sample.normal = g / gnorm;
    sample.tangent = tangent_basis(sample.normal);
    if (body) {
      sample.shape_on_tangent =
          sample.tangent.transpose() * (body->support_hessian(g) * hess) * sample.tangent;
      const Eigen::EigenSolver<Eigen::MatrixXd> eig(sample.shape_on_tangent);
      Eigen::VectorXd real = eig.eigenvalues().real();
      std::sort(real.data(), real.data() + real.size());
      sample.curvatures = real;
    } else {
      sample.shape_on_tangent =
          sample.tangent.transpose() * (hess / gnorm) * sample.tangent;
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sample.shape_on_tangent);
      sample.curvatures = eig.eigenvalues();
    }
    samples.push_back(std::move(sample));
  }
  if (samples.size() < need)
    throw Error("classify_surface: too few usable samples on level " + std::to_string(s) + " (" +
                std::to_string(samples.size()) + " < " + std::to_string(need) + ")");
  report.n_samples = samples.size();

  std::vector<double> pooled;
  pooled.reserve(samples.size() * static_cast<std::size_t>(dim - 1));
  for (const auto& sample : samples)
    for (Eigen::Index k = 0; k < sample.curvatures.size(); ++k)
      pooled.push_back(sample.curvatures[k]);
  report.clusters = cluster_curvatures(std::move(pooled), samples.size());

  int mult_total = 0;
  double max_abs = 0.0;
  for (const auto& c : report.clusters) {
    mult_total += c.multiplicity;
    max_abs = std::max(max_abs, std::abs(c.value));
  }
  if (mult_total != dim - 1) return report;  // noise broke the multiplicity count

  const double zero_tol = std::max(1e-3, 0.05 * max_abs);
  std::vector<const CurvatureCluster*> zero, nonzero;
  for (const auto& c : report.clusters)
    (std::abs(c.value) <= zero_tol ? zero : nonzero).push_back(&c);

  std::vector<Eigen::VectorXd> points, normals;
  points.reserve(samples.size());
  normals.reserve(samples.size());
  for (const auto& sample : samples) {
    points.push_back(sample.point);
    normals.push_back(sample.normal);
  }

  const auto set_center = [&](const Eigen::VectorXd& c) {
    report.center.assign(c.data(), c.data() + c.size());
  };
  const auto set_axis = [&](const Eigen::VectorXd& a) {
    report.axis.assign(a.data(), a.data() + a.size());
  };

  if (nonzero.empty()) {
    report.type = SurfaceType::hyperplane;
    Eigen::VectorXd axis = Eigen::VectorXd::Zero(dim);
    for (const auto& n : normals) axis += (n.dot(normals.front()) < 0.0 ? -n : n);
    axis.normalize();
    const Eigen::VectorXd center = mean_point(points);
    double acc = 0.0, scale = 0.0;
    for (const auto& p : points) {
      acc += std::pow(axis.dot(p - center), 2);
      scale += (p - center).squaredNorm();
    }
    report.fit_residual = scale > 0.0 ? std::sqrt(acc / std::max(scale, kTiny)) : 0.0;
    set_center(center);
    set_axis(axis);
    return report;
  }

  if (nonzero.size() == 1 && zero.empty()) {
    const double kappa = nonzero.front()->value;
    if (body) {
      // Wulff fit: samples should be a scaled translate of the boundary
      // parametrized by the support gradient at the sample normals.
      std::vector<Eigen::VectorXd> q;
      q.reserve(samples.size());
      for (const auto& n : normals) q.push_back(body->support_gradient(n));
      const Eigen::VectorXd p_bar = mean_point(points);
      const Eigen::VectorXd q_bar = mean_point(q);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        num += (points[i] - p_bar).dot(q[i] - q_bar);
        den += (q[i] - q_bar).squaredNorm();
      }
      const double sigma = num / std::max(den, kTiny);
      const Eigen::VectorXd center = p_bar - sigma * q_bar;
      double acc = 0.0, scale_acc = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += (points[i] - center - sigma * q[i]).squaredNorm();
        scale_acc += (q[i] - q_bar).squaredNorm();
      }
      const double rms_err = std::sqrt(acc / static_cast<double>(points.size()));
      const double scale =
          std::abs(sigma) * std::sqrt(scale_acc / static_cast<double>(points.size()));
      report.fit_residual = rms_err / std::max(scale, kTiny);
      if (sigma > 0.0 && rms_err <= 1e-2 * scale) {
        report.type = SurfaceType::wulff_sphere;
        set_center(center);
      }
      return report;
    }
    report.type = SurfaceType::sphere;
    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < points.size(); ++i) center += points[i] - normals[i] / kappa;
    center /= static_cast<double>(points.size());
    double r_mean = 0.0;
    for (const auto& p : points) r_mean += (p - center).norm();
    r_mean /= static_cast<double>(points.size());
    double var = 0.0;
    for (const auto& p : points) var += std::pow((p - center).norm() - r_mean, 2);
    report.fit_residual =
        std::sqrt(var / static_cast<double>(points.size())) / std::max(r_mean, kTiny);
    set_center(center);
    return report;
  }

  if (nonzero.size() == 1 && zero.size() == 1) {
    const double kappa = nonzero.front()->value;
    report.type = body ? SurfaceType::wulff_cylinder : SurfaceType::spherical_cylinder;
    report.cylinder_rank = nonzero.front()->multiplicity;

    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < points.size(); ++i) center += points[i] - normals[i] / kappa;
    center /= static_cast<double>(points.size());
    set_center(center);

    if (zero.front()->multiplicity == 1) {
      // The flat direction is one-dimensional: average the zero-curvature
      // eigenvector across samples (sign-aligned).
      Eigen::VectorXd axis = Eigen::VectorXd::Zero(dim);
      for (const auto& sample : samples) {
        const Eigen::EigenSolver<Eigen::MatrixXd> eig(sample.shape_on_tangent);
        Eigen::Index best = 0;
        double best_abs = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
          const double mag = std::abs(eig.eigenvalues()[k].real());
          if (mag < best_abs) {
            best_abs = mag;
            best = k;
          }
        }
        Eigen::VectorXd dir = sample.tangent * eig.eigenvectors().col(best).real();
        dir.normalize();
        if (axis.squaredNorm() > 0.0 && dir.dot(axis) < 0.0) dir = -dir;
        axis += dir;
      }
      axis.normalize();
      set_axis(axis);

      double d_mean = 0.0;
      std::vector<double> dists;
      dists.reserve(points.size());
      for (const auto& p : points) {
        const Eigen::VectorXd rel = p - center;
        const double d = (rel - axis.dot(rel) * axis).norm();
        dists.push_back(d);
        d_mean += d;
      }
      d_mean /= static_cast<double>(dists.size());
      double var = 0.0;
      for (const double d : dists) var += std::pow(d - d_mean, 2);
      report.fit_residual =
          std::sqrt(var / static_cast<double>(dists.size())) / std::max(d_mean, kTiny);
    }
    return report;
  }

  return report;  // unknown: more than two clusters survived
}

GeodesicTrace geodesic_trace(const ScalarField& phi, std::span<const double> y,
                             const ConvexBody& body, double tau_max, std::size_t n_steps) {
  const Grid& grid = phi.grid();
  const DomainMask& mask = phi.mask();
  const int dim = grid.dim();
  if (y.size() != static_cast<std::size_t>(dim))
    throw ConfigError("geodesic_trace: seed dimension does not match the field");
  if (body.dim() != dim) throw ConfigError("geodesic_trace: body dimension mismatch");
  if (!(tau_max > 0.0) || !std::isfinite(tau_max))
    throw ConfigError("geodesic_trace: tau_max must be positive and finite");
  if (n_steps == 0) throw ConfigError("geodesic_trace: need at least one step");

  const VectorField grad = gradient(phi);
  const auto grad_at = [&](const Eigen::VectorXd& p) {
    const CellQuery q = locate_cell(grid, mask, std::span<const double>(p.data(), p.size()));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    for (std::size_t c = 0; c < q.nodes.size(); ++c) {
      const auto g = grad.at(q.nodes[c]);
      for (int k = 0; k < dim; ++k) out[k] += q.weights[c] * g[static_cast<std::size_t>(k)];
    }
    return out;
  };
  const auto value_at = [&](const Eigen::VectorXd& p) {
    const CellQuery q = locate_cell(grid, mask, std::span<const double>(p.data(), p.size()));
    double acc = 0.0;
    for (std::size_t c = 0; c < q.nodes.size(); ++c) acc += q.weights[c] * phi.value(q.nodes[c]);
    return acc;
  };
  const auto velocity = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd g = grad_at(p);
    if (g.norm() < kGradientFloor)
      throw Error("degenerate gradient along trace: |D phi| below floor");
    return body.dH(g);
  };

  GeodesicTrace trace;
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(y.data(), dim);
  const Eigen::VectorXd v0 = velocity(p);  // seed errors propagate to the caller
  const Eigen::VectorXd seed = p;

  trace.taus.reserve(n_steps + 1);
  trace.points.reserve(n_steps + 1);
  trace.levels.reserve(n_steps + 1);
  const auto record = [&](double tau, const Eigen::VectorXd& pos, double level) {
    trace.taus.push_back(tau);
    trace.points.emplace_back(pos.data(), pos.data() + pos.size());
    trace.levels.push_back(level);
  };
  record(0.0, p, value_at(p));

  const double dt = tau_max / static_cast<double>(n_steps);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    Eigen::VectorXd next;
    double level = 0.0;
    try {
      const Eigen::VectorXd k1 = velocity(p);
      const Eigen::VectorXd k2 = velocity(p + 0.5 * dt * k1);
      const Eigen::VectorXd k3 = velocity(p + 0.5 * dt * k2);
      const Eigen::VectorXd k4 = velocity(p + dt * k3);
      next = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      level = value_at(next);
    } catch (const Error&) {
      trace.truncated = true;
      break;
    }
    p = next;
    const double tau = dt * static_cast<double>(step);
    record(tau, p, level);
    trace.straightness = std::max(trace.straightness, (p - (seed + tau * v0)).norm());
  }

  if (trace.taus.size() >= 2) {
    const LineFit fit = fit_line(trace.taus, trace.levels);
    trace.level_rate = fit.slope;
    trace.level_rate_rms = fit.rms_residual;
  }
  return trace;
}

ScalarField normalize_to_unit_f(const ScalarField& phi, const LevelFunctionFit& f_fit) {
  const std::size_t m = f_fit.knots.size();
  if (m == 0) throw ConfigError("normalize_to_unit_f: empty level fit");
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  double v_sum = 0.0;
  for (const double v : f_fit.values) {
    if (!(v > 0.0))
      throw Error("normalize_to_unit_f: fitted f must be positive on the level range");
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
    v_sum += v;
  }
  const double v_mean = v_sum / static_cast<double>(m);
  const double k0 = f_fit.knots.front();

  std::vector<double> values(phi.values().begin(), phi.values().end());
  const auto transform = [&](const auto& f_of_s) {
    for (const std::size_t node : phi.mask().active_nodes()) values[node] = f_of_s(values[node]);
  };

  if (v_max - v_min <= 1e-4 * std::abs(v_mean)) {
    // Constant f: exact linear rescale, anchored at the lowest knot so the
    // reparametrization is smooth (no knot-interpolation kinks).
    const double c = 1.0 / std::sqrt(v_mean);
    transform([&](double s) { return k0 + c * (s - k0); });
  } else {
    // F' = f^{-1/2}; integrate the linear interpolant of the knot weights so
    // that F is C^1 across knots (piecewise quadratic).
    std::vector<double> w(m), f_knots(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = 1.0 / std::sqrt(f_fit.values[i]);
    f_knots[0] = k0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double h = f_fit.knots[i + 1] - f_fit.knots[i];
      f_knots[i + 1] = f_knots[i] + 0.5 * h * (w[i] + w[i + 1]);
    }
    const auto& knots = f_fit.knots;
    transform([&](double s) {
      if (s <= knots.front()) return f_knots.front() + w.front() * (s - knots.front());
      if (s >= knots.back()) return f_knots.back() + w.back() * (s - knots.back());
      std::size_t hi = static_cast<std::size_t>(
          std::upper_bound(knots.begin(), knots.end(), s) - knots.begin());
      hi = std::clamp<std::size_t>(hi, 1, m - 1);
      const std::size_t lo = hi - 1;
      const double h = knots[hi] - knots[lo];
      const double d = s - knots[lo];
      return f_knots[lo] + d * w[lo] + 0.5 * d * d * (w[hi] - w[lo]) / h;
    });
  }

  return ScalarField(phi.grid_ptr(), phi.mask_ptr(), std::move(values), phi.time());
}

}  // namespace matzoh
