#include "matzoh/operators.hpp"

#include <cmath>
#include <sstream>

#include "matzoh/calculus.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/parallel.hpp"
#include "matzoh/stats.hpp"

namespace matzoh {

namespace {

std::string format_node(const Grid& grid, std::size_t node) {
  const std::vector<std::size_t> idx = grid.unflatten(node);
  std::string out = "(";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(idx[k]);
  }
  out += ")";
  return out;
}

[[noreturn]] void throw_gradient_floor(const Grid& grid, double floor,
                                       const std::vector<std::size_t>& offenders) {
  std::ostringstream msg;
  msg << "quasi-linear operator: gradient magnitude below floor " << floor << " at "
      << offenders.size() << " interior node(s):";
  const std::size_t shown = std::min<std::size_t>(offenders.size(), 8);
  for (std::size_t k = 0; k < shown; ++k) msg << " " << format_node(grid, offenders[k]);
  if (offenders.size() > shown) msg << " ...";
  throw Error(msg.str());
}

/// Interior nodes whose gradient magnitude falls below the floor.
std::vector<std::size_t> subfloor_interior_nodes(const QuasiLinearOperator& op,
                                                 const VectorField& grad,
                                                 const DomainMask& mask) {
  std::vector<std::size_t> offenders;
  for (std::size_t node : mask.interior_nodes())
    if (grad.norm2(node) < op.gradient_floor()) offenders.push_back(node);
  return offenders;
}

}  // namespace

QuasiLinearOperator QuasiLinearOperator::heat(int dim) {
  if (dim < 1) throw ConfigError("operator: dimension must be at least 1");
  QuasiLinearOperator op;
  op.kind_ = Kind::heat;
  op.dim_ = dim;
  op.alpha_ = 0.0;
  return op;
}

QuasiLinearOperator QuasiLinearOperator::p_laplace(int dim, double p) {
  if (dim < 1) throw ConfigError("operator: dimension must be at least 1");
  if (!(p > 1.0)) throw ConfigError("p_laplace: requires p > 1 (ellipticity and alpha > -1)");
  QuasiLinearOperator op;
  op.kind_ = Kind::p_laplace;
  op.dim_ = dim;
  op.p_ = p;
  op.alpha_ = p - 2.0;
  return op;
}

QuasiLinearOperator QuasiLinearOperator::normalized_p_laplace(int dim, double p) {
  if (dim < 1) throw ConfigError("operator: dimension must be at least 1");
  if (!(p > 1.0)) throw ConfigError("normalized_p_laplace: requires p > 1 (ellipticity)");
  QuasiLinearOperator op;
  op.kind_ = Kind::normalized_p_laplace;
  op.dim_ = dim;
  op.p_ = p;
  op.alpha_ = 0.0;
  return op;
}

QuasiLinearOperator QuasiLinearOperator::h_laplace(ConvexBody body) {
  QuasiLinearOperator op;
  op.kind_ = Kind::h_laplace;
  op.dim_ = body.dim();
  op.alpha_ = 0.0;
  op.body_ = std::move(body);
  return op;
}

double QuasiLinearOperator::p() const {
  if (kind_ != Kind::p_laplace && kind_ != Kind::normalized_p_laplace)
    throw ConfigError("operator: p is only defined for the p-Laplace kinds");
  return p_;
}

const ConvexBody& QuasiLinearOperator::body() const {
  if (!body_) throw ConfigError("operator: no anisotropy body attached");
  return *body_;
}

void QuasiLinearOperator::set_gradient_floor(double floor) {
  if (!(floor > 0.0)) throw ConfigError("operator: gradient floor must be positive");
  gradient_floor_ = floor;
}

Eigen::MatrixXd QuasiLinearOperator::coefficients(const Eigen::VectorXd& xi) const {
  if (xi.size() != dim_) throw ConfigError("operator: gradient dimension mismatch");
  switch (kind_) {
    case Kind::heat:
      return Eigen::MatrixXd::Identity(dim_, dim_);
    case Kind::p_laplace: {
      const double r = xi.norm();
      if (r == 0.0) throw Error("degenerate gradient");
      const Eigen::VectorXd n = xi / r;
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim_, dim_);
      a += (p_ - 2.0) * (n * n.transpose());
      return std::pow(r, p_ - 2.0) * a;
    }
    case Kind::normalized_p_laplace: {
      const double r = xi.norm();
      if (r == 0.0) throw Error("degenerate gradient");
      const Eigen::VectorXd n = xi / r;
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim_, dim_);
      a += (p_ - 2.0) * (n * n.transpose());
      return a;
    }
    case Kind::h_laplace:
      if (xi.isZero(0.0)) throw Error("degenerate gradient");
      return body_->d2H(xi);
  }
  return Eigen::MatrixXd::Identity(dim_, dim_);
}

ScalarField apply_Q(const QuasiLinearOperator& op, const ScalarField& field) {
  const Grid& grid = field.grid();
  if (grid.dim() != op.dim()) throw ConfigError("apply_Q: operator/field dimension mismatch");
  if (op.kind() == QuasiLinearOperator::Kind::heat) return laplacian(field);

  const DomainMask& mask = field.mask();
  const VectorField grad = gradient(field);
  const SymmetricMatrixField hess = hessian(field);

  const std::vector<std::size_t> offenders = subfloor_interior_nodes(op, grad, mask);
  if (!offenders.empty()) throw_gradient_floor(grid, op.gradient_floor(), offenders);

  const int n = grid.dim();
  std::vector<double> values(grid.size(), 0.0);
  const auto& nodes = mask.active_nodes();
  parallel_for(nodes.size(), [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd xi(n);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t node = nodes[k];
      const std::span<const double> g = grad.at(node);
      for (int c = 0; c < n; ++c) xi[c] = g[static_cast<std::size_t>(c)];
      if (xi.norm() < op.gradient_floor()) continue;  // boundary-only after the gate
      const Eigen::MatrixXd a = op.coefficients(xi);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double aij = a(i, j);
          if (aij == 0.0) continue;
          acc += (i == j) ? aij * hess.entry(node, i, i) : 2.0 * aij * hess.entry(node, i, j);
        }
      }
      values[node] = acc;
    }
  }, 512);
  return ScalarField(field.grid_ptr(), field.mask_ptr(), std::move(values), field.time());
}

ScalarField apply_G(const QuasiLinearOperator& op, const ScalarField& field) {
  const Grid& grid = field.grid();
  if (grid.dim() != op.dim()) throw ConfigError("apply_G: operator/field dimension mismatch");
  const DomainMask& mask = field.mask();
  const VectorField grad = gradient(field);
  const int n = grid.dim();
  const bool is_heat = op.kind() == QuasiLinearOperator::Kind::heat;

  if (!is_heat) {
    const std::vector<std::size_t> offenders = subfloor_interior_nodes(op, grad, mask);
    if (!offenders.empty()) throw_gradient_floor(grid, op.gradient_floor(), offenders);
  }

  std::vector<double> values(grid.size(), 0.0);
  const auto& nodes = mask.active_nodes();
  parallel_for(nodes.size(), [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd xi(n);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t node = nodes[k];
      const std::span<const double> g = grad.at(node);
      if (is_heat) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c) acc += g[static_cast<std::size_t>(c)] * g[static_cast<std::size_t>(c)];
        values[node] = acc;
        continue;
      }
      for (int c = 0; c < n; ++c) xi[c] = g[static_cast<std::size_t>(c)];
      if (xi.norm() < op.gradient_floor()) continue;
      const Eigen::MatrixXd a = op.coefficients(xi);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += a(i, i) * xi[i] * xi[i];
        for (int j = i + 1; j < n; ++j) acc += 2.0 * a(i, j) * xi[i] * xi[j];
      }
      values[node] = acc;
    }
  }, 512);
  return ScalarField(field.grid_ptr(), field.mask_ptr(), std::move(values), field.time());
}

double estimate_alpha(const QuasiLinearOperator& op, const Eigen::VectorXd& xi,
                      const std::vector<double>& sigmas) {
  if (sigmas.size() < 2) throw ConfigError("estimate_alpha: need at least two scale factors");
  std::vector<double> log_sigma;
  std::vector<double> log_norm;
  log_sigma.reserve(sigmas.size());
  log_norm.reserve(sigmas.size());
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw ConfigError("estimate_alpha: scale factors must be positive");
    const double norm = op.coefficients(sigma * xi).norm();
    if (!(norm > 0.0)) throw Error("estimate_alpha: vanishing coefficient matrix");
    log_sigma.push_back(std::log(sigma));
    log_norm.push_back(std::log(norm));
  }
  return fit_line(log_sigma, log_norm).slope;
}

}  // namespace matzoh
