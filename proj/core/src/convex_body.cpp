#include "matzoh/convex_body.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "matzoh/errors.hpp"

namespace matzoh {

namespace {

void require_symmetric(const Eigen::MatrixXd& M, const char* what) {
  if (M.rows() != M.cols()) throw ConfigError(std::string(what) + ": matrix must be square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ConfigError(std::string(what) + ": matrix must be symmetric");
}

}  // namespace

ConvexBody ConvexBody::euclidean_ball(int dim) {
  if (dim < 1) throw ConfigError("body: dimension must be at least 1");
  ConvexBody b;
  b.kind_ = Kind::euclidean_ball;
  b.dim_ = dim;
  return b;
}

ConvexBody ConvexBody::ellipsoid(Eigen::MatrixXd A) {
  require_symmetric(A, "ellipsoid body");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw ConfigError("ellipsoid body: matrix must be positive definite");
  ConvexBody b;
  b.kind_ = Kind::ellipsoid;
  b.dim_ = static_cast<int>(A.rows());
  b.A_ = std::move(A);
  return b;
}

ConvexBody ConvexBody::perturbed_ball(int dim, double eps, Eigen::MatrixXd B) {
  require_symmetric(B, "perturbed ball body");
  if (B.rows() != dim) throw ConfigError("perturbed ball body: matrix dimension mismatch");
  ConvexBody b;
  b.kind_ = Kind::perturbed_ball;
  b.dim_ = dim;
  b.eps_ = eps;
  b.B_ = std::move(B);
  return b;
}

ConvexBody ConvexBody::custom(int dim, ScalarFn h, std::optional<VectorFn> dh,
                              std::optional<MatrixFn> d2h) {
  if (dim < 1) throw ConfigError("body: dimension must be at least 1");
  if (!h) throw ConfigError("custom body: support evaluator is required");
  ConvexBody b;
  b.kind_ = Kind::custom;
  b.dim_ = dim;
  b.h_fn_ = std::move(h);
  b.dh_fn_ = std::move(dh);
  b.d2h_fn_ = std::move(d2h);
  return b;
}

void ConvexBody::require_nonzero(const Eigen::VectorXd& xi) const {
  if (xi.size() != dim_) throw ConfigError("body: direction dimension mismatch");
  if (xi.isZero(0.0)) throw Error("support undefined at origin");
}

double ConvexBody::support(const Eigen::VectorXd& xi) const {
  require_nonzero(xi);
  switch (kind_) {
    case Kind::euclidean_ball:
      return xi.norm();
    case Kind::ellipsoid:
      return std::sqrt(xi.dot(A_ * xi));
    case Kind::perturbed_ball: {
      const double r = xi.norm();
      return r + eps_ * xi.dot(B_ * xi) / r;
    }
    case Kind::custom:
      return h_fn_(xi);
  }
  return 0.0;
}

Eigen::VectorXd ConvexBody::support_gradient(const Eigen::VectorXd& xi) const {
  require_nonzero(xi);
  switch (kind_) {
    case Kind::euclidean_ball:
      return xi / xi.norm();
    case Kind::ellipsoid: {
      const Eigen::VectorXd Axi = A_ * xi;
      return Axi / std::sqrt(xi.dot(Axi));
    }
    case Kind::perturbed_ball: {
      const double r = xi.norm();
      const Eigen::VectorXd Bxi = B_ * xi;
      const double q = xi.dot(Bxi);
      return xi / r + eps_ * (2.0 * Bxi / r - q * xi / (r * r * r));
    }
    case Kind::custom: {
      if (dh_fn_) return (*dh_fn_)(xi);
      // Central differences with a relative step.
      const double step = 1e-5 * xi.norm();
      Eigen::VectorXd g(dim_);
      Eigen::VectorXd probe = xi;
      for (int k = 0; k < dim_; ++k) {
        probe[k] = xi[k] + step;
        const double hp = h_fn_(probe);
        probe[k] = xi[k] - step;
        const double hm = h_fn_(probe);
        probe[k] = xi[k];
        g[k] = (hp - hm) / (2.0 * step);
      }
      return g;
    }
  }
  return Eigen::VectorXd::Zero(dim_);
}

Eigen::MatrixXd ConvexBody::support_hessian(const Eigen::VectorXd& xi) const {
  require_nonzero(xi);
  switch (kind_) {
    case Kind::euclidean_ball: {
      const double r = xi.norm();
      const Eigen::VectorXd nu = xi / r;
      return (Eigen::MatrixXd::Identity(dim_, dim_) - nu * nu.transpose()) / r;
    }
    case Kind::ellipsoid: {
      const Eigen::VectorXd Axi = A_ * xi;
      const double h = std::sqrt(xi.dot(Axi));
      return A_ / h - Axi * Axi.transpose() / (h * h * h);
    }
    case Kind::perturbed_ball: {
      const double r = xi.norm();
      const double r3 = r * r * r;
      const double r5 = r3 * r * r;
      const Eigen::VectorXd Bxi = B_ * xi;
      const double q = xi.dot(Bxi);
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim_, dim_);
      Eigen::MatrixXd out = I / r - xi * xi.transpose() / r3;
      out += eps_ * (2.0 * B_ / r - 2.0 * (Bxi * xi.transpose() + xi * Bxi.transpose()) / r3 -
                     q * I / r3 + 3.0 * q * xi * xi.transpose() / r5);
      return out;
    }
    case Kind::custom: {
      if (d2h_fn_) return (*d2h_fn_)(xi);
      const double step = 1e-5 * xi.norm();
      Eigen::MatrixXd out(dim_, dim_);
      Eigen::VectorXd probe = xi;
      for (int k = 0; k < dim_; ++k) {
        probe[k] = xi[k] + step;
        const Eigen::VectorXd gp = support_gradient(probe);
        probe[k] = xi[k] - step;
        const Eigen::VectorXd gm = support_gradient(probe);
        probe[k] = xi[k];
        out.col(k) = (gp - gm) / (2.0 * step);
      }
      return 0.5 * (out + out.transpose());
    }
  }
  return Eigen::MatrixXd::Zero(dim_, dim_);
}

double ConvexBody::H(const Eigen::VectorXd& xi) const {
  switch (kind_) {
    case Kind::euclidean_ball:
      require_nonzero(xi);
      return 0.5 * xi.squaredNorm();
    case Kind::ellipsoid:
      require_nonzero(xi);
      return 0.5 * xi.dot(A_ * xi);
    default: {
      const double h = support(xi);
      return 0.5 * h * h;
    }
  }
}

Eigen::VectorXd ConvexBody::dH(const Eigen::VectorXd& xi) const {
  switch (kind_) {
    case Kind::euclidean_ball:
      require_nonzero(xi);
      return xi;
    case Kind::ellipsoid:
      require_nonzero(xi);
      return A_ * xi;
    default:
      return support(xi) * support_gradient(xi);
  }
}

Eigen::MatrixXd ConvexBody::d2H(const Eigen::VectorXd& xi) const {
  switch (kind_) {
    case Kind::euclidean_ball:
      require_nonzero(xi);
      return Eigen::MatrixXd::Identity(dim_, dim_);
    case Kind::ellipsoid:
      require_nonzero(xi);
      return A_;
    default: {
      const Eigen::VectorXd g = support_gradient(xi);
      return g * g.transpose() + support(xi) * support_hessian(xi);
    }
  }
}

const Eigen::MatrixXd& ConvexBody::ellipsoid_matrix() const {
  if (kind_ != Kind::ellipsoid) throw ConfigError("body: not an ellipsoid");
  return A_;
}

std::vector<Eigen::VectorXd> unit_directions(int dim, int n) {
  if (dim < 1 || n < 1) throw ConfigError("unit_directions: dim and n must be positive");
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(n));
  if (dim == 1) {
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd v(1);
      v[0] = (k % 2 == 0) ? 1.0 : -1.0;
      dirs.push_back(v);
    }
    return dirs;
  }
  if (dim == 2) {
    for (int k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / n;
      Eigen::VectorXd v(2);
      v << std::cos(theta), std::sin(theta);
      dirs.push_back(v);
    }
    return dirs;
  }
  if (dim == 3) {
    // Fibonacci sphere; for n = 1 this degenerates to e1.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / n;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double theta = golden * k;
      Eigen::VectorXd v(3);
      v << rho * std::cos(theta), rho * std::sin(theta), z;
      dirs.push_back(v);
    }
    return dirs;
  }
  // Higher dimensions: e1 first, then seeded Gaussian directions.
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(dim);
  e1[0] = 1.0;
  dirs.push_back(e1);
  std::mt19937_64 rng(0x6d61747a6f68ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (dirs.size() < static_cast<std::size_t>(n)) {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = gauss(rng);
    const double norm = v.norm();
    if (norm < 1e-8) continue;
    dirs.push_back(v / norm);
  }
  return dirs;
}

std::vector<Eigen::VectorXd> wulff_boundary(const ConvexBody& body, int n_samples) {
  std::vector<Eigen::VectorXd> points;
  points.reserve(static_cast<std::size_t>(n_samples));
  for (const Eigen::VectorXd& nu : unit_directions(body.dim(), n_samples))
    points.push_back(body.support_gradient(nu));
  return points;
}

C2PlusReport check_C2_plus(const ConvexBody& body, int n_directions, double tol_pd) {
  C2PlusReport report;
  report.min_tangential_eigenvalue = std::numeric_limits<double>::infinity();
  report.max_radial_residual = 0.0;
  const int dim = body.dim();
  if (dim == 1) {
    // No tangential directions; only homogeneity to check.
    Eigen::VectorXd nu(1);
    nu[0] = 1.0;
    report.max_radial_residual = std::fabs(body.support_hessian(nu)(0, 0));
    report.min_tangential_eigenvalue = 0.0;
    report.pass = report.max_radial_residual <= 1e-8;
    return report;
  }
  for (const Eigen::VectorXd& nu : unit_directions(dim, n_directions)) {
    const Eigen::MatrixXd D2h = body.support_hessian(nu);
    report.max_radial_residual = std::max(report.max_radial_residual, (D2h * nu).norm());

    // Orthonormal tangent basis: the complement of nu from a
    // Householder QR of [nu | I].
    Eigen::MatrixXd M(dim, dim);
    M.col(0) = nu;
    M.block(0, 1, dim, dim - 1) =
        Eigen::MatrixXd::Identity(dim, dim).leftCols(dim - 1);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    const Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd T = Q.rightCols(dim - 1);

    const Eigen::MatrixXd tangential = T.transpose() * D2h * T;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (tangential + tangential.transpose()));
    report.min_tangential_eigenvalue =
        std::min(report.min_tangential_eigenvalue, eig.eigenvalues().minCoeff());
  }
  report.pass = report.min_tangential_eigenvalue >= tol_pd && report.max_radial_residual <= 1e-6;
  return report;
}

}  // namespace matzoh
