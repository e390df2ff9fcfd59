#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace matzoh {

/// A centrally symmetric convex body K given through its support
/// function h (positively 1-homogeneous, even, smooth and uniformly
/// convex on directions).  The associated gauge energy is H = h^2/2;
/// its gradient map DH sends a level-surface normal to the Wulff-shape
/// point it corresponds to.
///
/// Derived evaluators satisfy H = h^2/2, DH = h*Dh and
/// D2H = Dh (x) Dh + h*D2h.  Built-in bodies use exact closed forms
/// (the Euclidean ball has D2H = I exactly and the ellipsoid body with
/// matrix A has D2H = A exactly).
class ConvexBody {
 public:
  enum class Kind { euclidean_ball, ellipsoid, perturbed_ball, custom };

  using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
  using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using MatrixFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  /// h(xi) = |xi|.
  static ConvexBody euclidean_ball(int dim);

  /// h(xi) = sqrt(xi' A xi) with A symmetric positive definite; the
  /// Wulff shape is the ellipsoid { x' A^{-1} x <= 1 }.
  static ConvexBody ellipsoid(Eigen::MatrixXd A);

  /// h(xi) = |xi| + eps * (xi' B xi)/|xi| with B symmetric.  Convex for
  /// small eps; check_C2_plus detects when eps breaks convexity.
  static ConvexBody perturbed_ball(int dim, double eps, Eigen::MatrixXd B);

  /// User-supplied evaluators.  Missing derivatives fall back to
  /// central differences with step 1e-5 * |xi|.
  static ConvexBody custom(int dim, ScalarFn h, std::optional<VectorFn> dh = std::nullopt,
                           std::optional<MatrixFn> d2h = std::nullopt);

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }

  /// Support function h(xi).  Throws Error("support undefined at
  /// origin") when xi = 0.
  double support(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd support_gradient(const Eigen::VectorXd& xi) const;
  Eigen::MatrixXd support_hessian(const Eigen::VectorXd& xi) const;

  /// H = h^2/2 and its derivatives.
  double H(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd dH(const Eigen::VectorXd& xi) const;
  Eigen::MatrixXd d2H(const Eigen::VectorXd& xi) const;

  /// Ellipsoid matrix (only for Kind::ellipsoid).
  const Eigen::MatrixXd& ellipsoid_matrix() const;

 private:
  ConvexBody() = default;

  void require_nonzero(const Eigen::VectorXd& xi) const;

  Kind kind_ = Kind::euclidean_ball;
  int dim_ = 0;
  Eigen::MatrixXd A_;   // ellipsoid
  Eigen::MatrixXd B_;   // perturbation quadratic
  double eps_ = 0.0;    // perturbation size
  ScalarFn h_fn_;
  std::optional<VectorFn> dh_fn_;
  std::optional<MatrixFn> d2h_fn_;
};

/// Deterministic quasi-uniform unit directions: +-e1 alternation in 1D,
/// equally spaced angles in 2D, a Fibonacci sphere in 3D, and e1
/// followed by seeded normalized Gaussian samples in higher dimension.
/// The 1D, 2D, and generic constructions lead with e1; the 3D lattice
/// stays clear of the poles (degenerating to e1 only for n = 1).
std::vector<Eigen::VectorXd> unit_directions(int dim, int n);

/// Wulff-shape boundary samples Dh(nu_k) over n quasi-uniform unit
/// directions nu_k.
std::vector<Eigen::VectorXd> wulff_boundary(const ConvexBody& body, int n_samples);

struct C2PlusReport {
  bool pass = false;
  /// Smallest eigenvalue of D2h restricted to the tangent space of the
  /// sampled direction, over all samples.
  double min_tangential_eigenvalue = 0.0;
  /// Largest |D2h(nu) nu| over samples (zero-homogeneity residual).
  double max_radial_residual = 0.0;
};

/// Samples D2h over unit directions and verifies uniform convexity of h
/// on the sphere: tangential eigenvalues at least tol_pd and the radial
/// direction in the kernel.
C2PlusReport check_C2_plus(const ConvexBody& body, int n_directions, double tol_pd = 1e-8);

}  // namespace matzoh
