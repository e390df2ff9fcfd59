#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "matzoh/convex_body.hpp"
#include "matzoh/grid.hpp"

namespace matzoh {

/// Quasi-linear second-order operator Q u = sum_ij a_ij(Du) u_{x_i x_j}
/// with coefficients positively homogeneous of degree alpha > -1:
/// a(sigma xi) = sigma^alpha a(xi).  Built-in instances:
///
///   heat                    a = I                                alpha = 0
///   p_laplace(p)            a = |xi|^{p-2} (I + (p-2) n⊗n)       alpha = p-2
///   normalized_p_laplace(p) a = I + (p-2) n⊗n                    alpha = 0
///   h_laplace(body)         a = D²H(xi), H = h²/2                alpha = 0
///
/// where n = xi/|xi|.  The companion quadratic form
/// G u = Du·a(Du)Du generalizes |Du|²: it equals |Du|² for heat and
/// 2H(Du) for the anisotropic Laplacian.
class QuasiLinearOperator {
 public:
  enum class Kind { heat, p_laplace, normalized_p_laplace, h_laplace };

  static QuasiLinearOperator heat(int dim);
  /// Requires p > 1 so the coefficient matrix stays elliptic and
  /// alpha = p - 2 > -1.
  static QuasiLinearOperator p_laplace(int dim, double p);
  /// Requires p > 1 (eigenvalues of the coefficient matrix are
  /// {p - 1, 1}).
  static QuasiLinearOperator normalized_p_laplace(int dim, double p);
  static QuasiLinearOperator h_laplace(ConvexBody body);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  /// Exponent for the p-Laplace kinds; throws otherwise.
  double p() const;
  /// Anisotropy body for the h_laplace kind; throws otherwise.
  const ConvexBody& body() const;

  /// Coefficient matrix a(xi).  The heat kind accepts xi = 0 (a = I);
  /// all other kinds throw Error("degenerate gradient") there.
  Eigen::MatrixXd coefficients(const Eigen::VectorXd& xi) const;

  /// Nodes where |Du| falls below this floor violate the Du != 0
  /// hypothesis and are reported rather than regularized.
  double gradient_floor() const { return gradient_floor_; }
  void set_gradient_floor(double floor);

 private:
  QuasiLinearOperator() = default;

  Kind kind_ = Kind::heat;
  int dim_ = 0;
  double alpha_ = 0.0;
  double p_ = 2.0;
  std::optional<ConvexBody> body_;
  double gradient_floor_ = 1e-8;
};

/// Pointwise Q u over all non-exterior nodes, from the second-order
/// finite-difference gradient and Hessian.  For the heat kind this is
/// exactly laplacian(field); for coefficient matrices that evaluate to
/// the identity (ball h_laplace, normalized p-Laplace at p = 2) the
/// contraction reproduces laplacian(field) bitwise because zero
/// coefficients are skipped and the diagonal is accumulated in axis
/// order with unit weights.  Throws when a non-heat kind meets an
/// interior node with |Du| below the gradient floor (the node list is
/// included in the message); sub-floor *boundary* nodes merely read 0.
ScalarField apply_Q(const QuasiLinearOperator& op, const ScalarField& field);

/// Pointwise generalized gradient G u = Du·a(Du)Du.  Same gradient
/// floor contract as apply_Q.
ScalarField apply_G(const QuasiLinearOperator& op, const ScalarField& field);

/// Recover the homogeneity degree numerically: slope of
/// log ||a(sigma xi)||_F against log sigma.  Matches the declared
/// alpha to near machine precision for the built-ins.
double estimate_alpha(const QuasiLinearOperator& op, const Eigen::VectorXd& xi,
                      const std::vector<double>& sigmas);

}  // namespace matzoh
