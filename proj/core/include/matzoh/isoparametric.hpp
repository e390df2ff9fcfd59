#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matzoh/convex_body.hpp"
#include "matzoh/grid.hpp"
#include "matzoh/operators.hpp"

namespace matzoh {

/// One-dimensional fit of a node field psi against the levels of a reference
/// field phi: psi(x) ~ F(phi(x)).  The knots are the per-bin means of phi,
/// the values the per-bin means of psi.  Evaluation is piecewise linear
/// between knots with linear extrapolation beyond the ends; the derivative
/// estimates come from three-point stencils on the knots.
struct LevelFunctionFit {
  std::vector<double> knots;       ///< increasing level abscissas
  std::vector<double> values;      ///< fitted F at the knots
  std::vector<double> derivative;  ///< dF/ds at the knots
  /// RMS of psi - F(phi) over interior nodes, divided by
  /// max(range(psi), RMS(psi)) so that constant psi stays well-posed.
  double residual = 0.0;

  double eval(double s) const;
  double eval_derivative(double s) const;
  double min_knot() const { return knots.front(); }
  double max_knot() const { return knots.back(); }
};

/// Bin the interior nodes of phi into n_knots equal-width level bins and fit
/// psi as a function of phi.  n_knots == 0 picks the square-root rule used
/// for level binning elsewhere.  Throws Error when phi is constant or when
/// more than 20% of the bins are empty.
LevelFunctionFit fit_level_function(const ScalarField& phi, const ScalarField& psi,
                                    std::size_t n_knots = 0);

/// Result of testing whether phi solves G phi = f(phi), Q phi = g(phi) for a
/// given quasi-linear operator.
struct IsoparametricVerdict {
  LevelFunctionFit f_fit;  ///< fit of the gradient invariant G phi
  LevelFunctionFit g_fit;  ///< fit of the operator value Q phi
  /// Anisotropic consistency: residual of 2 H(D phi) against f_fit
  /// (Euler's relation makes these equal).  Zero for isotropic operators.
  double h_consistency = 0.0;
  double tolerance = 1e-2;
  bool pass = false;
};

/// Fit f and g on the level structure of phi and check both residuals
/// against tol.  For the anisotropic operator the fit of 2 H(D phi) must
/// also agree with f_fit.  Interior nodes with |D phi| below the operator's
/// gradient floor raise an error listing the offending nodes.
IsoparametricVerdict isoparametric_residual(const ScalarField& phi, const QuasiLinearOperator& op,
                                            std::size_t n_knots = 0, double tol_iso = 1e-2);

/// Level-surface catalog labels.  The wulff_* labels are the anisotropic
/// analogues detected when a convex body is supplied.
enum class SurfaceType {
  sphere,
  spherical_cylinder,
  hyperplane,
  wulff_sphere,
  wulff_cylinder,
  unknown,
};

std::string to_string(SurfaceType type);

struct CurvatureCluster {
  double value = 0.0;
  int multiplicity = 0;
};

/// Geometric typing of one level surface from sampled principal curvatures.
struct SurfaceTypeReport {
  double level = 0.0;
  SurfaceType type = SurfaceType::unknown;
  int cylinder_rank = 0;                    ///< M for the cylinder labels
  std::vector<double> center;               ///< center / axis point / plane point
  std::vector<double> axis;                 ///< cylinder axis or plane normal (unit)
  std::vector<CurvatureCluster> clusters;   ///< multiplicities sum to N-1
  double fit_residual = 0.0;                ///< geometric fit residual (relative)
  std::size_t n_samples = 0;
};

/// Sample the level set {phi = s}, estimate principal curvatures (tangential
/// Weingarten eigenvalues when a body is given), cluster them, and match the
/// result against the catalog: sphere / spherical_cylinder(M) / hyperplane,
/// or their Wulff analogues.  Requires at least 10 (N - 1) samples.
SurfaceTypeReport classify_surface(const ScalarField& phi, double s,
                                   const std::optional<ConvexBody>& body = std::nullopt);

/// Orthonormal basis of the hyperplane orthogonal to nu, as the columns of
/// an N x (N-1) matrix.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& nu);

/// Cached first and second derivatives of one scalar field, with multilinear
/// evaluation at off-node points.  All geometric evaluators below take this
/// wrapper so that repeated point queries share one stencil sweep.
class FieldDerivatives {
 public:
  explicit FieldDerivatives(const ScalarField& field);

  const ScalarField& field() const { return field_; }
  const Grid& grid() const { return field_.grid(); }
  int dim() const { return field_.grid().dim(); }

  Eigen::VectorXd gradient_at(std::size_t node) const;
  Eigen::MatrixXd hessian_at(std::size_t node) const;

  /// Multilinear interpolation within the cell containing the point.  Throws
  /// Error when the point leaves the grid or touches exterior nodes.
  double value_at(std::span<const double> point) const;
  Eigen::VectorXd gradient_at(std::span<const double> point) const;
  Eigen::MatrixXd hessian_at(std::span<const double> point) const;

 private:
  ScalarField field_;
  VectorField grad_;
  SymmetricMatrixField hess_;
};

/// Anisotropic Weingarten operator W = D^2 h(nu) D^2 phi / |D phi| evaluated
/// through the scale-free form D^2 h(D phi) D^2 phi.
Eigen::MatrixXd weingarten(const FieldDerivatives& phi, std::span<const double> x,
                           const ConvexBody& body);

/// Anisotropic mean curvature
/// M = { tr(D^2 H(D phi) D^2 phi) - D phi . D^2 H D^2 phi D phi / |D phi|^2 } / h(D phi).
double aniso_mean_curvature(const FieldDerivatives& phi, std::span<const double> x,
                            const ConvexBody& body);

/// Residuals of the three differential identities satisfied by an
/// anisotropic isoparametric function, each normalized by the magnitude of
/// its participating terms:
///   sum:      D^2H D^2phi Dphi + D^2phi DH = f'(phi) Dphi
///   gradient: 2 D^2phi DH = f'(phi) Dphi
///   symmetry: D^2H D^2phi Dphi = D^2phi DH
struct IdentityResiduals {
  double sum = 0.0;
  double gradient = 0.0;
  double symmetry = 0.0;
  double max() const;
};

IdentityResiduals check_identities(const FieldDerivatives& phi, std::span<const double> x,
                                   const ConvexBody& body, const LevelFunctionFit& f_fit);

/// Shape restriction: max over tangent basis pairs (v, w) of
/// |v^T (W - D^2H(Dphi) D^2phi / h(Dphi)) w|.  The normal direction is
/// deliberately excluded; only tangential components are constrained.
double shape_restriction_check(const FieldDerivatives& phi, std::span<const double> x,
                               const ConvexBody& body);

/// Pointwise geometric summary used by surface typing and the verification
/// drivers: Weingarten operator, mean curvature, tangent frame and (when a
/// level fit is supplied) the identity residuals.
struct AnisoGeometry {
  Eigen::MatrixXd W;
  double M = 0.0;
  Eigen::MatrixXd tangent;  ///< N x (N-1) orthonormal tangent basis
  IdentityResiduals identities;
};

AnisoGeometry aniso_geometry(const FieldDerivatives& phi, std::span<const double> x,
                             const ConvexBody& body, const LevelFunctionFit* f_fit = nullptr);

/// Trace of the anisotropic gradient flow gamma' = DH(D phi(gamma)) from a
/// seed point, integrated with classical RK4 on the interpolated gradient.
struct GeodesicTrace {
  std::vector<double> taus;
  std::vector<std::vector<double>> points;  ///< traced positions, one per tau
  std::vector<double> levels;               ///< phi along the trace
  bool truncated = false;                   ///< left the domain (or gradient degenerated)
  double straightness = 0.0;       ///< max distance to the ray y + tau DH(D phi(y))
  double level_rate = 0.0;         ///< fitted d phi / d tau along the trace
  double level_rate_rms = 0.0;     ///< RMS deviation of phi(gamma) from that linear law
};

/// Integrate the flow for tau in [0, tau_max] with n_steps RK4 steps.  The
/// field should be normalized to unit gradient invariant (f == 1) so that
/// the level rate is 1.  A trace that exits the domain is returned truncated.
GeodesicTrace geodesic_trace(const ScalarField& phi, std::span<const double> y,
                             const ConvexBody& body, double tau_max, std::size_t n_steps);

/// Reparametrize phi by psi = F(phi) with F' = f^{-1/2}, integrating the
/// fitted f with a cumulative trapezoid rule over the knots (anchored at the
/// lowest knot).  A constant fit short-circuits to the exact linear rescale.
/// Throws Error when the fitted f is not positive on the level range.
ScalarField normalize_to_unit_f(const ScalarField& phi, const LevelFunctionFit& f_fit);

}  // namespace matzoh
