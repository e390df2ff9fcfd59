#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matzoh/grid.hpp"
#include "matzoh/invariance.hpp"
#include "matzoh/isoparametric.hpp"
#include "matzoh/operators.hpp"

namespace matzoh {

/// The trichotomy for solutions with time-invariant equipotential surfaces,
/// plus the two degenerate outcomes.
enum class Branch {
  isoparametric,  ///< (i)  level structure rigid: G phi = f(phi), Q phi = g(phi)
  eigen_split,    ///< (ii) u = a(t) phi_lambda + mu with a(tau) = 1
  linear_drift,   ///< (iii) u = gamma t + w
  mixed,          ///< conflicting per-level-interval labels (diagnostics kept)
  constant,       ///< spatially constant data, nothing to classify
};

std::string to_string(Branch branch);

/// Per-time affine fit of the level profile: eta(s, t) ~ a(t) s + b(t).
struct AffineEtaFit {
  std::vector<double> times;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> residual;  ///< per time: RMS deviation / range of eta
};

/// Weighted (by bin population) least-squares line through the usable bins
/// of the table, one fit per snapshot time.
AffineEtaFit fit_affine_eta(const EtaTable& table);

/// Time-factor law fitted to a(t): exponential decay rate for alpha == 0,
/// the power law a = (1 + lambda (t - tau))^{-1/alpha} otherwise.
struct TimeFactorFit {
  double lambda = 0.0;
  double lambda_stderr = 0.0;  ///< regression standard error of lambda
  /// Max normalized finite-difference residual of the governing ODE
  /// a^{alpha+1} a'' = (alpha + 1) a^alpha (a')^2 on the samples.
  double ode_residual = 0.0;
};

/// alpha == 0: lambda is the regression slope of -log a on (t - tau);
/// otherwise the slope of a^{-alpha} - 1 on (t - tau).  Throws
/// Error("sign change in time factor") when any sample is not positive.
TimeFactorFit fit_time_factor(std::span<const double> a_samples, std::span<const double> times,
                              double tau, double alpha);

/// Verdict for one maximal run of level bins between critical levels.
struct IntervalReport {
  std::size_t bin_lo = 0;  ///< usable-lattice index range (inclusive)
  std::size_t bin_hi = 0;
  double s_lo = 0.0;  ///< level range covered by the interval
  double s_hi = 0.0;
  Branch branch = Branch::mixed;
  bool det_nonzero = false;  ///< any significant determinant point inside
  double lambda = 0.0;
  double lambda_stderr = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double ode_residual = 0.0;
  double affine_residual = 0.0;  ///< max per-time affine fit residual
};

struct ClassifyOptions {
  std::size_t n_bins = 0;       ///< 0: square-root rule
  std::size_t n_knots = 0;      ///< level-fit knots for the branch-(i) handoff
  double tol_inv = 1e-2;        ///< invariance gate on spread / range
  double tol_iso = 1e-2;        ///< handoff fit tolerance
  double lambda_floor = 1e-9;   ///< |lambda| below max(3 SE, floor) counts as zero
  double noise_floor = 1e-4;    ///< minimum assumed data noise for the mixed guard
  bool type_surfaces = true;    ///< run surface typing on branch (i)
};

struct ClassificationReport {
  Branch branch = Branch::constant;
  double alpha = 0.0;   ///< homogeneity degree of the operator
  double lambda = 0.0;  ///< decay rate (branch ii); zero otherwise
  double lambda_stderr = 0.0;
  double mu = 0.0;      ///< additive offset (branch ii); zero otherwise
  double gamma = 0.0;   ///< drift rate (branch iii); zero otherwise

  struct Residuals {
    double invariance = 0.0;      ///< max per-time level spread / range
    double ode = 0.0;             ///< time-factor ODE residual (branch ii/iii)
    double pde = 0.0;             ///< eigen / drift / fit residual per branch
    double representation = 0.0;  ///< reconstruction error (branch ii/iii)
  } residuals;

  std::vector<double> critical_levels;  ///< levels where |D phi| sits below the floor
  std::vector<IntervalReport> intervals;

  EtaTable table;
  EtaPartials partials;
  DeterminantReport determinant;
  AffineEtaFit affine;  ///< diagnostic fit over the full usable lattice
  std::vector<double> invariance_residuals;

  std::optional<ScalarField> phi_lambda;       ///< branch (ii): phi - mu
  std::optional<ScalarField> w;                ///< branch (iii): reference snapshot
  std::optional<IsoparametricVerdict> iso;     ///< branch (i) handoff
  std::optional<SurfaceTypeReport> surface;    ///< branch (i) level typing
};

/// Decision procedure over an equipotential-invariant series: constant gate,
/// invariance gate (throws NotInvariantError), critical-level splitting,
/// determinant test, then the affine/time-factor recovery of (ii)/(iii).
ClassificationReport classify(const TimeSeriesField& series, const QuasiLinearOperator& op,
                              const ClassifyOptions& options = {});
ClassificationReport classify(const TimeSeriesField& series, const QuasiLinearOperator& op,
                              std::size_t n_bins);

/// Max over active nodes and times of |u - reconstruction| / range, where
/// the reconstruction uses the recovered branch formula.  Requires branch
/// eigen_split or linear_drift.
double verify_representation(const ClassificationReport& report, const TimeSeriesField& series);

}  // namespace matzoh
