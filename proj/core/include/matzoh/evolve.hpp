#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "matzoh/grid.hpp"
#include "matzoh/operators.hpp"

namespace matzoh {

/// Boundary handling for the explicit time stepper.
///
///   dirichlet  - boundary nodes pinned to prescribed values; an
///                optional additive time profile (zero at the start
///                time by the caller's convention) manufactures
///                linear-drift solutions whose boundary data moves in
///                lockstep with the interior.
///   neumann    - homogeneous u_nu = 0 via ghost values mirrored
///                across the boundary faces (ghost = boundary value),
///                which makes the update a discrete flux balance and
///                conserves the plain node sum exactly up to rounding.
///   frozen     - boundary nodes keep whatever value the running field
///                currently holds (the initial values, under run()).
class BoundaryCondition {
 public:
  enum class Kind { dirichlet, neumann, frozen };

  /// `values` is a dense per-node array (grid size); only boundary-node
  /// entries are read, and those must be finite.
  static BoundaryCondition dirichlet(std::vector<double> values,
                                     std::function<double(double)> time_offset = nullptr);
  /// Capture the field's current boundary values as the Dirichlet data.
  static BoundaryCondition dirichlet_from(const ScalarField& field,
                                          std::function<double(double)> time_offset = nullptr);
  static BoundaryCondition neumann();
  static BoundaryCondition frozen();

  Kind kind() const { return kind_; }
  bool has_time_offset() const { return static_cast<bool>(time_offset_); }

  /// Dirichlet value of a boundary node at time t.
  double value_at(std::size_t node, double t) const;

 private:
  BoundaryCondition() = default;

  Kind kind_ = Kind::frozen;
  std::vector<double> values_;
  std::function<double(double)> time_offset_;
};

struct EvolveConfig {
  /// Fixed step size; unset means automatic (the CFL bound scaled by
  /// cfl_safety, recomputed as the field evolves for gradient-dependent
  /// operators).
  std::optional<double> dt;
  /// Strictly increasing times at which snapshots are emitted, all at
  /// or after the initial field's time tag.
  std::vector<double> snapshot_times;
  /// Fraction of the CFL bound used by automatic stepping, in (0, 1].
  double cfl_safety = 0.9;
};

/// Largest stable explicit step: min_axes(spacing^2) / (2 N Lambda)
/// scaled by cfl_safety, where Lambda is the largest eigenvalue of the
/// coefficient matrix a(Du) over interior nodes.  Throws
/// Error("degenerate operator") when Lambda vanishes.
double cfl_dt(const QuasiLinearOperator& op, const ScalarField& field, double cfl_safety = 1.0);

/// One forward-Euler step u <- u + dt * Q u at interior nodes, boundary
/// nodes per the boundary condition.  dt must not exceed the CFL bound.
/// The result's time tag advances by dt.
ScalarField step(const ScalarField& field, const QuasiLinearOperator& op,
                 const BoundaryCondition& bc, double dt);

/// March the initial field across all snapshot times, emitting each
/// snapshot by linear interpolation in time between the two enclosing
/// steps.  Non-finite values abort with NumericalError carrying the
/// first offending step index.
TimeSeriesField run(const ScalarField& initial, const QuasiLinearOperator& op,
                    const BoundaryCondition& bc, const EvolveConfig& config);

}  // namespace matzoh
