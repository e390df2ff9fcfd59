#include "matzoh/evolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "matzoh/calculus.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/parallel.hpp"

namespace matzoh {

namespace {

double max_coefficient_eigenvalue(const QuasiLinearOperator& op, const ScalarField& field) {
  using Kind = QuasiLinearOperator::Kind;
  switch (op.kind()) {
    case Kind::heat:
      return 1.0;
    case Kind::normalized_p_laplace:
      return std::max(op.p() - 1.0, 1.0);
    case Kind::p_laplace: {
      // Eigenvalues of |xi|^{p-2}(I + (p-2) n n^T) are |xi|^{p-2} {p-1, 1}.
      const VectorField grad = gradient(field);
      const double floor = op.gradient_floor();
      double lambda = 0.0;
      for (std::size_t node : field.mask().interior_nodes()) {
        double r = grad.norm2(node);
        if (op.alpha() < 0.0) r = std::max(r, floor);
        lambda = std::max(lambda, std::pow(r, op.alpha()));
      }
      return lambda * std::max(op.p() - 1.0, 1.0);
    }
    case Kind::h_laplace: {
      // D^2 H is 0-homogeneous: sample its spectrum over the gradient
      // directions actually present.
      const VectorField grad = gradient(field);
      const double floor = op.gradient_floor();
      const int n = field.grid().dim();
      double lambda = 0.0;
      bool any = false;
      Eigen::VectorXd xi(n);
      for (std::size_t node : field.mask().interior_nodes()) {
        const std::span<const double> g = grad.at(node);
        for (int c = 0; c < n; ++c) xi[c] = g[static_cast<std::size_t>(c)];
        if (xi.norm() < floor) continue;
        any = true;
        const Eigen::MatrixXd a = op.coefficients(xi);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()),
                                                           Eigen::EigenvaluesOnly);
        lambda = std::max(lambda, eig.eigenvalues().maxCoeff());
      }
      if (!any) throw Error("degenerate operator: no usable gradient direction for the stability bound");
      return lambda;
    }
  }
  return 0.0;
}

/// Flux-form explicit heat step with zero-flux faces: every active node
/// is updated by the balance of edge differences, a missing or exterior
/// neighbor contributing no flux.  Summing the update over all nodes
/// telescopes to zero, so the plain node sum is conserved to rounding.
std::vector<double> neumann_heat_step(const ScalarField& field, double dt) {
  const Grid& grid = field.grid();
  const DomainMask& mask = field.mask();
  const int n = grid.dim();
  std::vector<double> inv_h2(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) inv_h2[static_cast<std::size_t>(k)] = 1.0 / (grid.spacing(k) * grid.spacing(k));

  std::vector<double> out(grid.size(), 0.0);
  const auto& nodes = mask.active_nodes();
  parallel_for(nodes.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t node = nodes[i];
      const double u = field.value(node);
      double acc = 0.0;
      for (int axis = 0; axis < n; ++axis) {
        double flux = 0.0;
        if (const auto left = grid.neighbor(node, axis, -1); left && !mask.is_exterior(*left))
          flux += field.value(*left) - u;
        if (const auto right = grid.neighbor(node, axis, +1); right && !mask.is_exterior(*right))
          flux += field.value(*right) - u;
        acc += flux * inv_h2[static_cast<std::size_t>(axis)];
      }
      out[node] = u + dt * acc;
    }
  }, 2048);
  return out;
}

/// Final assembly of a stepped field.  Non-finite entries (overflow,
/// NaN boundary data) are a numerical event, not a configuration
/// mistake, so they are reported as Error rather than through the
/// field constructor's ConfigError validation.
ScalarField assemble_step(const ScalarField& src, std::vector<double> out, double t_new) {
  for (std::size_t node : src.mask().active_nodes())
    if (!std::isfinite(out[node])) throw Error("step produced a non-finite value");
  return ScalarField(src.grid_ptr(), src.mask_ptr(), std::move(out), t_new);
}

ScalarField step_unchecked(const ScalarField& field, const QuasiLinearOperator& op,
                           const BoundaryCondition& bc, double dt) {
  const double t_new = field.time().value_or(0.0) + dt;

  if (bc.kind() == BoundaryCondition::Kind::neumann) {
    if (op.kind() != QuasiLinearOperator::Kind::heat)
      throw ConfigError("homogeneous Neumann stepping is implemented for the heat operator only");
    return assemble_step(field, neumann_heat_step(field, dt), t_new);
  }

  const ScalarField rate = apply_Q(op, field);
  std::vector<double> out(field.grid().size(), 0.0);
  for (std::size_t node : field.mask().interior_nodes())
    out[node] = field.value(node) + dt * rate.value(node);
  for (std::size_t node : field.mask().boundary_nodes()) {
    out[node] = bc.kind() == BoundaryCondition::Kind::frozen ? field.value(node)
                                                             : bc.value_at(node, t_new);
  }
  return assemble_step(field, std::move(out), t_new);
}

}  // namespace

BoundaryCondition BoundaryCondition::dirichlet(std::vector<double> values,
                                               std::function<double(double)> time_offset) {
  BoundaryCondition bc;
  bc.kind_ = Kind::dirichlet;
  bc.values_ = std::move(values);
  bc.time_offset_ = std::move(time_offset);
  return bc;
}

BoundaryCondition BoundaryCondition::dirichlet_from(const ScalarField& field,
                                                    std::function<double(double)> time_offset) {
  std::vector<double> values(field.grid().size(), 0.0);
  for (std::size_t node : field.mask().boundary_nodes()) values[node] = field.value(node);
  return dirichlet(std::move(values), std::move(time_offset));
}

BoundaryCondition BoundaryCondition::neumann() {
  BoundaryCondition bc;
  bc.kind_ = Kind::neumann;
  return bc;
}

BoundaryCondition BoundaryCondition::frozen() {
  BoundaryCondition bc;
  bc.kind_ = Kind::frozen;
  return bc;
}

double BoundaryCondition::value_at(std::size_t node, double t) const {
  if (kind_ != Kind::dirichlet) throw ConfigError("boundary condition carries no Dirichlet data");
  if (node >= values_.size()) throw ConfigError("boundary condition: node out of range");
  const double base = values_[node];
  if (!std::isfinite(base)) throw ConfigError("boundary condition: non-finite Dirichlet value");
  return time_offset_ ? base + time_offset_(t) : base;
}

double cfl_dt(const QuasiLinearOperator& op, const ScalarField& field, double cfl_safety) {
  if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
    throw ConfigError("cfl_safety must lie in (0, 1]");
  const Grid& grid = field.grid();
  if (grid.dim() != op.dim()) throw ConfigError("cfl_dt: operator/field dimension mismatch");
  const double lambda = max_coefficient_eigenvalue(op, field);
  if (!(lambda > 0.0)) throw Error("degenerate operator: stability bound has no positive eigenvalue");
  const double h = grid.min_spacing();
  return cfl_safety * h * h / (2.0 * grid.dim() * lambda);
}

ScalarField step(const ScalarField& field, const QuasiLinearOperator& op,
                 const BoundaryCondition& bc, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("step: dt must be positive and finite");
  const double bound = cfl_dt(op, field, 1.0);
  if (dt > bound * (1.0 + 1e-12))
    throw ConfigError("step: dt " + std::to_string(dt) + " exceeds the stability bound " +
                      std::to_string(bound));
  return step_unchecked(field, op, bc, dt);
}

TimeSeriesField run(const ScalarField& initial, const QuasiLinearOperator& op,
                    const BoundaryCondition& bc, const EvolveConfig& config) {
  if (config.snapshot_times.empty()) throw ConfigError("run: no snapshot times given");
  for (std::size_t i = 1; i < config.snapshot_times.size(); ++i)
    if (!(config.snapshot_times[i] > config.snapshot_times[i - 1]))
      throw ConfigError("run: snapshot times must be strictly increasing");
  if (!(config.cfl_safety > 0.0) || config.cfl_safety > 1.0)
    throw ConfigError("run: cfl_safety must lie in (0, 1]");

  const double t0 = initial.time().value_or(0.0);
  const double time_scale = std::max({1.0, std::fabs(t0), std::fabs(config.snapshot_times.back())});
  const double time_slack = 1e-12 * time_scale;
  if (config.snapshot_times.front() < t0 - time_slack)
    throw ConfigError("run: snapshot times must not precede the initial time");

  // The heat bound does not depend on the field; gradient-dependent
  // operators re-evaluate it as the solution evolves.
  const bool fixed_bound = op.kind() == QuasiLinearOperator::Kind::heat ||
                           op.kind() == QuasiLinearOperator::Kind::normalized_p_laplace;
  double bound = cfl_dt(op, initial, 1.0);
  if (config.dt && (!(*config.dt > 0.0) || !std::isfinite(*config.dt)))
    throw ConfigError("run: dt must be positive and finite");

  std::vector<ScalarField> snapshots;
  snapshots.reserve(config.snapshot_times.size());
  std::size_t next_snapshot = 0;

  ScalarField prev(initial);
  prev.set_time(t0);
  while (next_snapshot < config.snapshot_times.size() &&
         config.snapshot_times[next_snapshot] <= t0 + time_slack) {
    ScalarField snap(prev);
    snap.set_time(config.snapshot_times[next_snapshot]);
    snapshots.push_back(std::move(snap));
    ++next_snapshot;
  }

  const double t_last = config.snapshot_times.back();
  double t_prev = t0;
  std::size_t step_index = 0;
  while (next_snapshot < config.snapshot_times.size()) {
    if (!fixed_bound && step_index > 0) bound = cfl_dt(op, prev, 1.0);
    double dt = config.dt ? *config.dt : config.cfl_safety * bound;
    if (dt > bound * (1.0 + 1e-12))
      throw ConfigError("run: dt " + std::to_string(dt) + " exceeds the stability bound " +
                        std::to_string(bound));
    // Do not overshoot the final snapshot by a whole step.
    dt = std::min(dt, t_last - t_prev + 2.0 * time_slack);

    ScalarField cur = [&] {
      try {
        return step_unchecked(prev, op, bc, dt);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw NumericalError("time stepping failed at step " + std::to_string(step_index) + ": " +
                                 e.what(),
                             step_index);
      }
    }();
    const double t_cur = t_prev + dt;
    ++step_index;

    while (next_snapshot < config.snapshot_times.size() &&
           config.snapshot_times[next_snapshot] <= t_cur + time_slack) {
      const double s = config.snapshot_times[next_snapshot];
      const double w = std::clamp((s - t_prev) / (t_cur - t_prev), 0.0, 1.0);
      std::vector<double> values(prev.grid().size(), 0.0);
      for (std::size_t node : prev.mask().active_nodes())
        values[node] = (1.0 - w) * prev.value(node) + w * cur.value(node);
      snapshots.emplace_back(prev.grid_ptr(), prev.mask_ptr(), std::move(values), s);
      ++next_snapshot;
    }

    prev = std::move(cur);
    t_prev = t_cur;
  }

  return TimeSeriesField(std::move(snapshots));
}

}  // namespace matzoh
