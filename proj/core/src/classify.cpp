#include "matzoh/classify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "matzoh/calculus.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/stats.hpp"

namespace matzoh {
namespace {

constexpr double kTiny = 1e-300;

/// Index of the level bin holding value v, in the binning of the table.
std::size_t bin_of(const EtaTable& table, double v) {
  const double s_min = table.s_bins.front() - 0.5 * table.bin_width;
  const double t = (v - s_min) / table.bin_width;
  if (t <= 0.0) return 0;
  const auto bin = static_cast<std::size_t>(t);
  return std::min(bin, table.n_bins() - 1);
}

/// Affine fit of eta over a contiguous range of usable-lattice bins,
/// weighted by bin population, one line per snapshot time.
AffineEtaFit fit_affine_range(const EtaTable& table, std::size_t lo, std::size_t hi) {
  const std::size_t n_times = table.n_times();
  const std::size_t m = hi - lo + 1;
  std::vector<double> x(m), wts(m), y(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t bin = table.usable[lo + k];
    x[k] = table.s_means[bin];
    wts[k] = static_cast<double>(table.counts[bin]);
  }

  AffineEtaFit fit;
  fit.times = table.times;
  fit.a.resize(n_times);
  fit.b.resize(n_times);
  fit.residual.resize(n_times);
  for (std::size_t j = 0; j < n_times; ++j) {
    for (std::size_t k = 0; k < m; ++k) y[k] = table.eta_at(table.usable[lo + k], j);
    const LineFit lf = fit_line(x, y, wts);
    fit.a[j] = lf.slope;
    fit.b[j] = lf.intercept;
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    fit.residual[j] = lf.rms_residual / std::max({*ymax - *ymin, lf.rms_residual, kTiny});
  }
  return fit;
}

/// Interior nodes eligible for pointwise operator evaluation (gradient above
/// the floor) together with the quasi-linear operator value there.
struct PointwiseQ {
  std::vector<std::size_t> nodes;
  std::vector<double> values;
};

PointwiseQ pointwise_q(const ScalarField& phi, const QuasiLinearOperator& op) {
  const VectorField grad = gradient(phi);
  const SymmetricMatrixField hess = hessian(phi);
  const int dim = phi.grid().dim();

  PointwiseQ out;
  Eigen::VectorXd xi(dim);
  for (const std::size_t node : phi.mask().interior_nodes()) {
    const auto g = grad.at(node);
    for (int k = 0; k < dim; ++k) xi[k] = g[static_cast<std::size_t>(k)];
    if (xi.norm() < op.gradient_floor()) continue;
    const Eigen::MatrixXd a = op.coefficients(xi);
    double acc = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) {
        const double aij = a(i, j);
        if (aij == 0.0) continue;
        const double hij = hess.entry(node, i, j);
        acc += (i == j) ? aij * hij : 2.0 * aij * hij;
      }
    out.nodes.push_back(node);
    out.values.push_back(acc);
  }
  return out;
}

}  // namespace

std::string to_string(Branch branch) {
  switch (branch) {
    case Branch::isoparametric: return "isoparametric";
    case Branch::eigen_split: return "eigen_split";
    case Branch::linear_drift: return "linear_drift";
    case Branch::mixed: return "mixed";
    case Branch::constant: return "constant";
  }
  return "mixed";
}

AffineEtaFit fit_affine_eta(const EtaTable& table) {
  if (table.usable.size() < 2)
    throw ConfigError("fit_affine_eta: need at least two usable bins");
  return fit_affine_range(table, 0, table.usable.size() - 1);
}

TimeFactorFit fit_time_factor(std::span<const double> a_samples, std::span<const double> times,
                              double tau, double alpha) {
  const std::size_t n = a_samples.size();
  if (n != times.size()) throw ConfigError("fit_time_factor: sample/time size mismatch");
  if (n < 3) throw ConfigError("fit_time_factor: need at least three samples");
  for (const double a : a_samples)
    if (!(a > 0.0)) throw Error("sign change in time factor");

  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = times[i] - tau;
    y[i] = (alpha == 0.0) ? -std::log(a_samples[i]) : std::pow(a_samples[i], -alpha) - 1.0;
  }
  const LineFit lf = fit_line(x, y);

  TimeFactorFit fit;
  fit.lambda = lf.slope;
  fit.lambda_stderr = lf.slope_stderr;

  // Finite-difference check of a^{alpha+1} a'' = (alpha+1) a^alpha (a')^2.
  // Five-point stencils on uniform samples keep the truncation error at
  // fourth order; edges and nonuniform spacings fall back to three points.
  bool uniform = true;
  const double h0 = times[1] - times[0];
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (std::abs((times[i + 1] - times[i]) - h0) > 1e-9 * std::abs(h0)) uniform = false;

  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double d1 = 0.0, d2 = 0.0;
    if (uniform && n >= 5 && i >= 2 && i + 2 < n) {
      d1 = d1_central5(a_samples.data() + i - 2, h0);
      d2 = d2_central5(a_samples.data() + i - 2, h0);
    } else {
      const ThreePointStencil w1 = d1_weights3(times[i - 1], times[i], times[i + 1], 1);
      const ThreePointStencil w2 = d2_weights3(times[i - 1], times[i], times[i + 1]);
      d1 = w1.w0 * a_samples[i - 1] + w1.w1 * a_samples[i] + w1.w2 * a_samples[i + 1];
      d2 = w2.w0 * a_samples[i - 1] + w2.w1 * a_samples[i] + w2.w2 * a_samples[i + 1];
    }
    const double a = a_samples[i];
    const double term1 = std::pow(a, alpha + 1.0) * d2;
    const double term2 = (alpha + 1.0) * std::pow(a, alpha) * d1 * d1;
    const double scale = std::max(std::abs(term1), std::abs(term2));
    if (scale > 0.0) worst = std::max(worst, std::abs(term1 - term2) / scale);
  }
  fit.ode_residual = worst;
  return fit;
}

ClassificationReport classify(const TimeSeriesField& series, const QuasiLinearOperator& op,
                              std::size_t n_bins) {
  ClassifyOptions options;
  options.n_bins = n_bins;
  return classify(series, op, options);
}

ClassificationReport classify(const TimeSeriesField& series, const QuasiLinearOperator& op,
                              const ClassifyOptions& options) {
  if (op.dim() != series.grid().dim())
    throw ConfigError("classify: operator dimension does not match the series");

  ClassificationReport report;
  report.alpha = op.alpha();

  // Spatially constant snapshots carry no level structure at all.
  double global_range = 0.0;
  double global_scale = 0.0;
  for (std::size_t j = 0; j < series.size(); ++j) {
    const ScalarField& u = series.snapshot(j);
    global_range = std::max(global_range, u.range());
    global_scale = std::max({global_scale, std::abs(u.min()), std::abs(u.max())});
  }
  if (global_range <= 1e-12 * std::max(1.0, global_scale)) {
    report.branch = Branch::constant;
    return report;
  }

  const std::size_t n_bins =
      options.n_bins != 0 ? options.n_bins : default_n_bins(series.mask());
  report.table = build_eta(series, n_bins);

  report.invariance_residuals = invariance_residual(report.table);
  report.residuals.invariance = 0.0;
  for (const double r : report.invariance_residuals)
    report.residuals.invariance = std::max(report.residuals.invariance, r);
  if (report.residuals.invariance > options.tol_inv)
    throw NotInvariantError("not equipotential-invariant", report.invariance_residuals,
                            report.table.times, options.tol_inv);

  // Critical levels: bins holding an interior node whose gradient sits
  // below the operator floor.  They split the analysis into independently
  // classified level intervals.
  const ScalarField& phi = series.snapshot(0);
  const VectorField grad = gradient(phi);
  std::vector<std::uint8_t> bin_critical(report.table.n_bins(), 0);
  for (const std::size_t node : phi.mask().interior_nodes())
    if (grad.norm2(node) < op.gradient_floor())
      bin_critical[bin_of(report.table, phi.value(node))] = 1;
  for (std::size_t b = 0; b < bin_critical.size(); ++b)
    if (bin_critical[b]) report.critical_levels.push_back(report.table.s_means[b]);

  const bool heat_path = op.kind() == QuasiLinearOperator::Kind::heat;
  report.partials = eta_partials(
      report.table, heat_path ? std::nullopt : std::optional<double>(op.alpha()));
  report.determinant =
      heat_path ? determinant_D(report.partials) : determinant_xi(report.partials);
  report.affine = fit_affine_eta(report.table);

  // Maximal runs of usable bins between critical levels, at least three
  // bins wide so that the lattice statistics are meaningful.
  const std::size_t n_usable = report.table.usable.size();
  const std::size_t n_times = report.table.n_times();
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t k = 0; k < n_usable;) {
    if (bin_critical[report.table.usable[k]]) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end + 1 < n_usable && !bin_critical[report.table.usable[end + 1]]) ++end;
    if (end - k + 1 >= 3) runs.emplace_back(k, end);
    k = end + 1;
  }
  if (runs.empty())
    throw Error("insufficient level resolution: no classifiable interval between critical levels");

  const double tau = series.reference_time();
  const double noise_floor = std::max(report.residuals.invariance, options.noise_floor);
  for (const auto& [lo, hi] : runs) {
    IntervalReport interval;
    interval.bin_lo = lo;
    interval.bin_hi = hi;
    const std::size_t g_lo = report.table.usable[lo];
    const std::size_t g_hi = report.table.usable[hi];
    interval.s_lo = report.table.s_bins[g_lo] - 0.5 * report.table.bin_width;
    interval.s_hi = report.table.s_bins[g_hi] + 0.5 * report.table.bin_width;

    for (std::size_t b = lo; b <= hi && !interval.det_nonzero; ++b) {
      // A level stencil at the end of an inner run straddles a critical
      // level, where the law may change; such lattice points carry no
      // evidence about the run itself.  (At the ends of the whole
      // lattice the one-sided stencils stay inside the run.)
      if ((b == lo && lo > 0) || (b == hi && hi + 1 < n_usable)) continue;
      for (std::size_t j = 0; j < n_times; ++j)
        if (report.determinant.significant[b * n_times + j]) {
          interval.det_nonzero = true;
          break;
        }
    }

    if (interval.det_nonzero) {
      interval.branch = Branch::isoparametric;
      report.intervals.push_back(std::move(interval));
      continue;
    }

    const AffineEtaFit affine = fit_affine_range(report.table, lo, hi);
    for (const double r : affine.residual)
      interval.affine_residual = std::max(interval.affine_residual, r);
    if (interval.affine_residual > 10.0 * noise_floor) {
      // The determinant test says affine but the fit disagrees: the data
      // does not fit the dichotomy at this noise level.
      interval.branch = Branch::mixed;
      report.intervals.push_back(std::move(interval));
      continue;
    }

    const TimeFactorFit factor = fit_time_factor(affine.a, affine.times, tau, op.alpha());
    interval.lambda = factor.lambda;
    interval.lambda_stderr = factor.lambda_stderr;
    interval.ode_residual = factor.ode_residual;
    const bool lambda_zero =
        std::abs(factor.lambda) <=
        std::max(3.0 * factor.lambda_stderr, options.lambda_floor);
    if (lambda_zero) {
      interval.branch = Branch::linear_drift;
      interval.lambda = 0.0;
      // With a(t) = 1 both ODE terms vanish identically and their
      // finite-difference ratio is pure rounding noise, so the reported
      // check is the constancy of the time factor itself.
      interval.ode_residual = 0.0;
      for (const double a : affine.a)
        interval.ode_residual = std::max(interval.ode_residual, std::abs(a - 1.0));
      std::vector<double> dt(n_times);
      for (std::size_t j = 0; j < n_times; ++j) dt[j] = affine.times[j] - tau;
      interval.gamma = fit_line(dt, affine.b).slope;
    } else {
      interval.branch = Branch::eigen_split;
      // b(t) = mu (1 - a(t)): recover the offset by regression through the
      // origin, which is exact for ideal data at every time, then absorb
      // the drift into mu (gamma is reported as zero on this branch).
      std::vector<double> one_minus_a(n_times);
      double sxx = 0.0;
      for (std::size_t j = 0; j < n_times; ++j) {
        one_minus_a[j] = 1.0 - affine.a[j];
        sxx += one_minus_a[j] * one_minus_a[j];
      }
      interval.mu = sxx > 1e-30 ? fit_through_origin(one_minus_a, affine.b) : 0.0;
    }
    report.intervals.push_back(std::move(interval));
  }

  // Merge the interval labels; disagreement (or an interval that fits no
  // branch) is reported as mixed rather than forced.
  const IntervalReport* winner = &report.intervals.front();
  bool conflict = false;
  for (const auto& interval : report.intervals) {
    if (interval.branch != winner->branch || interval.branch == Branch::mixed) conflict = true;
    if (interval.bin_hi - interval.bin_lo > winner->bin_hi - winner->bin_lo) winner = &interval;
  }
  conflict = conflict && report.intervals.size() > 1;
  if (conflict || winner->branch == Branch::mixed) {
    report.branch = Branch::mixed;
    return report;
  }

  report.branch = winner->branch;
  if (report.branch == Branch::isoparametric) {
    // Restrict the field to the non-critical level range and hand off to
    // the level-structure fits.
    ScalarField restricted = phi;
    if (!report.critical_levels.empty()) {
      std::vector<MaskLabel> labels(phi.grid().size(), MaskLabel::exterior);
      for (const std::size_t node : phi.mask().active_nodes())
        if (!bin_critical[bin_of(report.table, phi.value(node))])
          labels[node] = phi.mask().label(node);
      auto mask = std::make_shared<DomainMask>(DomainMask::from_labels(phi.grid_ptr(), labels));
      std::vector<double> values(phi.values().begin(), phi.values().end());
      restricted = ScalarField(phi.grid_ptr(), std::move(mask), std::move(values), phi.time());
    }
    report.iso = isoparametric_residual(restricted, op, options.n_knots, options.tol_iso);
    report.residuals.pde = std::max(report.iso->f_fit.residual, report.iso->g_fit.residual);
    if (options.type_surfaces) {
      const std::size_t mid = (winner->bin_lo + winner->bin_hi) / 2;
      const double level = report.partials.s[mid];
      std::optional<ConvexBody> body;
      if (op.kind() == QuasiLinearOperator::Kind::h_laplace) body = op.body();
      try {
        report.surface = classify_surface(restricted, level, body);
      } catch (const Error&) {
        report.surface.reset();  // typing is best-effort; fits stand on their own
      }
    }
    return report;
  }

  report.lambda = winner->lambda;
  report.lambda_stderr = winner->lambda_stderr;
  report.mu = winner->mu;
  report.gamma = winner->gamma;
  report.residuals.ode = winner->ode_residual;

  const PointwiseQ q = pointwise_q(phi, op);
  if (report.branch == Branch::eigen_split) {
    std::vector<double> values(phi.values().begin(), phi.values().end());
    for (const std::size_t node : phi.mask().active_nodes()) values[node] -= report.mu;
    report.phi_lambda = ScalarField(phi.grid_ptr(), phi.mask_ptr(), std::move(values), phi.time());

    const double kappa = report.alpha == 0.0 ? report.lambda : report.lambda / report.alpha;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double eigen_term = kappa * (phi.value(q.nodes[i]) - report.mu);
      const double r = q.values[i] + eigen_term;
      num += r * r;
      den += eigen_term * eigen_term;
    }
    const double n = std::max<double>(1.0, static_cast<double>(q.nodes.size()));
    report.residuals.pde = std::sqrt(num / n) / std::max(std::sqrt(den / n), kTiny);
  } else {
    report.w = phi;
    double worst = 0.0;
    for (const double v : q.values) worst = std::max(worst, std::abs(v - report.gamma));
    report.residuals.pde = worst;
  }
  report.residuals.representation = verify_representation(report, series);
  return report;
}

double verify_representation(const ClassificationReport& report, const TimeSeriesField& series) {
  if (report.branch != Branch::eigen_split && report.branch != Branch::linear_drift)
    throw ConfigError("verify_representation: branch has no closed-form representation");
  const ScalarField* profile =
      report.branch == Branch::eigen_split
          ? (report.phi_lambda ? &*report.phi_lambda : nullptr)
          : (report.w ? &*report.w : nullptr);
  if (profile == nullptr)
    throw ConfigError("verify_representation: report carries no recovered profile");

  const double tau = series.reference_time();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < series.size(); ++j) {
    lo = std::min(lo, series.snapshot(j).min());
    hi = std::max(hi, series.snapshot(j).max());
  }
  const double denom = std::max(hi - lo, kTiny);

  double worst = 0.0;
  for (std::size_t j = 0; j < series.size(); ++j) {
    const ScalarField& u = series.snapshot(j);
    const double dt = series.times()[j] - tau;
    double factor = 0.0;
    if (report.branch == Branch::eigen_split) {
      if (report.alpha == 0.0) {
        factor = std::exp(-report.lambda * dt);
      } else {
        const double base = 1.0 + report.lambda * dt;
        if (!(base > 0.0))
          throw Error("time factor leaves its domain before the last snapshot");
        factor = std::pow(base, -1.0 / report.alpha);
      }
    }
    for (const std::size_t node : u.mask().active_nodes()) {
      const double recon = report.branch == Branch::eigen_split
                               ? factor * profile->value(node) + report.mu
                               : report.gamma * dt + profile->value(node);
      worst = std::max(worst, std::abs(u.value(node) - recon));
    }
  }
  return worst / denom;
}

}  // namespace matzoh
