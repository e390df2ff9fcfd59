#include "matzoh/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "matzoh/calculus.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/parallel.hpp"
#include "matzoh/stats.hpp"

namespace matzoh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// d/dx of a row/column of lattice values against nonuniform abscissas,
/// three-point, centered away from the ends.
void lattice_d1(const std::vector<double>& x, std::size_t count, std::size_t stride,
                const double* in, double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t lo = i == 0 ? 0 : (i == count - 1 ? count - 3 : i - 1);
    const int at = static_cast<int>(i - lo);
    const ThreePointStencil w = d1_weights3(x[lo], x[lo + 1], x[lo + 2], at);
    out[i * stride] =
        w.w0 * in[lo * stride] + w.w1 * in[(lo + 1) * stride] + w.w2 * in[(lo + 2) * stride];
  }
}

/// d2/dx2, same pattern (the three-point second-difference weights do
/// not depend on the evaluation point).
void lattice_d2(const std::vector<double>& x, std::size_t count, std::size_t stride,
                const double* in, double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t lo = i == 0 ? 0 : (i == count - 1 ? count - 3 : i - 1);
    const ThreePointStencil w = d2_weights3(x[lo], x[lo + 1], x[lo + 2]);
    out[i * stride] =
        w.w0 * in[lo * stride] + w.w1 * in[(lo + 1) * stride] + w.w2 * in[(lo + 2) * stride];
  }
}

/// Derivative of every row (along t) or every column (along s).
enum class Axis { s, t };

std::vector<double> lattice_derivative(const EtaPartials& p, const std::vector<double>& in,
                                       Axis axis, int order) {
  const std::size_t B = p.n_s();
  const std::size_t T = p.n_t();
  std::vector<double> out(in.size(), 0.0);
  if (axis == Axis::t) {
    for (std::size_t b = 0; b < B; ++b) {
      const double* row_in = in.data() + b * T;
      double* row_out = out.data() + b * T;
      if (order == 1)
        lattice_d1(p.times, T, 1, row_in, row_out);
      else
        lattice_d2(p.times, T, 1, row_in, row_out);
    }
  } else {
    for (std::size_t j = 0; j < T; ++j) {
      const double* col_in = in.data() + j;
      double* col_out = out.data() + j;
      if (order == 1)
        lattice_d1(p.s, B, T, col_in, col_out);
      else
        lattice_d2(p.s, B, T, col_in, col_out);
    }
  }
  return out;
}

DeterminantReport make_report(const EtaPartials& p, const std::vector<double>& det,
                              const std::vector<double>& f_num_a,
                              const std::vector<double>& f_num_b,
                              const std::vector<double>& g_num_a,
                              const std::vector<double>& g_num_b) {
  DeterminantReport report;
  report.det = det;
  report.median_abs = median_abs(det);
  const double cutoff =
      std::max(report.relative_factor * report.median_abs, report.absolute_floor);
  const std::size_t n = det.size();
  report.f.assign(n, kNaN);
  report.g.assign(n, kNaN);
  report.significant.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::fabs(det[i]) > cutoff)) continue;
    report.significant[i] = 1;
    report.nonzero = true;
    report.f[i] = (f_num_a[i] * p.eta_tt[i] - f_num_b[i] * p.eta_t[i]) / det[i];
    report.g[i] = (g_num_a[i] * p.eta_t[i] - g_num_b[i] * p.eta_tt[i]) / det[i];
  }
  return report;
}

}  // namespace

std::size_t default_n_bins(const DomainMask& mask) {
  const double root = std::sqrt(static_cast<double>(mask.interior_count()));
  const std::size_t bins = static_cast<std::size_t>(std::ceil(root));
  return std::clamp<std::size_t>(bins, 3, 256);
}

EtaTable build_eta(const TimeSeriesField& series, std::size_t n_bins) {
  if (series.size() < 4) throw ConfigError("build_eta: need at least 4 snapshots");
  if (n_bins < 3) throw ConfigError("build_eta: need at least 3 bins");

  const ScalarField& phi = series.snapshot(0);
  const double s_min = phi.min();
  const double s_max = phi.max();
  if (!(s_max > s_min)) throw Error("build_eta: reference snapshot is constant");

  const DomainMask& mask = phi.mask();
  const auto& nodes = mask.active_nodes();
  const std::size_t T = series.size();

  EtaTable table;
  table.times = series.times();
  table.bin_width = (s_max - s_min) / static_cast<double>(n_bins);
  table.s_bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b)
    table.s_bins[b] = s_min + (static_cast<double>(b) + 0.5) * table.bin_width;

  // Node -> bin assignment from the reference snapshot.
  std::vector<std::size_t> bin_of(nodes.size());
  table.counts.assign(n_bins, 0);
  std::vector<double> phi_sum(n_bins, 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v = phi.value(nodes[i]);
    auto b = static_cast<std::size_t>((v - s_min) / table.bin_width);
    b = std::min(b, n_bins - 1);
    bin_of[i] = b;
    ++table.counts[b];
    phi_sum[b] += v;
  }

  table.s_means.assign(n_bins, kNaN);
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (table.counts[b] == 0) continue;
    table.s_means[b] = phi_sum[b] / static_cast<double>(table.counts[b]);
    table.usable.push_back(b);
  }
  const std::size_t empty = n_bins - table.usable.size();
  if (static_cast<double>(empty) > 0.2 * static_cast<double>(n_bins))
    throw Error("insufficient level resolution: " + std::to_string(empty) + " of " +
                std::to_string(n_bins) + " level bins are empty");

  // Bin means of u(., t), one independent column per time.
  table.eta.assign(n_bins * T, kNaN);
  table.u_range.assign(T, 0.0);
  parallel_for(T, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(n_bins);
    for (std::size_t j = begin; j < end; ++j) {
      const ScalarField& u = series.snapshot(j);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t i = 0; i < nodes.size(); ++i) acc[bin_of[i]] += u.value(nodes[i]);
      for (std::size_t b : table.usable)
        table.eta[b * T + j] = acc[b] / static_cast<double>(table.counts[b]);
      table.u_range[j] = u.range();
    }
  }, 1);

  // Level-set spread: the crossings of phi at each bin's mean level are
  // fixed in time; re-sample every snapshot on them.
  table.spread.assign(n_bins * T, 0.0);
  parallel_for(table.usable.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t b = table.usable[k];
      const std::vector<EdgeCrossing> crossings = level_crossings(phi, table.s_means[b]);
      if (crossings.empty()) continue;
      for (std::size_t j = 0; j < T; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        const ScalarField& u = series.snapshot(j);
        for (const EdgeCrossing& c : crossings) {
          const double v = value_at_crossing(u, c);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        table.spread[b * T + j] = hi - lo;
      }
    }
  }, 1);

  table.increasing.assign(T, 1);
  for (std::size_t j = 0; j < T; ++j) {
    for (std::size_t k = 1; k < table.usable.size(); ++k) {
      if (!(table.eta_at(table.usable[k], j) > table.eta_at(table.usable[k - 1], j))) {
        table.increasing[j] = 0;
        break;
      }
    }
  }
  return table;
}

std::vector<double> invariance_residual(const EtaTable& table) {
  const std::size_t T = table.n_times();
  std::vector<double> residual(T, 0.0);
  for (std::size_t j = 0; j < T; ++j) {
    double worst = 0.0;
    for (std::size_t b : table.usable) worst = std::max(worst, table.spread_at(b, j));
    const double range = table.u_range[j];
    residual[j] = range > 0.0 ? worst / range
                              : (worst > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  }
  return residual;
}

std::vector<double> invariance_residual(const TimeSeriesField& series, std::size_t n_bins) {
  return invariance_residual(build_eta(series, n_bins));
}

EtaPartials eta_partials(const EtaTable& table, std::optional<double> alpha) {
  const std::size_t B = table.usable.size();
  const std::size_t T = table.n_times();
  if (B < 3) throw ConfigError("eta_partials: need at least 3 usable bins");
  if (T < 3) throw ConfigError("eta_partials: need at least 3 snapshot times");

  EtaPartials p;
  p.alpha = alpha;
  p.times = table.times;
  p.s.resize(B);
  p.eta.resize(B * T);
  for (std::size_t k = 0; k < B; ++k) {
    const std::size_t b = table.usable[k];
    p.s[k] = table.s_means[b];
    for (std::size_t j = 0; j < T; ++j) p.eta[k * T + j] = table.eta_at(b, j);
  }

  p.eta_s = lattice_derivative(p, p.eta, Axis::s, 1);
  p.eta_ss = lattice_derivative(p, p.eta, Axis::s, 2);
  p.eta_t = lattice_derivative(p, p.eta, Axis::t, 1);
  p.eta_tt = lattice_derivative(p, p.eta, Axis::t, 2);
  p.eta_st = lattice_derivative(p, p.eta_s, Axis::t, 1);
  p.eta_sst = lattice_derivative(p, p.eta_ss, Axis::t, 1);

  std::vector<std::pair<std::size_t, std::size_t>> violations;
  for (std::size_t k = 0; k < B && violations.size() < 9; ++k)
    for (std::size_t j = 0; j < T && violations.size() < 9; ++j)
      if (!(p.eta_s[k * T + j] > 0.0)) violations.emplace_back(table.usable[k], j);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "eta_partials: level profile not strictly increasing (eta_s <= 0) at bins:";
    const std::size_t shown = std::min<std::size_t>(violations.size(), 8);
    for (std::size_t i = 0; i < shown; ++i)
      msg << " (bin " << violations[i].first << ", time " << table.times[violations[i].second]
          << ")";
    if (violations.size() > shown) msg << " ...";
    throw Error(msg.str());
  }

  if (alpha) {
    const double a = *alpha;
    const std::size_t n = B * T;
    p.xi.resize(n);
    p.xi_s.resize(n);
    p.xi_t.resize(n);
    p.xi_st.resize(n);
    if (a == 0.0) {
      // xi = eta_s exactly; keep the generic path bit-identical to the
      // plain one.
      p.xi = p.eta_s;
      p.xi_s = p.eta_ss;
      p.xi_t = p.eta_st;
      p.xi_st = p.eta_sst;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double es = p.eta_s[i];
        const double pow_a = std::pow(es, a);
        p.xi[i] = pow_a * es;  // es^{a+1}
        p.xi_s[i] = (a + 1.0) * pow_a * p.eta_ss[i];
        p.xi_t[i] = (a + 1.0) * pow_a * p.eta_st[i];
        p.xi_st[i] =
            (a + 1.0) * (a * std::pow(es, a - 1.0) * p.eta_st[i] * p.eta_ss[i] + pow_a * p.eta_sst[i]);
      }
    }
  }
  return p;
}

DeterminantReport determinant_D(const EtaPartials& p) {
  const std::size_t n = p.eta.size();
  std::vector<double> det(n);
  for (std::size_t i = 0; i < n; ++i)
    det[i] = p.eta_s[i] * p.eta_sst[i] - p.eta_st[i] * p.eta_ss[i];
  return make_report(p, det, p.eta_s, p.eta_st, p.eta_sst, p.eta_ss);
}

DeterminantReport determinant_xi(const EtaPartials& p) {
  if (!p.alpha) throw ConfigError("determinant_xi: partials carry no homogeneity degree");
  const std::size_t n = p.eta.size();
  std::vector<double> det(n);
  for (std::size_t i = 0; i < n; ++i) det[i] = p.xi[i] * p.xi_st[i] - p.xi_s[i] * p.xi_t[i];
  return make_report(p, det, p.xi, p.xi_t, p.xi_st, p.xi_s);
}

}  // namespace matzoh
