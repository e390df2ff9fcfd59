#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "matzoh/grid.hpp"

namespace matzoh {

/// Binned reconstruction of the level profile eta(s, t) from a series:
/// nodes are bucketed into equal-width bins of the reference snapshot
/// phi, eta(bin, t) is the bin mean of u(., t), and spread(bin, t) is
/// the max-min of u(., t) sampled on the phi-level set at the bin's
/// mean level (the direct witness of equipotential invariance: level
/// sets that stay equipotential have vanishing spread at every time).
///
/// s_means (the per-bin mean of phi) rather than the geometric bin
/// centers serve as the finite-difference abscissas: bin means of any
/// profile eta(phi) evaluated at the bin mean of phi are exact for
/// affine eta, which removes the leading binning bias from the
/// derivative lattice.
struct EtaTable {
  std::vector<double> s_bins;   ///< geometric bin centers, every bin
  std::vector<double> s_means;  ///< mean of phi per bin (NaN when empty)
  std::vector<double> times;
  std::vector<double> eta;      ///< [bin * n_times + j], NaN when empty
  std::vector<double> spread;   ///< same layout; 0 when empty
  std::vector<std::size_t> counts;
  std::vector<double> u_range;  ///< per time: range of u over active nodes
  double bin_width = 0.0;
  std::vector<std::size_t> usable;      ///< nonempty bin indices, ascending
  std::vector<std::uint8_t> increasing; ///< per time: eta strictly increasing over usable bins

  std::size_t n_bins() const { return s_bins.size(); }
  std::size_t n_times() const { return times.size(); }
  double eta_at(std::size_t bin, std::size_t j) const { return eta[bin * n_times() + j]; }
  double spread_at(std::size_t bin, std::size_t j) const { return spread[bin * n_times() + j]; }
};

/// Default bin count: ceil(sqrt(#interior nodes)), capped at 256.
std::size_t default_n_bins(const DomainMask& mask);

/// Requires >= 4 snapshots, >= 3 bins and a non-constant reference
/// snapshot; throws Error("insufficient level resolution") when more
/// than 20% of the bins are empty.
EtaTable build_eta(const TimeSeriesField& series, std::size_t n_bins);

/// Per-time invariance residual: the largest level-set spread across
/// bins, normalized by the range of u(., t).  The series has invariant
/// equipotential surfaces when every entry stays below the tolerance.
std::vector<double> invariance_residual(const EtaTable& table);
std::vector<double> invariance_residual(const TimeSeriesField& series, std::size_t n_bins);

/// Partial derivatives of eta on the usable-bin x time lattice
/// (nonuniform three-point stencils, centered where possible).  The
/// mixed and third-order entries are time-derivatives of the eta_s and
/// eta_ss lattices, which commutes with the pure-s stencils and damps
/// time-constant binning noise.  When alpha is given the power family
/// xi = (eta_s)^{alpha+1} and its chain-rule partials are included;
/// alpha = 0 copies the eta lattices verbatim so the generic path
/// reproduces the heat-case arithmetic bit for bit.
struct EtaPartials {
  std::vector<double> s;      ///< abscissas (usable-bin means), size B
  std::vector<double> times;  ///< size T
  /// Lattices [B x T], row-major b * T + j.
  std::vector<double> eta;
  std::vector<double> eta_s, eta_ss, eta_t, eta_st, eta_tt, eta_sst;
  std::optional<double> alpha;
  std::vector<double> xi, xi_s, xi_t, xi_st;  ///< empty unless alpha given

  std::size_t n_s() const { return s.size(); }
  std::size_t n_t() const { return times.size(); }
  double at(const std::vector<double>& lattice, std::size_t b, std::size_t j) const {
    return lattice[b * n_t() + j];
  }
};

/// Throws when eta_s <= 0 anywhere on the lattice (the level profile
/// must be strictly increasing in s), listing the offending
/// (bin, time) pairs.
EtaPartials eta_partials(const EtaTable& table, std::optional<double> alpha = std::nullopt);

/// Classification determinant on the lattice with the two-sided
/// significance test: a point is significantly nonzero when |det|
/// exceeds both `relative_factor` times the lattice-wide median |det|
/// and the absolute floor.  Where significant, the split-branch
/// estimates are solved from the 2x2 system (f multiplies the
/// second-derivative column, g the first): both must be functions of s
/// alone for an isoparametric solution.
struct DeterminantReport {
  std::vector<double> det;  ///< [B x T]
  std::vector<double> f;    ///< NaN where not significant
  std::vector<double> g;    ///< NaN where not significant
  std::vector<std::uint8_t> significant;
  double median_abs = 0.0;
  double relative_factor = 10.0;
  double absolute_floor = 1e-6;
  bool nonzero = false;  ///< any lattice point significant
};

/// det = eta_s eta_sst - eta_st eta_ss;
/// f = (eta_s eta_tt - eta_st eta_t) / det,
/// g = (eta_t eta_sst - eta_tt eta_ss) / det.
DeterminantReport determinant_D(const EtaPartials& partials);

/// Power-family variant (requires alpha):
/// det = xi xi_st - xi_s xi_t;
/// f = (xi eta_tt - xi_t eta_t) / det,
/// g = (xi_st eta_t - xi_s eta_tt) / det.
DeterminantReport determinant_xi(const EtaPartials& partials);

}  // namespace matzoh
