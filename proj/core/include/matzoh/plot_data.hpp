#pragma once

#include <filesystem>

#include "matzoh/pipeline.hpp"

namespace matzoh {

/// Writes the report's plottable lattices as CSV files into `out_dir`
/// (created if missing):
///
///   residual_vs_time.csv   time, invariance, affine_residual
///   eta_table.csv          bin, s, count, time, eta, spread
///   determinant.csv        bin, s, time, det, f, g, significant
///   fg_fits.csv            knot, f, f_derivative, g, g_derivative
///   curvatures.csv         cluster, value, multiplicity
///
/// Column order is fixed, line endings are LF, numbers are shortest
/// round-trip.  Blocks the report does not carry (no level-structure
/// fit, no surface typing) produce header-only files.
void emit_plot_data(const Report& report, const std::filesystem::path& out_dir);

}  // namespace matzoh
