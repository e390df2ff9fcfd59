#pragma once

#include <filesystem>
#include <string>

#include "matzoh/grid.hpp"

namespace matzoh {

/// Plain-text snapshot format.
///
///   dim N
///   shape n_1 ... n_N
///   origin o_1 ... o_N
///   spacing h_1 ... h_N
///   time t
///   i_1 ... i_N value mask
///   ...
///
/// One row per node in flat (row-major) order; mask is I, B or E;
/// exterior rows carry value 0.  Floating point numbers are written in
/// shortest round-trip form, so write -> read -> write reproduces the
/// file byte for byte.  Lines end with LF.
void write_field(const std::filesystem::path& path, const ScalarField& field);

ScalarField read_field(const std::filesystem::path& path);

/// Serialize to the same format in memory (used by tests and tools).
std::string field_to_string(const ScalarField& field);
ScalarField field_from_string(const std::string& text);

/// Writes every snapshot of a series to dir/snap_XXXX.field.
void write_series(const std::filesystem::path& dir, const TimeSeriesField& series);

/// Loads all *.field files from a directory (sorted by file name, then
/// ordered by their time tags).
TimeSeriesField read_series(const std::filesystem::path& dir);

}  // namespace matzoh
