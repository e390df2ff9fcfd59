#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace matzoh {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A structurally invalid input: malformed config, bad grid shape,
/// inconsistent field dimensions, unknown JSON keys, ...
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// The level-set spread of a time series exceeds the invariance
/// tolerance: the solution is not constant on the level surfaces of its
/// initial snapshot, so no structural classification is attempted.
class NotInvariantError : public Error {
 public:
  NotInvariantError(const std::string& what, std::vector<double> residuals,
                    std::vector<double> times, double tolerance)
      : Error(what),
        residuals_(std::move(residuals)),
        times_(std::move(times)),
        tolerance_(tolerance) {}

  const std::vector<double>& residuals() const { return residuals_; }
  const std::vector<double>& times() const { return times_; }
  double tolerance() const { return tolerance_; }

 private:
  std::vector<double> residuals_;
  std::vector<double> times_;
  double tolerance_;
};

/// A numerical breakdown: NaN/overflow during time stepping, CFL
/// violation, degenerate operator, singular fits.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::size_t step_index = 0)
      : Error(what), step_index_(step_index) {}

  /// Time step at which the failure was first detected (0 if not a
  /// stepping failure).
  std::size_t step_index() const { return step_index_; }

 private:
  std::size_t step_index_;
};

}  // namespace matzoh
