#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "matzoh/grid.hpp"

namespace testing {

/// Uniform 1D grid with n nodes spanning [a, b].
inline std::shared_ptr<const matzoh::Grid> grid_1d(std::size_t n, double a, double b) {
  return std::make_shared<matzoh::Grid>(std::vector<std::size_t>{n}, std::vector<double>{a},
                                        std::vector<double>{(b - a) / double(n - 1)});
}

/// Uniform grid with the same node count and span on every axis.
inline std::shared_ptr<const matzoh::Grid> grid_nd(int dim, std::size_t n, double a, double b) {
  return std::make_shared<matzoh::Grid>(std::vector<std::size_t>(std::size_t(dim), n),
                                        std::vector<double>(std::size_t(dim), a),
                                        std::vector<double>(std::size_t(dim), (b - a) / double(n - 1)));
}

inline std::shared_ptr<const matzoh::DomainMask> box_mask(
    const std::shared_ptr<const matzoh::Grid>& grid) {
  return std::make_shared<matzoh::DomainMask>(matzoh::DomainMask::box(grid));
}

inline std::shared_ptr<const matzoh::DomainMask> predicate_mask(
    const std::shared_ptr<const matzoh::Grid>& grid,
    const std::function<bool(std::span<const double>)>& inside) {
  return std::make_shared<matzoh::DomainMask>(matzoh::DomainMask::from_predicate(grid, inside));
}

/// Snapshots of fn(x, t) at the given times on a shared grid and mask.
inline matzoh::TimeSeriesField sample_series(
    const std::shared_ptr<const matzoh::Grid>& grid,
    const std::shared_ptr<const matzoh::DomainMask>& mask,
    const std::function<double(std::span<const double>, double)>& fn,
    const std::vector<double>& times) {
  std::vector<matzoh::ScalarField> snaps;
  snaps.reserve(times.size());
  for (const double t : times) {
    snaps.push_back(matzoh::ScalarField::sample(
        grid, mask, [&](std::span<const double> x) { return fn(x, t); }, t));
  }
  return matzoh::TimeSeriesField(std::move(snaps));
}

/// Largest |field - fn(x)| over interior nodes.
inline double max_interior_error(const matzoh::ScalarField& field,
                                 const std::function<double(std::span<const double>)>& fn) {
  double worst = 0.0;
  std::vector<double> x(std::size_t(field.grid().dim()));
  for (const std::size_t node : field.mask().interior_nodes()) {
    field.grid().coords(node, x);
    worst = std::max(worst, std::abs(field.value(node) - fn(x)));
  }
  return worst;
}

/// Self-deleting temporary directory for file round-trip tests.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      auto candidate = base / (tag + "_" + std::to_string(std::rand() % 1000000));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create a temporary directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
