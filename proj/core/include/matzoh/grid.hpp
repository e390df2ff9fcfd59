#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace matzoh {

/// Node classification on a masked grid.  Interior nodes carry the PDE,
/// boundary nodes carry boundary data, exterior nodes are never read by
/// any differential operation.
enum class MaskLabel : std::uint8_t { interior = 0, boundary = 1, exterior = 2 };

/// Uniform Cartesian grid in N >= 1 dimensions.  Node (i_0,...,i_{N-1})
/// sits at origin + i .* spacing; flat indices are row major with the
/// last axis fastest.
class Grid {
 public:
  Grid(std::vector<std::size_t> shape, std::vector<double> origin, std::vector<double> spacing);

  int dim() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& origin() const { return origin_; }
  const std::vector<double>& spacing() const { return spacing_; }
  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  double min_spacing() const;

  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  std::size_t flatten(std::span<const std::size_t> index) const;
  void unflatten(std::size_t flat, std::span<std::size_t> index) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;

  /// Physical coordinates of a node.
  void coords(std::size_t flat, std::span<double> out) const;
  std::vector<double> coords(std::size_t flat) const;

  /// Index of the node shifted by `offset` nodes along `axis`, or
  /// nullopt when the shift leaves the grid.
  std::optional<std::size_t> neighbor(std::size_t flat, int axis, int offset) const;

  bool operator==(const Grid& other) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> origin_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Interior/boundary/exterior labeling of grid nodes.  Invariant: every
/// axis neighbor of an interior node exists and is not exterior, so
/// centered stencils at interior nodes never read exterior data.
class DomainMask {
 public:
  /// All nodes inside; grid-edge nodes are the boundary.
  static DomainMask box(const std::shared_ptr<const Grid>& grid);

  /// Nodes where `inside(x)` holds are kept; a kept node whose axis
  /// neighbors all exist and are kept is interior, otherwise boundary.
  static DomainMask from_predicate(const std::shared_ptr<const Grid>& grid,
                                   const std::function<bool(std::span<const double>)>& inside);

  /// Rebuild from explicit labels (used by field readers).  Demotes any
  /// interior node with a missing or exterior axis neighbor to boundary
  /// so the invariant always holds.
  static DomainMask from_labels(const std::shared_ptr<const Grid>& grid,
                                std::vector<MaskLabel> labels);

  const std::shared_ptr<const Grid>& grid() const { return grid_; }
  MaskLabel label(std::size_t node) const { return labels_[node]; }
  bool is_interior(std::size_t node) const { return labels_[node] == MaskLabel::interior; }
  bool is_boundary(std::size_t node) const { return labels_[node] == MaskLabel::boundary; }
  bool is_exterior(std::size_t node) const { return labels_[node] == MaskLabel::exterior; }

  std::size_t interior_count() const { return interior_.size(); }
  std::size_t boundary_count() const { return boundary_.size(); }
  const std::vector<std::size_t>& interior_nodes() const { return interior_; }
  const std::vector<std::size_t>& boundary_nodes() const { return boundary_; }
  /// Interior and boundary nodes in ascending flat order.
  const std::vector<std::size_t>& active_nodes() const { return active_; }

  /// Unit outward normal estimated from the mask geometry at a boundary
  /// node: the normalized sum of axis directions pointing toward
  /// missing (exterior or off-grid) neighbors.  Axis-aligned on flat
  /// faces; diagonal at corners.
  std::vector<double> outward_normal(std::size_t node) const;

  bool operator==(const DomainMask& other) const;

 private:
  DomainMask(std::shared_ptr<const Grid> grid, std::vector<MaskLabel> labels);

  std::shared_ptr<const Grid> grid_;
  std::vector<MaskLabel> labels_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> boundary_;
  std::vector<std::size_t> active_;
};

/// A scalar sample per node (exterior entries are stored but carry no
/// meaning), with an optional time tag.
class ScalarField {
 public:
  ScalarField(std::shared_ptr<const Grid> grid, std::shared_ptr<const DomainMask> mask,
              std::vector<double> values, std::optional<double> time = std::nullopt);

  /// Convenience constructor sampling fn at every non-exterior node.
  static ScalarField sample(const std::shared_ptr<const Grid>& grid,
                            const std::shared_ptr<const DomainMask>& mask,
                            const std::function<double(std::span<const double>)>& fn,
                            std::optional<double> time = std::nullopt);

  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  const std::shared_ptr<const DomainMask>& mask_ptr() const { return mask_; }
  const Grid& grid() const { return *grid_; }
  const DomainMask& mask() const { return *mask_; }

  double value(std::size_t node) const { return values_[node]; }
  double& value(std::size_t node) { return values_[node]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::optional<double> time() const { return time_; }
  void set_time(std::optional<double> t) { time_ = t; }

  /// min/max over non-exterior nodes.
  double min() const;
  double max() const;
  double range() const { return max() - min(); }

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const DomainMask> mask_;
  std::vector<double> values_;
  std::optional<double> time_;
};

/// One N-vector per node, stored node-major: component c of node i at
/// data[i*N + c].
class VectorField {
 public:
  VectorField(std::shared_ptr<const Grid> grid, std::shared_ptr<const DomainMask> mask);

  const Grid& grid() const { return *grid_; }
  const DomainMask& mask() const { return *mask_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  const std::shared_ptr<const DomainMask>& mask_ptr() const { return mask_; }

  std::span<const double> at(std::size_t node) const {
    return {data_.data() + node * n_, n_};
  }
  std::span<double> at(std::size_t node) { return {data_.data() + node * n_, n_}; }
  double norm2(std::size_t node) const;

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const DomainMask> mask_;
  std::size_t n_;
  std::vector<double> data_;
};

/// One symmetric NxN matrix per node, packed upper triangle row by row:
/// (0,0),(0,1),...,(0,N-1),(1,1),...
class SymmetricMatrixField {
 public:
  SymmetricMatrixField(std::shared_ptr<const Grid> grid, std::shared_ptr<const DomainMask> mask);

  const Grid& grid() const { return *grid_; }
  const DomainMask& mask() const { return *mask_; }

  double entry(std::size_t node, int i, int j) const {
    return data_[node * packed_ + pack(i, j)];
  }
  double& entry(std::size_t node, int i, int j) { return data_[node * packed_ + pack(i, j)]; }

  /// Sum of diagonal entries.
  double trace(std::size_t node) const;

 private:
  std::size_t pack(int i, int j) const;

  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const DomainMask> mask_;
  std::size_t n_;
  std::size_t packed_;
  std::vector<double> data_;
};

/// Snapshots of one evolving field on a shared grid and mask, at
/// strictly increasing times.  The first snapshot time is the reference
/// time used by all classification machinery.
class TimeSeriesField {
 public:
  TimeSeriesField() = default;

  /// Throws ConfigError unless all snapshots share the grid/mask and
  /// carry strictly increasing time tags.
  explicit TimeSeriesField(std::vector<ScalarField> snapshots);

  std::size_t size() const { return snapshots_.size(); }
  const ScalarField& snapshot(std::size_t i) const { return snapshots_[i]; }
  const std::vector<ScalarField>& snapshots() const { return snapshots_; }
  const std::vector<double>& times() const { return times_; }
  double reference_time() const { return times_.front(); }

  const Grid& grid() const { return snapshots_.front().grid(); }
  const DomainMask& mask() const { return snapshots_.front().mask(); }

  /// Sub-series starting at snapshot `first`.
  TimeSeriesField tail(std::size_t first) const;

 private:
  std::vector<ScalarField> snapshots_;
  std::vector<double> times_;
};

}  // namespace matzoh
