#include "matzoh/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "matzoh/errors.hpp"
#include "matzoh/parallel.hpp"

namespace matzoh {

Grid::Grid(std::vector<std::size_t> shape, std::vector<double> origin,
           std::vector<double> spacing)
    : shape_(std::move(shape)), origin_(std::move(origin)), spacing_(std::move(spacing)) {
  if (shape_.empty()) throw ConfigError("grid: dimension must be at least 1");
  if (origin_.size() != shape_.size() || spacing_.size() != shape_.size())
    throw ConfigError("grid: shape, origin and spacing must have equal length");
  for (std::size_t n : shape_)
    if (n == 0) throw ConfigError("grid: every axis needs at least one node");
  for (double h : spacing_)
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid: spacing must be positive");
  for (double o : origin_)
    if (!std::isfinite(o)) throw ConfigError("grid: origin must be finite");

  strides_.assign(shape_.size(), 1);
  for (std::size_t k = shape_.size(); k-- > 1;) strides_[k - 1] = strides_[k] * shape_[k];
  size_ = strides_[0] * shape_[0];
}

double Grid::min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

std::size_t Grid::flatten(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) flat += index[k] * strides_[k];
  return flat;
}

void Grid::unflatten(std::size_t flat, std::span<std::size_t> index) const {
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    index[k] = flat / strides_[k];
    flat -= index[k] * strides_[k];
  }
}

std::vector<std::size_t> Grid::unflatten(std::size_t flat) const {
  std::vector<std::size_t> index(shape_.size());
  unflatten(flat, index);
  return index;
}

void Grid::coords(std::size_t flat, std::span<double> out) const {
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    const std::size_t ik = flat / strides_[k];
    flat -= ik * strides_[k];
    out[k] = origin_[k] + static_cast<double>(ik) * spacing_[k];
  }
}

std::vector<double> Grid::coords(std::size_t flat) const {
  std::vector<double> x(shape_.size());
  coords(flat, x);
  return x;
}

std::optional<std::size_t> Grid::neighbor(std::size_t flat, int axis, int offset) const {
  const std::size_t k = static_cast<std::size_t>(axis);
  const std::size_t ik = (flat / strides_[k]) % shape_[k];
  const long long shifted = static_cast<long long>(ik) + offset;
  if (shifted < 0 || shifted >= static_cast<long long>(shape_[k])) return std::nullopt;
  return flat + static_cast<std::size_t>(offset * static_cast<long long>(strides_[k]));
}

bool Grid::operator==(const Grid& other) const {
  return shape_ == other.shape_ && origin_ == other.origin_ && spacing_ == other.spacing_;
}

// --------------------------------------------------------------- DomainMask

DomainMask::DomainMask(std::shared_ptr<const Grid> grid, std::vector<MaskLabel> labels)
    : grid_(std::move(grid)), labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    switch (labels_[i]) {
      case MaskLabel::interior:
        interior_.push_back(i);
        active_.push_back(i);
        break;
      case MaskLabel::boundary:
        boundary_.push_back(i);
        active_.push_back(i);
        break;
      case MaskLabel::exterior:
        break;
    }
  }
}

DomainMask DomainMask::box(const std::shared_ptr<const Grid>& grid) {
  return from_predicate(grid, [](std::span<const double>) { return true; });
}

DomainMask DomainMask::from_predicate(
    const std::shared_ptr<const Grid>& grid,
    const std::function<bool(std::span<const double>)>& inside) {
  const Grid& g = *grid;
  std::vector<char> in(g.size());
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.coords(i, x);
    in[i] = inside(x) ? 1 : 0;
  }
  std::vector<MaskLabel> labels(g.size(), MaskLabel::exterior);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!in[i]) continue;
    bool interior = true;
    for (int k = 0; k < g.dim() && interior; ++k) {
      for (int off : {-1, +1}) {
        const auto nb = g.neighbor(i, k, off);
        if (!nb || !in[*nb]) {
          interior = false;
          break;
        }
      }
    }
    labels[i] = interior ? MaskLabel::interior : MaskLabel::boundary;
  }
  return DomainMask(grid, std::move(labels));
}

DomainMask DomainMask::from_labels(const std::shared_ptr<const Grid>& grid,
                                   std::vector<MaskLabel> labels) {
  const Grid& g = *grid;
  if (labels.size() != g.size()) throw ConfigError("mask: label count does not match grid size");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != MaskLabel::interior) continue;
    for (int k = 0; k < g.dim(); ++k) {
      for (int off : {-1, +1}) {
        const auto nb = g.neighbor(i, k, off);
        if (!nb || labels[*nb] == MaskLabel::exterior) {
          labels[i] = MaskLabel::boundary;
          k = g.dim();
          break;
        }
      }
    }
  }
  return DomainMask(grid, std::move(labels));
}

std::vector<double> DomainMask::outward_normal(std::size_t node) const {
  const Grid& g = *grid_;
  std::vector<double> normal(static_cast<std::size_t>(g.dim()), 0.0);
  if (!is_boundary(node)) return normal;
  for (int k = 0; k < g.dim(); ++k) {
    for (int off : {-1, +1}) {
      const auto nb = g.neighbor(node, k, off);
      if (!nb || is_exterior(*nb)) normal[static_cast<std::size_t>(k)] += off;
    }
  }
  double norm = 0.0;
  for (double c : normal) norm += c * c;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& c : normal) c /= norm;
  return normal;
}

bool DomainMask::operator==(const DomainMask& other) const {
  return *grid_ == *other.grid_ && labels_ == other.labels_;
}

// --------------------------------------------------------------- ScalarField

ScalarField::ScalarField(std::shared_ptr<const Grid> grid, std::shared_ptr<const DomainMask> mask,
                         std::vector<double> values, std::optional<double> time)
    : grid_(std::move(grid)), mask_(std::move(mask)), values_(std::move(values)), time_(time) {
  if (!grid_ || !mask_) throw ConfigError("field: grid and mask are required");
  if (values_.size() != grid_->size())
    throw ConfigError("field: value count does not match grid size");
  for (std::size_t node : mask_->active_nodes())
    if (!std::isfinite(values_[node]))
      throw ConfigError("field: non-finite value at a non-exterior node");
}

ScalarField ScalarField::sample(const std::shared_ptr<const Grid>& grid,
                                const std::shared_ptr<const DomainMask>& mask,
                                const std::function<double(std::span<const double>)>& fn,
                                std::optional<double> time) {
  std::vector<double> values(grid->size(), 0.0);
  std::vector<double> x(static_cast<std::size_t>(grid->dim()));
  for (std::size_t node : mask->active_nodes()) {
    grid->coords(node, x);
    values[node] = fn(x);
  }
  return ScalarField(grid, mask, std::move(values), time);
}

double ScalarField::min() const {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t node : mask_->active_nodes()) lo = std::min(lo, values_[node]);
  return lo;
}

double ScalarField::max() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t node : mask_->active_nodes()) hi = std::max(hi, values_[node]);
  return hi;
}

// --------------------------------------------------------------- VectorField

VectorField::VectorField(std::shared_ptr<const Grid> grid, std::shared_ptr<const DomainMask> mask)
    : grid_(std::move(grid)),
      mask_(std::move(mask)),
      n_(static_cast<std::size_t>(grid_->dim())),
      data_(grid_->size() * n_, 0.0) {}

double VectorField::norm2(std::size_t node) const {
  double s = 0.0;
  for (double c : at(node)) s += c * c;
  return std::sqrt(s);
}

// ----------------------------------------------------- SymmetricMatrixField

SymmetricMatrixField::SymmetricMatrixField(std::shared_ptr<const Grid> grid,
                                           std::shared_ptr<const DomainMask> mask)
    : grid_(std::move(grid)),
      mask_(std::move(mask)),
      n_(static_cast<std::size_t>(grid_->dim())),
      packed_(n_ * (n_ + 1) / 2),
      data_(grid_->size() * packed_, 0.0) {}

std::size_t SymmetricMatrixField::pack(int i, int j) const {
  auto a = static_cast<std::size_t>(std::min(i, j));
  auto b = static_cast<std::size_t>(std::max(i, j));
  // Row a of the upper triangle starts after a*(2n - a + 1)/2 entries.
  return a * (2 * n_ - a + 1) / 2 + (b - a);
}

double SymmetricMatrixField::trace(std::size_t node) const {
  double t = 0.0;
  for (int i = 0; i < static_cast<int>(n_); ++i) t += entry(node, i, i);
  return t;
}

// ------------------------------------------------------------ TimeSeriesField

TimeSeriesField::TimeSeriesField(std::vector<ScalarField> snapshots)
    : snapshots_(std::move(snapshots)) {
  if (snapshots_.empty()) throw ConfigError("series: at least one snapshot required");
  const ScalarField& first = snapshots_.front();
  times_.reserve(snapshots_.size());
  for (const ScalarField& s : snapshots_) {
    if (!(s.grid() == first.grid()) || !(s.mask() == first.mask()))
      throw ConfigError("series: snapshots must share one grid and mask");
    if (!s.time()) throw ConfigError("series: every snapshot needs a time tag");
    times_.push_back(*s.time());
  }
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw ConfigError("series: snapshot times must be strictly increasing");
}

TimeSeriesField TimeSeriesField::tail(std::size_t first) const {
  if (first >= snapshots_.size()) throw ConfigError("series: tail start out of range");
  return TimeSeriesField(
      std::vector<ScalarField>(snapshots_.begin() + static_cast<std::ptrdiff_t>(first),
                               snapshots_.end()));
}

}  // namespace matzoh
