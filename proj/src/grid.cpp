#include "srhc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srhc {

Grid::Grid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw ValidationError("grid needs at least one axis");
  for (std::size_t j = 0; j < axes_.size(); ++j) {
    const auto& ax = axes_[j];
    if (ax.empty()) throw ValidationError("grid axis " + std::to_string(j) + " is empty");
    for (std::size_t i = 0; i < ax.size(); ++i) {
      if (!std::isfinite(ax[i])) throw ValidationError("grid axis " + std::to_string(j) + " has a non-finite node");
      if (i > 0 && !(ax[i] > ax[i - 1]))
        throw ValidationError("grid axis " + std::to_string(j) + " is not strictly increasing");
    }
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t j = axes_.size() - 1; j > 0; --j) strides_[j - 1] = strides_[j] * axes_[j].size();
  size_ = strides_[0] * axes_[0].size();
}

Grid Grid::uniform(const Vector& lo, const Vector& hi, const std::vector<int>& points) {
  if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != points.size())
    throw DimensionError("grid bounds and point counts disagree in dimension");
  std::vector<std::vector<double>> axes(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    const int n = points[j];
    if (n < 2) throw ValidationError("grid needs at least two points per axis");
    if (!(hi(j) > lo(j))) throw ValidationError("grid_max must exceed grid_min");
    axes[j].resize(n);
    for (int i = 0; i < n; ++i) axes[j][i] = lo(j) + (hi(j) - lo(j)) * static_cast<double>(i) / (n - 1);
    axes[j].back() = hi(j);
    // Snap values that should be exactly zero (symmetric grids).
    for (double& v : axes[j])
      if (std::abs(v) < 1e-12 * (hi(j) - lo(j))) v = 0.0;
  }
  return Grid(std::move(axes));
}

Vector Grid::lower() const {
  Vector v(dim());
  for (Eigen::Index j = 0; j < dim(); ++j) v(j) = axes_[j].front();
  return v;
}

Vector Grid::upper() const {
  Vector v(dim());
  for (Eigen::Index j = 0; j < dim(); ++j) v(j) = axes_[j].back();
  return v;
}

std::vector<std::size_t> Grid::multi_index(std::size_t flat) const {
  std::vector<std::size_t> idx(axes_.size());
  for (std::size_t j = 0; j < axes_.size(); ++j) {
    idx[j] = flat / strides_[j];
    flat %= strides_[j];
  }
  return idx;
}

std::size_t Grid::flat_index(const std::vector<std::size_t>& idx) const {
  std::size_t f = 0;
  for (std::size_t j = 0; j < axes_.size(); ++j) f += idx[j] * strides_[j];
  return f;
}

Vector Grid::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vector x(dim());
  for (std::size_t j = 0; j < idx.size(); ++j) x(j) = axes_[j][idx[j]];
  return x;
}

bool Grid::contains(const Vector& x) const { return boundary_distance(x) >= 0.0; }

double Grid::boundary_distance(const Vector& x) const {
  require_dim(x, dim(), "grid point");
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < dim(); ++j) d = std::min({d, x(j) - axes_[j].front(), axes_[j].back() - x(j)});
  return d;
}

std::vector<std::pair<std::size_t, double>> Grid::stencil(const Vector& x) const {
  require_dim(x, dim(), "grid point");
  const std::size_t d = axes_.size();
  // Per axis: up to two (index, weight) entries.
  std::vector<std::size_t> lo_idx(d);
  std::vector<double> t(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto& ax = axes_[j];
    if (ax.size() == 1) {
      lo_idx[j] = 0;
      t[j] = 0.0;
      continue;
    }
    const double v = std::clamp(x(static_cast<Eigen::Index>(j)), ax.front(), ax.back());
    std::size_t k = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), v) - ax.begin());
    k = k == 0 ? 0 : k - 1;
    if (k > ax.size() - 2) k = ax.size() - 2;
    lo_idx[j] = k;
    t[j] = (v - ax[k]) / (ax[k + 1] - ax[k]);
  }
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(std::size_t{1} << d);
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const bool up = (corner >> j) & 1U;
      const double wj = up ? t[j] : 1.0 - t[j];
      if (wj == 0.0) {
        w = 0.0;
        break;
      }
      w *= wj;
      flat += (lo_idx[j] + (up ? 1 : 0)) * strides_[j];
    }
    if (w != 0.0) out.emplace_back(flat, w);
  }
  return out;
}

double Grid::interpolate(const std::vector<double>& values, const Vector& x) const {
  if (values.size() != size_) throw DimensionError("value table size does not match grid");
  double acc = 0.0;
  for (const auto& [i, w] : stencil(x)) acc += w * values[i];
  return acc;
}

Vector Grid::interpolate(const std::vector<Vector>& values, const Vector& x) const {
  if (values.size() != size_) throw DimensionError("control table size does not match grid");
  Vector acc = Vector::Zero(values.front().size());
  for (const auto& [i, w] : stencil(x)) acc += w * values[i];
  return acc;
}

}  // namespace srhc
