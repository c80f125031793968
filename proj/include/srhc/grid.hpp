#pragma once

#include "srhc/types.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace srhc {

// Rectilinear grid with row-major node layout (last axis fastest).
// Multilinear interpolation; points outside the box are clamped onto it.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<std::vector<double>> axes);

  static Grid uniform(const Vector& lo, const Vector& hi, const std::vector<int>& points);

  Eigen::Index dim() const { return static_cast<Eigen::Index>(axes_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<double>& axis(Eigen::Index j) const { return axes_[j]; }
  Vector lower() const;
  Vector upper() const;

  Vector node(std::size_t flat) const;
  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(const std::vector<std::size_t>& idx) const;

  bool contains(const Vector& x) const;
  // Distance from x to the nearest box face along any axis (negative outside).
  double boundary_distance(const Vector& x) const;

  // Interpolation stencil: (node index, weight) pairs with nonzero weight.
  // At a node the stencil is that node alone with weight one.
  std::vector<std::pair<std::size_t, double>> stencil(const Vector& x) const;

  double interpolate(const std::vector<double>& values, const Vector& x) const;
  Vector interpolate(const std::vector<Vector>& values, const Vector& x) const;

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

}  // namespace srhc
