#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace flowforge {

using Vec2 = std::array<double, 2>;

/// Uniform periodic lattice on the torus prod_k [0, L_k), d in {1, 2}.
///
/// Nodes are stored axis-0 fastest: flat = i0 + N0 * i1.
class PeriodicGrid {
 public:
  static constexpr std::size_t min_points = 8;

  PeriodicGrid(int dim, std::array<double, 2> period, std::array<std::size_t, 2> points)
      : dim_(dim), period_(period), points_(points) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("PeriodicGrid: dim must be 1 or 2");
    if (dim == 1) {
      period_[1] = 1.0;
      points_[1] = 1;
    }
    for (int k = 0; k < dim; ++k) {
      if (!(period_[k] > 0.0) || !std::isfinite(period_[k]))
        throw std::invalid_argument("PeriodicGrid: period must be positive");
      if (points_[k] < min_points) throw std::invalid_argument("PeriodicGrid: need at least 8 points per axis");
    }
  }

  static PeriodicGrid line(double period, std::size_t points) { return {1, {period, 1.0}, {points, 1}}; }
  static PeriodicGrid square(double period, std::size_t points) {
    return {2, {period, period}, {points, points}};
  }

  int dim() const { return dim_; }
  double period(int k) const { return period_[k]; }
  std::size_t points(int k) const { return points_[k]; }
  double spacing(int k) const { return period_[k] / static_cast<double>(points_[k]); }
  double max_spacing() const { return dim_ == 1 ? spacing(0) : std::max(spacing(0), spacing(1)); }
  double min_spacing() const { return dim_ == 1 ? spacing(0) : std::min(spacing(0), spacing(1)); }
  std::size_t size() const { return points_[0] * points_[1]; }

  /// Product of spacings, the quadrature cell volume.
  double cell_volume() const { return dim_ == 1 ? spacing(0) : spacing(0) * spacing(1); }

  std::size_t flat(std::size_t i0, std::size_t i1 = 0) const { return i0 + points_[0] * i1; }

  std::array<std::size_t, 2> unflatten(std::size_t flat) const { return {flat % points_[0], flat / points_[0]}; }

  Vec2 coordinate(std::size_t flat) const {
    auto [i0, i1] = unflatten(flat);
    return {static_cast<double>(i0) * spacing(0), dim_ == 2 ? static_cast<double>(i1) * spacing(1) : 0.0};
  }

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) {
    return a.dim_ == b.dim_ && a.period_ == b.period_ && a.points_ == b.points_;
  }

 private:
  int dim_;
  std::array<double, 2> period_;
  std::array<std::size_t, 2> points_;
};

// Floor division of a lattice index by the axis length.
inline long wrap_count(long n, long size) { return n >= 0 ? n / size : -((-n + size - 1) / size); }

/// Sampled graph function gamma on a periodic grid.
///
/// A field may carry a tilt a = (a_0, a_1): its extension off the fundamental
/// cell obeys gamma(x + L_k e_k) = gamma(x) + a_k L_k. Tilt zero is the plain
/// periodic case; a nonzero tilt represents planes and "periodic plus plane"
/// data exactly.
class GraphField {
 public:
  GraphField(PeriodicGrid grid, std::vector<double> values, Vec2 tilt = {0.0, 0.0})
      : grid_(grid), values_(std::move(values)), tilt_(tilt) {
    if (values_.size() != grid_.size()) throw std::invalid_argument("GraphField: sample count does not match grid");
    if (grid_.dim() == 1) tilt_[1] = 0.0;
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("GraphField: non-finite sample");
    if (!std::isfinite(tilt_[0]) || !std::isfinite(tilt_[1])) throw std::invalid_argument("GraphField: non-finite tilt");
  }

  static GraphField constant(const PeriodicGrid& grid, double c) {
    return {grid, std::vector<double>(grid.size(), c)};
  }

  static GraphField sample(const PeriodicGrid& grid, const std::function<double(double, double)>& fn,
                           Vec2 tilt = {0.0, 0.0}) {
    std::vector<double> v(grid.size());
    for (std::size_t n = 0; n < v.size(); ++n) {
      auto x = grid.coordinate(n);
      v[n] = fn(x[0], x[1]);
    }
    return {grid, std::move(v), tilt};
  }

  /// The plane a . x + b, represented exactly through the tilt.
  static GraphField plane(const PeriodicGrid& grid, Vec2 slope, double offset) {
    if (grid.dim() == 1) slope[1] = 0.0;
    return sample(grid, [&](double x, double y) { return slope[0] * x + slope[1] * y + offset; }, slope);
  }

  const PeriodicGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  const Vec2& tilt() const { return tilt_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t flat) const { return values_[flat]; }

  /// Value at an arbitrary lattice index, wrapping periodically and adding the
  /// tilt for every period crossed.
  double at(long i0, long i1 = 0) const {
    const long n0 = static_cast<long>(grid_.points(0));
    const long n1 = static_cast<long>(grid_.points(1));
    const long w0 = wrap_count(i0, n0);
    const long w1 = wrap_count(i1, n1);
    double v = values_[grid_.flat(static_cast<std::size_t>(i0 - w0 * n0), static_cast<std::size_t>(i1 - w1 * n1))];
    if (w0 != 0) v += tilt_[0] * grid_.period(0) * static_cast<double>(w0);
    if (w1 != 0) v += tilt_[1] * grid_.period(1) * static_cast<double>(w1);
    return v;
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  GraphField shifted(double c) const {
    auto v = values_;
    for (double& x : v) x += c;
    return {grid_, std::move(v), tilt_};
  }

  /// Same field with the lattice rolled by whole nodes: result(i) = this(i - shift).
  GraphField rolled(long s0, long s1 = 0) const {
    std::vector<double> v(values_.size());
    for (std::size_t n = 0; n < v.size(); ++n) {
      auto [i0, i1] = grid_.unflatten(n);
      v[n] = at(static_cast<long>(i0) - s0, static_cast<long>(i1) - s1);
    }
    return {grid_, std::move(v), tilt_};
  }

  bool compatible(const GraphField& other) const { return grid_ == other.grid_ && tilt_ == other.tilt_; }

 private:
  PeriodicGrid grid_;
  std::vector<double> values_;
  Vec2 tilt_;
};

/// The fixed unit vector r in R^{d+1}; last component strictly positive.
class Direction {
 public:
  static constexpr double unit_tolerance = 1e-12;

  explicit Direction(std::span<const double> components) {
    if (components.size() != 2 && components.size() != 3)
      throw std::invalid_argument("Direction: need 2 or 3 components");
    size_ = components.size();
    double norm2 = 0.0;
    for (std::size_t i = 0; i < size_; ++i) {
      c_[i] = components[i];
      norm2 += c_[i] * c_[i];
    }
    if (std::abs(std::sqrt(norm2) - 1.0) > unit_tolerance) throw std::invalid_argument("Direction: not a unit vector");
    if (!(normal_component() > 0.0)) throw std::invalid_argument("Direction: last component must be positive");
  }
  Direction(std::initializer_list<double> components)
      : Direction(std::span<const double>(components.begin(), components.size())) {}

  /// Normalizes an arbitrary nonzero vector, then validates it.
  static Direction normalized(std::span<const double> v) {
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw std::invalid_argument("Direction: zero or non-finite vector");
    std::vector<double> u(v.begin(), v.end());
    for (double& x : u) x /= std::sqrt(norm2);
    return Direction(std::span<const double>(u));
  }

  /// e_n for domain dimension d.
  static Direction vertical(int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim) + 1, 0.0);
    v.back() = 1.0;
    return Direction(std::span<const double>(v));
  }

  int domain_dim() const { return static_cast<int>(size_) - 1; }
  std::size_t size() const { return size_; }
  double operator[](std::size_t i) const { return c_[i]; }
  double normal_component() const { return c_[size_ - 1]; }
  /// Horizontal part r', padded to two entries.
  Vec2 horizontal() const { return size_ == 2 ? Vec2{c_[0], 0.0} : Vec2{c_[0], c_[1]}; }
  bool is_vertical() const { return normal_component() == 1.0; }

 private:
  std::array<double, 3> c_{};
  std::size_t size_ = 0;
};

inline void require_same_dim(const GraphField& f, const Direction& r) {
  if (f.grid().dim() != r.domain_dim())
    throw std::invalid_argument("direction has " + std::to_string(r.size()) + " components for a " +
                                std::to_string(f.grid().dim()) + "-d grid");
}

}  // namespace flowforge
