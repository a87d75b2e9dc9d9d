#pragma once

// Finite-difference differential geometry of sampled graphs.
//
// All stencils are second-order central differences with periodic wrap (and
// tilt, see GraphField). In d = 1 the second component of every vector and
// the xy/yy entries of every Hessian are zero.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "parallel.hpp"

namespace flowforge {

struct Hessian {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double operator()(int i, int j) const {
    if (i == 0 && j == 0) return xx;
    if (i == 1 && j == 1) return yy;
    return xy;
  }
};

using ScalarField = std::vector<double>;

inline Vec2 gradient_at(const GraphField& g, std::size_t node) {
  const auto& grid = g.grid();
  auto [i0, i1] = grid.unflatten(node);
  const long a = static_cast<long>(i0);
  const long b = static_cast<long>(i1);
  Vec2 out{(g.at(a + 1, b) - g.at(a - 1, b)) / (2.0 * grid.spacing(0)), 0.0};
  if (grid.dim() == 2) out[1] = (g.at(a, b + 1) - g.at(a, b - 1)) / (2.0 * grid.spacing(1));
  return out;
}

inline Hessian hessian_at(const GraphField& g, std::size_t node) {
  const auto& grid = g.grid();
  auto [i0, i1] = grid.unflatten(node);
  const long a = static_cast<long>(i0);
  const long b = static_cast<long>(i1);
  const double h0 = grid.spacing(0);
  const double c = g.at(a, b);
  Hessian out;
  out.xx = (g.at(a + 1, b) - 2.0 * c + g.at(a - 1, b)) / (h0 * h0);
  if (grid.dim() == 2) {
    const double h1 = grid.spacing(1);
    out.yy = (g.at(a, b + 1) - 2.0 * c + g.at(a, b - 1)) / (h1 * h1);
    out.xy = (g.at(a + 1, b + 1) - g.at(a + 1, b - 1) - g.at(a - 1, b + 1) + g.at(a - 1, b - 1)) / (4.0 * h0 * h1);
  }
  return out;
}

inline double squared_norm(const Vec2& v) { return v[0] * v[0] + v[1] * v[1]; }

/// sum_ij (delta_ij - g_i g_j / (1 + |g|^2)) H_ij
inline double metric_trace(const Vec2& grad, const Hessian& hess) {
  const double w2 = 1.0 + squared_norm(grad);
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += ((i == j ? 1.0 : 0.0) - grad[i] * grad[j] / w2) * hess(i, j);
  return s;
}

/// Upward unit normal (-grad, 1) / sqrt(1 + |grad|^2) as a (d+1)-vector.
inline std::vector<double> normal_vector(const GraphField& g, std::size_t node) {
  const Vec2 grad = gradient_at(g, node);
  const double w = std::sqrt(1.0 + squared_norm(grad));
  if (g.grid().dim() == 1) return {-grad[0] / w, 1.0 / w};
  return {-grad[0] / w, -grad[1] / w, 1.0 / w};
}

inline std::vector<Vec2> gradient(const GraphField& g) {
  std::vector<Vec2> out(g.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = gradient_at(g, n);
  return out;
}

inline std::vector<Hessian> hessian(const GraphField& g) {
  std::vector<Hessian> out(g.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = hessian_at(g, n);
  return out;
}

/// Mean curvature div(grad / W), assembled as metric_trace / W.
inline ScalarField curvature(const GraphField& g) {
  ScalarField k(g.size());
  for (std::size_t n = 0; n < k.size(); ++n) {
    const Vec2 grad = gradient_at(g, n);
    k[n] = metric_trace(grad, hessian_at(g, n)) / std::sqrt(1.0 + squared_norm(grad));
  }
  return k;
}

/// r_n - <r', grad>, which equals <nu, r> * sqrt(1 + |grad|^2).
inline double tilted_weight(const Vec2& grad, const Direction& r) {
  const Vec2 rh = r.horizontal();
  return r.normal_component() - (rh[0] * grad[0] + rh[1] * grad[1]);
}

/// Coefficient <r, e_n> / (<nu, e_n> <nu, r>) of the vertical flow law.
inline double flow_coefficient(const Vec2& grad, const Direction& r) {
  const double w2 = 1.0 + squared_norm(grad);
  return r.normal_component() * w2 / tilted_weight(grad, r);
}

/// Vertical velocity of the curvature flow graph equation:
///   coeff(r, nu) * sum_ij (delta_ij - g_i g_j / (1 + |g|^2)) g_ij.
/// Throws DegenerateDirection (with the node) where <nu, r> <= 0.
inline ScalarField flow_rhs(const GraphField& g, const Direction& r) {
  require_same_dim(g, r);
  ScalarField out(g.size());
  parallel_chunks(g.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const Vec2 grad = gradient_at(g, n);
      if (!(tilted_weight(grad, r) > 0.0)) {
        DegenerateDirection e("flow_rhs: <nu, r> <= 0");
        e.set_node(n);
        throw e;
      }
      out[n] = flow_coefficient(grad, r) * metric_trace(grad, hessian_at(g, n));
    }
  });
  return out;
}

/// max |a - b| over nodes.
inline double sup_dist(const GraphField& a, const GraphField& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch("sup_dist: fields live on different grids");
  if (a.tilt() != b.tilt()) throw GridMismatch("sup_dist: fields carry different tilts");
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

}  // namespace flowforge
