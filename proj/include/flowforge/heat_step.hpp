#pragma once

// One step of the diffusion-driven scheme.
//
// The weighted surface measure <nu, r> delta_Sigma is diffused by the heat
// kernel for time t; the new graph is the set where the derivative of the
// diffused field along r vanishes, searched on the vertical line above each
// node. Since <nu, r> dsigma = (r_n - <r', grad gamma>) dx', the surface
// integral is a flat trapezoidal sum over grid nodes with that weight.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "parallel.hpp"

namespace flowforge {

struct HeatStepParams {
  double t = 1e-3;
  double trunc_mult = 8.0;               // kernel cut at trunc_mult * sqrt(4t)
  std::optional<double> root_tol;        // default 1e-10 * max(1, |gamma|_sup)
  int max_bisect = 200;
  int max_newton = 20;
  std::optional<double> bracket_margin;  // default 3 * sqrt(4t)
  double kernel_scale = 1.0;             // multiplies (4 pi t)^{-n/2}; never moves zero sets

  static constexpr int scan_intervals = 32;

  void validate() const {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("HeatStepParams: t must be positive");
    if (!(trunc_mult >= 4.0)) throw std::invalid_argument("HeatStepParams: trunc_mult must be >= 4");
    if (root_tol && !(*root_tol > 0.0)) throw std::invalid_argument("HeatStepParams: root_tol must be positive");
    if (bracket_margin && !(*bracket_margin > 0.0))
      throw std::invalid_argument("HeatStepParams: bracket_margin must be positive");
    if (max_bisect < 1 || max_newton < 1) throw std::invalid_argument("HeatStepParams: iteration caps must be >= 1");
    if (!(kernel_scale > 0.0)) throw std::invalid_argument("HeatStepParams: kernel_scale must be positive");
  }

  double kernel_width() const { return std::sqrt(4.0 * t); }
  double kernel_radius() const { return trunc_mult * kernel_width(); }
  double margin() const { return bracket_margin.value_or(3.0 * kernel_width()); }
  double tolerance_for(const GraphField& g) const { return root_tol.value_or(1e-10 * std::max(1.0, g.sup_norm())); }

  HeatStepParams with_time(double step) const {
    HeatStepParams p = *this;
    p.t = step;
    return p;
  }
};

/// u, <grad u, r> and d/dx_n <grad u, r> at one point of space-time.
struct FieldProbe {
  double u = 0.0;
  double du_r = 0.0;
  double d2u_nr = 0.0;
};

/// Outcome of one vertical root solve.
struct SurfacePoint {
  double height = 0.0;
  int newton_iterations = 0;
  bool multiple_roots = false;
  bool concave = true;        // d2u_nr < 0 at the root
  bool sign_pattern = true;   // du_r > 0 below, < 0 above
  bool newton_fallback = false;
};

struct StepDiagnostics {
  std::size_t solves = 0;
  std::size_t multiple_roots = 0;
  std::size_t concavity_failures = 0;
  std::size_t sign_pattern_failures = 0;
  std::size_t newton_fallbacks = 0;
  int max_newton_iterations = 0;
  std::size_t under_resolved = 0;  // steps with sqrt(4t) < 2 max h

  void record(const SurfacePoint& p) {
    ++solves;
    multiple_roots += p.multiple_roots ? 1 : 0;
    concavity_failures += p.concave ? 0 : 1;
    sign_pattern_failures += p.sign_pattern ? 0 : 1;
    newton_fallbacks += p.newton_fallback ? 1 : 0;
    max_newton_iterations = std::max(max_newton_iterations, p.newton_iterations);
  }

  void merge(const StepDiagnostics& o) {
    solves += o.solves;
    multiple_roots += o.multiple_roots;
    concavity_failures += o.concavity_failures;
    sign_pattern_failures += o.sign_pattern_failures;
    newton_fallbacks += o.newton_fallbacks;
    max_newton_iterations = std::max(max_newton_iterations, o.max_newton_iterations);
    under_resolved += o.under_resolved;
  }

  std::size_t warnings() const {
    return multiple_roots + concavity_failures + sign_pattern_failures + newton_fallbacks + under_resolved;
  }
};

struct StepResult {
  GraphField field;
  StepDiagnostics diagnostics;
};

/// r_n - <r', grad gamma(node)>; exactly 1 for r = e_n.
inline double density_weight(const GraphField& g, const Direction& r, std::size_t node) {
  require_same_dim(g, r);
  const double w = tilted_weight(gradient_at(g, node), r);
  if (!(w > 0.0)) {
    DegenerateDirection e("density_weight: <nu, r> <= 0");
    e.set_node(node);
    throw e;
  }
  return w;
}

inline std::vector<double> density_weights(const GraphField& g, const Direction& r) {
  std::vector<double> w(g.size());
  for (std::size_t n = 0; n < w.size(); ++n) w[n] = density_weight(g, r, n);
  return w;
}

namespace detail {

// Lattice offset inside the truncation ball, with everything that does not
// depend on the field precomputed.
struct KernelOffset {
  long m0 = 0;
  long m1 = 0;
  double dist2 = 0.0;
  double along_r = 0.0;  // <x' - s', r'>
  double spatial = 0.0;  // exp(-|x' - s'|^2 / 4t)
};

// Offsets m with |m h - frac| <= radius. Offsets beyond half a period revisit
// nodes through their periodic images.
inline std::vector<KernelOffset> kernel_offsets(const PeriodicGrid& grid, const Direction& r, double t, double radius,
                                                Vec2 frac = {0.0, 0.0}) {
  const double h0 = grid.spacing(0);
  const double h1 = grid.spacing(1);
  const Vec2 rh = r.horizontal();
  const long lo0 = static_cast<long>(std::ceil((frac[0] - radius) / h0));
  const long hi0 = static_cast<long>(std::floor((frac[0] + radius) / h0));
  long lo1 = 0;
  long hi1 = 0;
  if (grid.dim() == 2) {
    lo1 = static_cast<long>(std::ceil((frac[1] - radius) / h1));
    hi1 = static_cast<long>(std::floor((frac[1] + radius) / h1));
  }
  std::vector<KernelOffset> out;
  for (long m1 = lo1; m1 <= hi1; ++m1) {
    const double d1 = grid.dim() == 2 ? static_cast<double>(m1) * h1 - frac[1] : 0.0;
    for (long m0 = lo0; m0 <= hi0; ++m0) {
      const double d0 = static_cast<double>(m0) * h0 - frac[0];
      const double dist2 = d0 * d0 + d1 * d1;
      if (dist2 > radius * radius) continue;
      out.push_back({m0, m1, dist2, rh[0] * d0 + rh[1] * d1, std::exp(-dist2 / (4.0 * t))});
    }
  }
  return out;
}

// The field restricted to the truncation ball around one base point.
class KernelWindow {
 public:
  KernelWindow(const GraphField& g, const std::vector<double>& weights, const Direction& r,
               const std::vector<KernelOffset>& offsets, std::array<long, 2> base, double t, double kernel_scale)
      : t_(t), rn_(r.normal_component()) {
    const int n = g.grid().dim() + 1;
    scale_ = kernel_scale * std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * g.grid().cell_volume();
    points_.reserve(offsets.size());
    const long n0 = static_cast<long>(g.grid().points(0));
    const long n1 = static_cast<long>(g.grid().points(1));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& off : offsets) {
      const long a = base[0] + off.m0;
      const long b = base[1] + off.m1;
      const std::size_t node = g.grid().flat(static_cast<std::size_t>(a - wrap_count(a, n0) * n0),
                                             static_cast<std::size_t>(b - wrap_count(b, n1) * n1));
      const double height = g.at(a, b);
      points_.push_back({height, weights[node], off.along_r, off.spatial});
      min_height_ = std::min(min_height_, height);
      max_height_ = std::max(max_height_, height);
      if (off.dist2 < best) {
        best = off.dist2;
        center_height_ = height;
      }
    }
  }

  bool empty() const { return points_.empty(); }
  double min_height() const { return min_height_; }
  double max_height() const { return max_height_; }
  // Height at the node nearest the base point.
  double center_height() const { return center_height_; }

  FieldProbe probe(double q) const {
    const double inv4t = 1.0 / (4.0 * t_);
    const double inv2t = 1.0 / (2.0 * t_);
    double u = 0.0;
    double du = 0.0;
    double d2 = 0.0;
    for (const auto& p : points_) {
      const double dq = p.height - q;
      const double e = p.weight * p.spatial * std::exp(-dq * dq * inv4t);
      const double a = p.along_r + dq * rn_;
      u += e;
      du += a * e;
      d2 += (a * dq * inv2t - rn_) * e;
    }
    return {scale_ * u, scale_ * du * inv2t, scale_ * d2 * inv2t};
  }

  double du_r(double q) const {
    const double inv4t = 1.0 / (4.0 * t_);
    double du = 0.0;
    for (const auto& p : points_) {
      const double dq = p.height - q;
      du += (p.along_r + dq * rn_) * p.weight * p.spatial * std::exp(-dq * dq * inv4t);
    }
    return scale_ * du / (2.0 * t_);
  }

 private:
  struct Point {
    double height;
    double weight;
    double along_r;
    double spatial;
  };
  std::vector<Point> points_;
  double t_;
  double rn_;
  double scale_ = 1.0;
  double min_height_ = std::numeric_limits<double>::infinity();
  double max_height_ = -std::numeric_limits<double>::infinity();
  double center_height_ = 0.0;
};

// Bracket, scan for sign changes, bisect, then polish with Newton.
inline SurfacePoint solve_in_window(const KernelWindow& win, const HeatStepParams& params, double tol) {
  constexpr int scan = HeatStepParams::scan_intervals;
  const double lo = win.min_height() - params.margin();
  const double hi = win.max_height() + params.margin();
  const double dq = (hi - lo) / scan;

  std::array<double, scan + 1> f{};
  for (int k = 0; k <= scan; ++k) f[k] = win.du_r(k == scan ? hi : lo + k * dq);
  if (!(f[0] > 0.0 && f[scan] < 0.0)) throw NoBracket("no sign change of du_r across the vertical bracket");

  SurfacePoint out;
  int changes = 0;
  int chosen = -1;
  double chosen_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < scan; ++k) {
    const bool up = f[k] > 0.0;
    const bool next_up = f[k + 1] > 0.0;
    if (up != next_up) ++changes;
    if (up && !next_up) {
      const double dist = std::abs(lo + (k + 0.5) * dq - win.center_height());
      if (dist < chosen_dist) {
        chosen_dist = dist;
        chosen = k;
      }
    }
  }
  out.multiple_roots = changes > 1;

  double a = lo + chosen * dq;
  double b = chosen + 1 == scan ? hi : a + dq;
  const double coarse = 1e-3 * std::sqrt(params.t);
  int bisections = 0;
  while (b - a > coarse && bisections < params.max_bisect) {
    const double m = 0.5 * (a + b);
    (win.du_r(m) > 0.0 ? a : b) = m;
    ++bisections;
  }

  double q = 0.5 * (a + b);
  bool converged = false;
  for (int it = 1; it <= params.max_newton; ++it) {
    out.newton_iterations = it;
    const FieldProbe p = win.probe(q);
    if (p.du_r == 0.0) {
      converged = true;
      break;
    }
    (p.du_r > 0.0 ? a : b) = q;
    if (!(p.d2u_nr < 0.0)) break;
    const double raw = q - p.du_r / p.d2u_nr;
    // The root may sit on a bracket end (a scan point); overshooting it by
    // less than tol is clamped rather than treated as divergence.
    if (!(raw >= a - tol && raw <= b + tol)) break;
    const double next = std::clamp(raw, a, b);
    const double step = std::abs(next - q);
    q = next;
    if (step <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    out.newton_fallback = true;
    while (b - a > tol && bisections < params.max_bisect) {
      const double m = 0.5 * (a + b);
      (win.du_r(m) > 0.0 ? a : b) = m;
      ++bisections;
    }
    q = 0.5 * (a + b);
  }

  out.height = q;
  out.concave = win.probe(q).d2u_nr < 0.0;
  const double gap = std::sqrt(params.t);
  out.sign_pattern = win.du_r(std::max(q - gap, lo)) > 0.0 && win.du_r(std::min(q + gap, hi)) < 0.0;
  return out;
}

}  // namespace detail

/// Probe of the diffused field at (s', q), s' an arbitrary domain point.
inline FieldProbe eval_probe(const GraphField& g, const Direction& r, Vec2 point, double q,
                             const HeatStepParams& params) {
  params.validate();
  require_same_dim(g, r);
  const auto& grid = g.grid();
  std::array<long, 2> base{static_cast<long>(std::floor(point[0] / grid.spacing(0))), 0};
  Vec2 frac{point[0] - static_cast<double>(base[0]) * grid.spacing(0), 0.0};
  if (grid.dim() == 2) {
    base[1] = static_cast<long>(std::floor(point[1] / grid.spacing(1)));
    frac[1] = point[1] - static_cast<double>(base[1]) * grid.spacing(1);
  }
  auto offsets = detail::kernel_offsets(grid, r, params.t, params.kernel_radius(), frac);
  if (offsets.empty()) throw EmptyStencil("eval_probe: truncation ball contains no grid node");
  const auto weights = density_weights(g, r);
  return detail::KernelWindow(g, weights, r, offsets, base, params.t, params.kernel_scale).probe(q);
}

/// Height of the new surface above one node.
inline SurfacePoint solve_surface_point(const GraphField& g, const Direction& r, std::size_t node,
                                        const HeatStepParams& params) {
  params.validate();
  require_same_dim(g, r);
  auto offsets = detail::kernel_offsets(g.grid(), r, params.t, params.kernel_radius());
  const auto weights = density_weights(g, r);
  auto [i0, i1] = g.grid().unflatten(node);
  detail::KernelWindow win(g, weights, r, offsets, {static_cast<long>(i0), static_cast<long>(i1)}, params.t,
                           params.kernel_scale);
  try {
    return detail::solve_in_window(win, params, params.tolerance_for(g));
  } catch (NumericalError& e) {
    e.set_node(node);
    throw;
  }
}

/// The one-step operator H(t): solves the vertical root problem at every node.
/// Per-node solves run in parallel; diagnostics are summed.
inline StepResult heat_step(const GraphField& g, const Direction& r, const HeatStepParams& params) {
  params.validate();
  require_same_dim(g, r);
  const auto& grid = g.grid();
  const auto offsets = detail::kernel_offsets(grid, r, params.t, params.kernel_radius());
  const auto weights = density_weights(g, r);
  const double tol = params.tolerance_for(g);

  std::vector<double> out(g.size());
  std::vector<StepDiagnostics> per_chunk;
  std::mutex chunk_mutex;
  parallel_chunks(g.size(), [&](std::size_t begin, std::size_t end) {
    StepDiagnostics local;
    for (std::size_t n = begin; n < end; ++n) {
      auto [i0, i1] = grid.unflatten(n);
      detail::KernelWindow win(g, weights, r, offsets, {static_cast<long>(i0), static_cast<long>(i1)}, params.t,
                               params.kernel_scale);
      try {
        const SurfacePoint p = detail::solve_in_window(win, params, tol);
        out[n] = p.height;
        local.record(p);
      } catch (NumericalError& e) {
        e.set_node(n);
        throw;
      }
    }
    std::lock_guard lock(chunk_mutex);
    per_chunk.push_back(local);
  });

  StepDiagnostics diag;
  diag.under_resolved = params.kernel_width() < 2.0 * grid.max_spacing() ? 1 : 0;
  for (const auto& d : per_chunk) diag.merge(d);
  return {GraphField(grid, std::move(out), g.tilt()), diag};
}

}  // namespace flowforge
