#pragma once

// Reference solutions for the limiting curvature-flow equation: an explicit
// finite-difference solver and closed Fourier forms for d = 1, r = e_n, where
// the equation reduces to the heat equation gamma_t = gamma_xx.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "trajectory.hpp"
#include "trig_series.hpp"

namespace flowforge {

struct PdeParams {
  double safety = 0.2;
  double t_total = 0.1;
  std::size_t snapshot_count = 2;

  static constexpr double blow_up_threshold = 1e6;

  void validate() const {
    if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("PdeParams: safety must lie in (0, 1]");
    if (!(t_total > 0.0)) throw std::invalid_argument("PdeParams: t_total must be positive");
    if (snapshot_count < 2) throw std::invalid_argument("PdeParams: need at least two snapshots");
  }
};

/// Forward Euler for gamma_t = flow_rhs(gamma, r) with the CFL step
///   dt = safety * min h^2 / (2 d max coeff)
/// recomputed every step; steps are shortened to land on snapshot times.
inline Trajectory pde_solve(const GraphField& f0, const Direction& r, const PdeParams& pp) {
  pp.validate();
  require_same_dim(f0, r);
  const auto& grid = f0.grid();
  const double h2 = grid.min_spacing() * grid.min_spacing();
  const std::size_t n = f0.size();

  Trajectory traj;
  traj.meta.source = "pde";
  traj.meta.direction = components(r);
  traj.meta.t_total = pp.t_total;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(f0);

  std::vector<double> g(f0.values().begin(), f0.values().end());
  std::vector<double> rhs(n);
  std::vector<double> chunk_max;
  std::mutex max_mutex;
  double time = 0.0;
  std::size_t steps = 0;
  for (std::size_t s = 1; s < pp.snapshot_count; ++s) {
    const double target = pp.t_total * static_cast<double>(s) / static_cast<double>(pp.snapshot_count - 1);
    bool reached = false;
    while (!reached) {
      const GraphField cur(grid, g, f0.tilt());
      double coeff_max = 0.0;
      try {
        chunk_max.clear();
        parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
          double local = 0.0;
          for (std::size_t i = begin; i < end; ++i) {
            const Vec2 grad = gradient_at(cur, i);
            if (!(tilted_weight(grad, r) > 0.0)) {
              DegenerateDirection e("pde_solve: <nu, r> <= 0");
              e.set_node(i);
              throw e;
            }
            const double c = flow_coefficient(grad, r);
            rhs[i] = c * metric_trace(grad, hessian_at(cur, i));
            local = std::max(local, c);
          }
          std::lock_guard lock(max_mutex);
          chunk_max.push_back(local);
        });
      } catch (NumericalError& e) {
        e.set_time(time);
        throw;
      }
      for (double c : chunk_max) coeff_max = std::max(coeff_max, c);

      double dt = pp.safety * h2 / (2.0 * grid.dim() * coeff_max);
      if (time + dt >= target) {
        dt = target - time;
        reached = true;
      }
      for (std::size_t i = 0; i < n; ++i) {
        g[i] += dt * rhs[i];
        if (!(std::abs(g[i]) <= PdeParams::blow_up_threshold)) {
          BlowUp e("pde_solve: sample exceeded 1e6");
          e.set_node(i);
          e.set_time(time + dt);
          throw e;
        }
      }
      time = reached ? target : time + dt;
      ++steps;
    }
    traj.times.push_back(target);
    traj.snapshots.emplace_back(grid, g, f0.tilt());
  }
  traj.meta.steps = steps;
  return traj;
}

/// Exact heat-equation evolution of a 1-d trigonometric series: each mode
/// decays by exp(-k^2 t).
inline GraphField exact_heat_d1(const TrigSeries& series, double t, const PeriodicGrid& grid) {
  if (series.dim != 1 || grid.dim() != 1) throw std::invalid_argument("exact_heat_d1: one-dimensional data only");
  if (!(t >= 0.0)) throw std::invalid_argument("exact_heat_d1: t must be nonnegative");
  return series.filtered([t](double k2) { return std::exp(-k2 * t); }).sample(grid);
}

/// Solution of g - lambda g_xx = f for a 1-d trigonometric series f.
inline GraphField exact_resolvent_d1(const TrigSeries& series, double lambda, const PeriodicGrid& grid) {
  if (series.dim != 1 || grid.dim() != 1) throw std::invalid_argument("exact_resolvent_d1: one-dimensional data only");
  return series.filtered([lambda](double k2) { return 1.0 / (1.0 + lambda * k2); }).sample(grid);
}

}  // namespace flowforge
