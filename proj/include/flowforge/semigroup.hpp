#pragma once

// Iteration of the one-step operator, the resolvent built from it, and
// empirical checks of its semigroup properties and local speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "heat_step.hpp"
#include "parallel.hpp"
#include "trajectory.hpp"

namespace flowforge {

/// Snapshots H(t_total / j)^k f0 for k = 0..j.
inline Trajectory iterate_scheme(const GraphField& f0, const Direction& r, double t_total, std::size_t steps,
                                 const HeatStepParams& params) {
  if (!(t_total > 0.0)) throw std::invalid_argument("iterate_scheme: t_total must be positive");
  if (steps < 1) throw std::invalid_argument("iterate_scheme: need at least one step");
  const double dt = t_total / static_cast<double>(steps);
  const HeatStepParams step_params = params.with_time(dt);

  Trajectory traj;
  traj.meta.source = "scheme";
  traj.meta.direction = components(r);
  traj.meta.t_total = t_total;
  traj.meta.steps = steps;
  traj.meta.heat = step_params;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(f0);
  for (std::size_t k = 1; k <= steps; ++k) {
    try {
      StepResult res = heat_step(traj.snapshots.back(), r, step_params);
      traj.meta.total.merge(res.diagnostics);
      traj.meta.step_diagnostics.push_back(res.diagnostics);
      traj.snapshots.push_back(std::move(res.field));
    } catch (NumericalError& e) {
      e.set_step(k);
      throw;
    }
    // k * dt rather than accumulation, so the last time is t_total up to rounding.
    traj.times.push_back(static_cast<double>(k) * dt);
  }
  return traj;
}

struct ResolventParams {
  double lambda = 1.0;
  double t = 1e-3;
  double fp_tol = 1e-9;
  std::size_t max_iters = 10000;

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("ResolventParams: lambda must be positive");
    if (!(t > 0.0)) throw std::invalid_argument("ResolventParams: t must be positive");
    if (!(fp_tol > 0.0)) throw std::invalid_argument("ResolventParams: fp_tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("ResolventParams: max_iters must be >= 1");
  }

  /// Lipschitz bound (lambda/t) / (1 + lambda/t) of the damped map.
  double contraction_bound() const {
    const double mu = lambda / t;
    return mu / (1.0 + mu);
  }
};

struct ResolventResult {
  GraphField field;
  std::size_t iterations = 0;
  double residual = 0.0;                 // |g + (lambda/t)(g - H g) - f|_sup at the returned field
  std::vector<double> step_distances;    // |g_{k+1} - g_k|_sup
  StepDiagnostics diagnostics;

  /// Largest ratio of consecutive step distances.
  double max_ratio() const {
    double m = 0.0;
    for (std::size_t k = 1; k < step_distances.size(); ++k)
      if (step_distances[k - 1] > 0.0) m = std::max(m, step_distances[k] / step_distances[k - 1]);
    return m;
  }
};

/// g + (lambda/t) (g - H(t) g) - f, nodewise.
inline std::vector<double> resolvent_defect(const GraphField& g, const GraphField& hg, const GraphField& f,
                                            double lambda, double t) {
  std::vector<double> out(g.size());
  const double mu = lambda / t;
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = g[n] + mu * (g[n] - hg[n]) - f[n];
  return out;
}

/// Fixed point of g -> (f + (lambda/t) H(t) g) / (1 + lambda/t), started at f.
///
/// Stops once the operator residual (1 + lambda/t) |g_k - T g_k| falls below
/// fp_tol, which also bounds the step |g_{k+1} - g_k| by fp_tol.
inline ResolventResult resolvent_approx(const GraphField& f, const Direction& r, const ResolventParams& rp,
                                        const HeatStepParams& hp) {
  rp.validate();
  const HeatStepParams step = hp.with_time(rp.t);
  const double mu = rp.lambda / rp.t;

  ResolventResult res{f, 0, 0.0, {}, {}};
  GraphField g = f;
  double residual = 0.0;
  for (std::size_t k = 1; k <= rp.max_iters; ++k) {
    StepResult hs = heat_step(g, r, step);
    res.diagnostics.merge(hs.diagnostics);
    std::vector<double> next(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) next[n] = (f[n] + mu * hs.field[n]) / (1.0 + mu);
    GraphField next_field(f.grid(), std::move(next), f.tilt());
    const double d = sup_dist(next_field, g);
    res.step_distances.push_back(d);
    residual = (1.0 + mu) * d;
    g = std::move(next_field);
    res.iterations = k;
    if (residual <= rp.fp_tol) {
      StepResult last = heat_step(g, r, step);
      res.diagnostics.merge(last.diagnostics);
      const auto defect = resolvent_defect(g, last.field, f, rp.lambda, rp.t);
      res.residual = 0.0;
      for (double v : defect) res.residual = std::max(res.residual, std::abs(v));
      res.field = std::move(g);
      return res;
    }
  }
  throw MaxItersExceeded("resolvent_approx: no convergence, last residual " + std::to_string(residual), residual);
}

struct SpeedResult {
  ScalarField speed;
  StepDiagnostics diagnostics;
};

/// (H(t) g - g) / t at every node.
inline SpeedResult empirical_vertical_speed(const GraphField& g, const Direction& r, const HeatStepParams& params) {
  StepResult hs = heat_step(g, r, params);
  SpeedResult out{ScalarField(g.size()), hs.diagnostics};
  for (std::size_t n = 0; n < g.size(); ++n) out.speed[n] = (hs.field[n] - g[n]) / params.t;
  return out;
}

struct Violation {
  double amount = 0.0;
  std::size_t node = 0;

  void take(double v, std::size_t n) {
    if (v > amount) {
      amount = v;
      node = n;
    }
  }
};

struct PairReport {
  double shift_constant = 0.0;
  double input_distance = 0.0;
  double output_distance = 0.0;
  double root_tol = 0.0;
  Violation shift;        // |H(g + C) - (H g + C)|
  Violation monotone;     // envelope order broken by H
  Violation contraction;  // |Hg - Hm| - |g - m|, positive part

  bool passes(double shift_tol) const {
    return shift.amount <= shift_tol && monotone.amount <= 2.0 * root_tol && contraction.amount <= 4.0 * root_tol;
  }
};

struct SemigroupReport {
  std::vector<PairReport> pairs;
  StepDiagnostics diagnostics;

  double worst_shift() const { return worst([](const PairReport& p) { return p.shift.amount; }); }
  double worst_monotone() const { return worst([](const PairReport& p) { return p.monotone.amount; }); }
  double worst_contraction() const { return worst([](const PairReport& p) { return p.contraction.amount; }); }

  std::size_t failures(double shift_tol = 1e-8) const {
    return static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(), [&](const PairReport& p) { return !p.passes(shift_tol); }));
  }

 private:
  template <typename F>
  double worst(F&& f) const {
    double m = 0.0;
    for (const auto& p : pairs) m = std::max(m, f(p));
    return m;
  }
};

namespace detail {

inline PairReport check_pair(const GraphField& a, const GraphField& b, const Direction& r,
                             const HeatStepParams& params, StepDiagnostics& diag) {
  if (!a.compatible(b)) throw GridMismatch("check_semigroup_properties: pair fields are incompatible");
  const std::size_t n = a.size();
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::min(a[i], b[i]);
    hi[i] = std::max(a[i], b[i]);
  }
  const GraphField lower(a.grid(), std::move(lo), a.tilt());
  const GraphField upper(a.grid(), std::move(hi), a.tilt());

  PairReport rep;
  rep.input_distance = sup_dist(a, b);
  rep.shift_constant = rep.input_distance > 0.0 ? rep.input_distance : 1.0;
  const GraphField a_shift = a.shifted(rep.shift_constant);
  for (const GraphField* g : {&a, &b, &a_shift, &lower, &upper})
    rep.root_tol = std::max(rep.root_tol, params.tolerance_for(*g));

  auto step = [&](const GraphField& g) {
    StepResult s = heat_step(g, r, params);
    diag.merge(s.diagnostics);
    return std::move(s.field);
  };
  const GraphField ha = step(a);
  const GraphField hb = step(b);
  const GraphField ha_shift = step(a_shift);
  const GraphField hlo = step(lower);
  const GraphField hhi = step(upper);

  double out_dist = 0.0;
  std::size_t out_node = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rep.shift.take(std::abs(ha_shift[i] - (ha[i] + rep.shift_constant)), i);
    for (double v : {hlo[i] - ha[i], ha[i] - hhi[i], hlo[i] - hb[i], hb[i] - hhi[i]}) rep.monotone.take(v, i);
    const double d = std::abs(ha[i] - hb[i]);
    if (d > out_dist) {
      out_dist = d;
      out_node = i;
    }
  }
  rep.output_distance = out_dist;
  rep.contraction.take(out_dist - rep.input_distance, out_node);
  return rep;
}

}  // namespace detail

/// Shift equivariance, monotonicity on the min/max envelope and sup-norm
/// contraction of H(t), evaluated on every pair. Report only; never throws
/// on a violated property.
inline SemigroupReport check_semigroup_properties(const std::vector<std::pair<GraphField, GraphField>>& pairs,
                                                  const Direction& r, const HeatStepParams& params) {
  SemigroupReport rep;
  rep.pairs.resize(pairs.size());
  std::vector<StepDiagnostics> diags(pairs.size());
  parallel_chunks(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      rep.pairs[i] = detail::check_pair(pairs[i].first, pairs[i].second, r, params, diags[i]);
  });
  for (const auto& d : diags) rep.diagnostics.merge(d);
  return rep;
}

}  // namespace flowforge
