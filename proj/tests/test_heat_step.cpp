#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "flowforge/geometry.hpp"
#include "flowforge/heat_step.hpp"
#include "oracles.hpp"

using namespace flowforge;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

HeatStepParams at_time(double t) {
  HeatStepParams p;
  p.t = t;
  return p;
}

GraphField sine_1d(std::size_t n, double amp) {
  return GraphField::sample(PeriodicGrid::line(two_pi, n), [=](double x, double) { return amp * std::sin(x); });
}

Direction tilted_1d(double theta) { return Direction{std::sin(theta), std::cos(theta)}; }

Direction tilted_2d() {
  const double v[] = {0.2, -0.3, 1.0};
  return Direction::normalized(v);
}

std::vector<double> comps(const Direction& r) {
  std::vector<double> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) v[i] = r[i];
  return v;
}

}  // namespace

TEST(DensityWeight, VerticalDirectionGivesOne) {
  const GraphField g = oracle::random_field(PeriodicGrid::square(two_pi, 16), 3, 2.0);
  for (double w : density_weights(g, Direction::vertical(2))) EXPECT_EQ(w, 1.0);
}

TEST(DensityWeight, FlatFieldGivesNormalComponent) {
  const GraphField g = GraphField::constant(PeriodicGrid::line(1.0, 16), 0.4);
  for (double theta : {0.1, 0.7, 1.2}) EXPECT_EQ(density_weight(g, tilted_1d(theta), 5), std::cos(theta));
}

TEST(DensityWeight, EqualsNormalDotDirectionTimesLength) {
  const GraphField g = oracle::random_field(PeriodicGrid::square(two_pi, 16), 9, 0.5);
  const Direction r = tilted_2d();
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto nu = normal_vector(g, n);
    const double w = std::sqrt(1.0 + squared_norm(gradient_at(g, n)));
    EXPECT_NEAR(density_weight(g, r, n), (nu[0] * r[0] + nu[1] * r[1] + nu[2] * r[2]) * w, 1e-14);
  }
}

TEST(DensityWeight, TangentDirectionThrows) {
  const GraphField g = GraphField::plane(PeriodicGrid::line(16.0, 16), {1.0, 0.0}, 0.0);
  const double rc[] = {1.0, 1.0};
  EXPECT_THROW(density_weight(g, Direction::normalized(rc), 3), DegenerateDirection);
  EXPECT_THROW(heat_step(g, Direction::normalized(rc), at_time(1e-2)), DegenerateDirection);
}

TEST(Params, Validation) {
  HeatStepParams p;
  p.t = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.trunc_mult = 2.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.kernel_scale = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(EvalProbe, FlatSheetIsStationaryAtItsHeight) {
  const GraphField g = GraphField::constant(PeriodicGrid::line(two_pi, 128), 0.0);
  const auto r = Direction::vertical(1);
  EXPECT_EQ(eval_probe(g, r, {1.0, 0.0}, 0.0, at_time(1e-2)).du_r, 0.0);
  EXPECT_LT(eval_probe(g, r, {1.0, 0.0}, 0.1, at_time(1e-2)).du_r, 0.0);
  EXPECT_GT(eval_probe(g, r, {1.0, 0.0}, -0.1, at_time(1e-2)).du_r, 0.0);
}

TEST(EvalProbe, AffineSheetIsStationaryOnItself) {
  const GraphField g = GraphField::plane(PeriodicGrid::square(two_pi, 128), {0.4, -0.2}, 0.3);
  const auto r = Direction::vertical(2);
  const HeatStepParams p = at_time(1e-2);
  const Vec2 s{1.3, 2.1};
  const double q = 0.4 * s[0] - 0.2 * s[1] + 0.3;
  const double scale = std::abs(eval_probe(g, r, s, q + std::sqrt(p.t), p).du_r);
  EXPECT_LE(std::abs(eval_probe(g, r, s, q, p).du_r), 1e-12 * scale);
}

TEST(EvalProbe, EmptyTruncationBall) {
  const GraphField g = GraphField::constant(PeriodicGrid::line(8.0, 8), 0.0);
  EXPECT_THROW(eval_probe(g, Direction::vertical(1), {0.5, 0.0}, 0.0, at_time(1e-4)), EmptyStencil);
}

TEST(EvalProbe, MatchesUntruncatedLongDoubleSums) {
  struct Case {
    PeriodicGrid grid;
    Direction r;
  };
  const Case cases[] = {{PeriodicGrid::line(two_pi, 64), Direction::vertical(1)},
                        {PeriodicGrid::line(two_pi, 64), tilted_1d(0.4)},
                        {PeriodicGrid::square(two_pi, 16), tilted_2d()}};
  for (const auto& c : cases)
    for (unsigned seed = 0; seed < 3; ++seed) {
      const GraphField g = oracle::random_field(c.grid, seed, 0.5);
      const double t = 2e-2;
      for (double q : {-0.3, 0.0, 0.2}) {
        const Vec2 s{0.77, c.grid.dim() == 2 ? 1.9 : 0.0};
        const FieldProbe got = eval_probe(g, c.r, s, q, at_time(t));
        const auto want = oracle::brute_force_probe(g, comps(c.r), s[0], s[1], q, t);
        const double su = std::abs(static_cast<double>(want.u));
        EXPECT_NEAR(got.u, static_cast<double>(want.u), 1e-12 * su);
        EXPECT_NEAR(got.du_r, static_cast<double>(want.du), 1e-11 * su / t);
        EXPECT_NEAR(got.d2u_nr, static_cast<double>(want.d2), 1e-11 * su / t);
      }
    }
}

TEST(EvalProbe, DerivativesMatchFiniteDifferences) {
  const GraphField g = oracle::random_field(PeriodicGrid::square(two_pi, 32), 4, 0.6);
  const Direction r = tilted_2d();
  const HeatStepParams p = at_time(1e-2);
  const Vec2 s{2.0, 4.0};
  const double q = 0.1;
  const double d = 1e-5;
  auto u = [&](double x, double y, double z) { return eval_probe(g, r, {x, y}, z, p).u; };
  const double dx = (u(s[0] + d, s[1], q) - u(s[0] - d, s[1], q)) / (2 * d);
  const double dy = (u(s[0], s[1] + d, q) - u(s[0], s[1] - d, q)) / (2 * d);
  const double dz = (u(s[0], s[1], q + d) - u(s[0], s[1], q - d)) / (2 * d);
  const FieldProbe got = eval_probe(g, r, s, q, p);
  EXPECT_NEAR(got.du_r, r[0] * dx + r[1] * dy + r[2] * dz, 1e-5 * std::abs(got.u) / p.t);
  auto du = [&](double z) { return eval_probe(g, r, s, z, p).du_r; };
  EXPECT_NEAR(got.d2u_nr, (du(q + d) - du(q - d)) / (2 * d), 1e-5 * std::abs(got.u) / p.t);
}

TEST(SurfacePoint, ConstantFieldStaysPut) {
  for (const Direction& r : {Direction::vertical(1), tilted_1d(0.5)}) {
    const GraphField g = GraphField::constant(PeriodicGrid::line(two_pi, 64), 0.8);
    const HeatStepParams p = at_time(1e-2);
    const SurfacePoint sp = solve_surface_point(g, r, 7, p);
    EXPECT_NEAR(sp.height, 0.8, p.tolerance_for(g));
    EXPECT_FALSE(sp.multiple_roots);
    EXPECT_TRUE(sp.concave);
    EXPECT_TRUE(sp.sign_pattern);
  }
}

TEST(SurfacePoint, AffineFieldIsFixed) {
  const GraphField g = GraphField::plane(PeriodicGrid::line(two_pi, 128), {0.6, 0.0}, -0.2);
  const auto x = g.grid().coordinate(40);
  EXPECT_NEAR(solve_surface_point(g, Direction::vertical(1), 40, at_time(1e-3)).height, 0.6 * x[0] - 0.2, 1e-10);
}

TEST(SurfacePoint, OddSymmetryPinsSineZero) {
  const GraphField g = sine_1d(256, 1.0);
  const double t = 1e-3;
  EXPECT_LE(std::abs(solve_surface_point(g, Direction::vertical(1), 0, at_time(t)).height), 10 * std::pow(t, 1.5));
}

TEST(SurfacePoint, MatchesBruteForceRoot) {
  struct Case {
    PeriodicGrid grid;
    Direction r;
    std::size_t node;
  };
  const Case cases[] = {{PeriodicGrid::line(two_pi, 64), Direction::vertical(1), 11},
                        {PeriodicGrid::line(two_pi, 64), tilted_1d(-0.3), 40},
                        {PeriodicGrid::square(two_pi, 16), tilted_2d(), 77}};
  for (const auto& c : cases) {
    const GraphField g = oracle::random_field(c.grid, 21, 0.5);
    const double t = 2e-2;
    const double want = oracle::brute_force_root(g, comps(c.r), c.node, t);
    EXPECT_NEAR(solve_surface_point(g, c.r, c.node, at_time(t)).height, want, 1e-9);
  }
}

TEST(SurfacePoint, UnderflowedBracketIsNoBracket) {
  const GraphField g = sine_1d(64, 0.5);
  HeatStepParams p = at_time(1e-3);
  p.bracket_margin = 100 * p.kernel_width();
  try {
    heat_step(g, Direction::vertical(1), p);
    FAIL() << "expected NoBracket";
  } catch (const NoBracket& e) {
    EXPECT_TRUE(e.node().has_value());
  }
}

TEST(SurfacePoint, StackedSheetsFlagMultipleRoots) {
  // sin(16 x) on 64 nodes samples 0, 1, 0, -1: three sheets far apart compared
  // with sqrt(t). The root nearest the node's own height is kept.
  const GraphField g = GraphField::sample(PeriodicGrid::line(two_pi, 64), [](double x, double) { return std::sin(16 * x); });
  const SurfacePoint sp = solve_surface_point(g, Direction::vertical(1), 1, at_time(1e-2));
  EXPECT_TRUE(sp.multiple_roots);
  EXPECT_NEAR(sp.height, 1.0, 0.1);
  const StepResult res = heat_step(g, Direction::vertical(1), at_time(1e-2));
  EXPECT_GT(res.diagnostics.multiple_roots, 0u);
  EXPECT_GT(res.diagnostics.warnings(), 0u);
}

TEST(HeatStep, ConstantAndShift) {
  const auto grid = PeriodicGrid::square(two_pi, 64);
  const HeatStepParams p = at_time(1e-2);
  const StepResult c = heat_step(GraphField::constant(grid, -1.5), Direction::vertical(2), p);
  EXPECT_LE(sup_dist(c.field, GraphField::constant(grid, -1.5)), p.tolerance_for(c.field));
  EXPECT_EQ(c.diagnostics.warnings(), 0u);

  const GraphField g = oracle::random_field(grid, 2, 0.7);
  const GraphField hg = heat_step(g, tilted_2d(), p).field;
  for (double shift : {-3.0, 0.7, 10.0}) {
    const GraphField hs = heat_step(g.shifted(shift), tilted_2d(), p).field;
    const double tol = std::max(p.tolerance_for(g), p.tolerance_for(g.shifted(shift)));
    for (std::size_t n = 0; n < g.size(); ++n) EXPECT_NEAR(hs[n], hg[n] + shift, 2 * tol);
  }
}

TEST(HeatStep, SmallTimeSpeedFollowsLimitLaw) {
  // The one-step speed (H(t) g - g) / t tends to
  // g'' (1 - 2 g'^2) / (1 + g'^2) at first order in t.
  const GraphField g = sine_1d(512, 0.5);
  const auto grad = gradient(g);
  const auto hs = hessian(g);
  auto deviation = [&](double t) {
    const StepResult res = heat_step(g, Direction::vertical(1), at_time(t));
    EXPECT_EQ(res.diagnostics.warnings(), 0u);
    double dev = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double speed = (res.field[n] - g[n]) / t;
      dev = std::max(dev, std::abs(speed - oracle::vertical_speed_limit_d1(grad[n][0], hs[n].xx)));
    }
    return dev;
  };
  const double d1 = deviation(1e-2);
  const double d2 = deviation(2.5e-3);
  EXPECT_LE(d1, 1e-2);
  EXPECT_LE(d2, 2.5e-3);
  EXPECT_GE(std::log(d1 / d2) / std::log(4.0), 0.9);
}

TEST(HeatStep, CriticalPointsMoveBySecondDerivative) {
  // Where g' = 0 the limit law reduces to g''.
  const GraphField g = sine_1d(512, 0.5);
  const double h = g.grid().spacing(0);
  const double second = -0.5 * 4.0 / (h * h) * std::pow(std::sin(h / 2), 2);
  for (double t : {1e-2, 2.5e-3}) {
    const StepResult res = heat_step(g, Direction::vertical(1), at_time(t));
    for (std::size_t node : {128u, 384u}) {
      const double sign = node == 128 ? 1.0 : -1.0;
      EXPECT_NEAR((res.field[node] - g[node]) / t, sign * second, t);
    }
  }
}

TEST(HeatStep, NormalSpeedMatchesCurvatureForNormalDirection) {
  const GraphField g = sine_1d(512, 0.5);
  const std::size_t node = 64;  // x = pi / 4
  const auto nu = normal_vector(g, node);
  const Direction r = Direction::normalized(nu);
  const double w = std::sqrt(1.0 + squared_norm(gradient_at(g, node)));
  const double k = curvature(g)[node];
  double prev = INFINITY;
  for (double t : {1e-2, 2.5e-3}) {
    const StepResult res = heat_step(g, r, at_time(t));
    const double normal_speed = (res.field[node] - g[node]) / t / w;
    const double err = std::abs(normal_speed - k);
    EXPECT_LE(err, 0.1 * std::sqrt(t));
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(HeatStep, PlanesAreFixed) {
  const HeatStepParams p = at_time(1e-3);
  const GraphField line = GraphField::plane(PeriodicGrid::line(two_pi, 128), {0.5, 0.0}, 0.25);
  EXPECT_LE(sup_dist(heat_step(line, Direction::vertical(1), p).field, line), 1e-9);
  const GraphField plane = GraphField::plane(PeriodicGrid::square(two_pi, 32), {0.3, -0.6}, 1.0);
  const StepResult res = heat_step(plane, tilted_2d(), at_time(1e-2));
  EXPECT_LE(sup_dist(res.field, plane), 1e-9);
  EXPECT_EQ(res.field.tilt(), plane.tilt());
}

TEST(HeatStep, KernelScaleNeverMovesTheSurface) {
  const GraphField g = oracle::random_field(PeriodicGrid::line(two_pi, 128), 5, 0.5);
  HeatStepParams p = at_time(2e-3);
  const GraphField base = heat_step(g, tilted_1d(0.2), p).field;
  p.kernel_scale = 1e6;
  EXPECT_LE(sup_dist(heat_step(g, tilted_1d(0.2), p).field, base), p.tolerance_for(g));
}

TEST(HeatStep, TranslationEquivariantBitForBit) {
  const GraphField g = oracle::random_field(PeriodicGrid::square(two_pi, 16), 8, 0.5);
  const HeatStepParams p = at_time(1e-2);
  const GraphField a = heat_step(g, tilted_2d(), p).field;
  const GraphField b = heat_step(g.rolled(5, 3), tilted_2d(), p).field;
  EXPECT_EQ(sup_dist(a.rolled(5, 3), b), 0.0);
}

TEST(HeatStep, MonotoneAndContractive) {
  const auto grid = PeriodicGrid::line(two_pi, 128);
  const HeatStepParams p = at_time(1e-3);
  for (unsigned seed = 0; seed < 10; ++seed) {
    const GraphField a = oracle::random_field(grid, seed, 0.3);
    const GraphField bump = GraphField::sample(grid, [](double x, double) { return 0.1 * (1 + std::cos(x - 1)); });
    std::vector<double> above(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) above[n] = a[n] + bump[n];
    const GraphField b(grid, above);
    const GraphField ha = heat_step(a, Direction::vertical(1), p).field;
    const GraphField hb = heat_step(b, Direction::vertical(1), p).field;
    const double tol = std::max(p.tolerance_for(a), p.tolerance_for(b));
    for (std::size_t n = 0; n < a.size(); ++n) EXPECT_LE(ha[n], hb[n] + 2 * tol);
    EXPECT_LE(sup_dist(ha, hb), sup_dist(a, b) + 4 * tol);
  }
}

TEST(HeatStep, UnderResolvedIsWarned) {
  const GraphField g = sine_1d(16, 0.2);
  const StepResult res = heat_step(g, Direction::vertical(1), at_time(1e-3));
  EXPECT_EQ(res.diagnostics.under_resolved, 1u);
  EXPECT_GE(res.diagnostics.warnings(), 1u);
}

TEST(HeatStep, ThreadCountDoesNotChangeResults) {
  const GraphField g = oracle::random_field(PeriodicGrid::square(two_pi, 24), 13, 0.5);
  const HeatStepParams p = at_time(1e-2);
  setenv("FLOWFORGE_THREADS", "1", 1);
  const StepResult one = heat_step(g, tilted_2d(), p);
  setenv("FLOWFORGE_THREADS", "5", 1);
  const StepResult five = heat_step(g, tilted_2d(), p);
  unsetenv("FLOWFORGE_THREADS");
  EXPECT_EQ(sup_dist(one.field, five.field), 0.0);
  EXPECT_EQ(one.diagnostics.solves, five.diagnostics.solves);
  EXPECT_EQ(one.diagnostics.warnings(), five.diagnostics.warnings());
}

TEST(Diagnostics, MergeSumsCounters) {
  StepDiagnostics a, b;
  a.solves = 3;
  a.multiple_roots = 1;
  b.solves = 4;
  b.newton_fallbacks = 2;
  b.under_resolved = 1;
  b.max_newton_iterations = 7;
  a.merge(b);
  EXPECT_EQ(a.solves, 7u);
  EXPECT_EQ(a.max_newton_iterations, 7);
  EXPECT_EQ(a.warnings(), 1u + 2u + 1u);
}

TEST(HeatStep, FarSamplesPullTheRootTheOtherWay) {
  // At the root, d q / d gamma_j has the sign of 1 - (gamma_j - q)^2 / (2t).
  // Raising a sample far above the sheet therefore lowers the root.
  const auto grid = PeriodicGrid::line(two_pi, 256);
  auto spiked = [&](double height) {
    std::vector<double> v(grid.size(), 0.0);
    v[3] = height;
    return GraphField(grid, v);
  };
  const HeatStepParams p = at_time(1e-2);
  const double near_lo = solve_surface_point(spiked(0.01), Direction::vertical(1), 0, p).height;
  const double near_hi = solve_surface_point(spiked(0.02), Direction::vertical(1), 0, p).height;
  EXPECT_GT(near_hi, near_lo);
  const double far_lo = solve_surface_point(spiked(0.5), Direction::vertical(1), 0, p).height;
  const double far_hi = solve_surface_point(spiked(0.6), Direction::vertical(1), 0, p).height;
  EXPECT_LT(far_hi, far_lo - 10 * p.tolerance_for(spiked(0.6)));
}
