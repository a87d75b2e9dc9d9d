#pragma once

// Initial-condition catalog.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "../grid.hpp"
#include "../trig_series.hpp"

namespace flowforge::experiment {

enum class InitialKind { sine, product_sine, trig_random, affine, constant };

inline std::optional<InitialKind> parse_initial_kind(const std::string& s) {
  if (s == "sine") return InitialKind::sine;
  if (s == "product_sine") return InitialKind::product_sine;
  if (s == "trig_random") return InitialKind::trig_random;
  if (s == "affine") return InitialKind::affine;
  if (s == "constant") return InitialKind::constant;
  return std::nullopt;
}

inline const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::sine: return "sine";
    case InitialKind::product_sine: return "product_sine";
    case InitialKind::trig_random: return "trig_random";
    case InitialKind::affine: return "affine";
    case InitialKind::constant: return "constant";
  }
  return "?";
}

struct InitialSpec {
  InitialKind kind = InitialKind::sine;
  double amplitude = 1.0;
  std::vector<int> wavenumbers;  // one per axis; defaults to 1
  std::uint64_t seed = 0;
  double constant = 0.0;
  std::vector<double> slope;  // affine only; one per axis
};

struct InitialCondition {
  GraphField field;
  std::optional<TrigSeries> series;  // set when the data is a finite trig series
};

inline constexpr int random_degree = 5;
inline constexpr double random_max_slope = 0.8;

/// Seeded trigonometric polynomial of degree <= 5, scaled so that
/// max |gamma| <= amplitude and max |grad gamma| <= 0.8 on the grid nodes.
inline TrigSeries random_trig_series(const PeriodicGrid& grid, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  TrigSeries s;
  s.dim = grid.dim();
  s.period = {grid.period(0), grid.dim() == 2 ? grid.period(1) : grid.period(0)};
  if (grid.dim() == 1) {
    for (int k = 1; k <= random_degree; ++k) s.terms.push_back({{k, 0}, coef(rng) / k, coef(rng) / k});
  } else {
    for (int k1 = 0; k1 <= random_degree; ++k1)
      for (int k0 = -random_degree; k0 <= random_degree; ++k0) {
        if (k1 == 0 && k0 <= 0) continue;
        const double decay = 1.0 / std::max(std::abs(k0), k1);
        s.terms.push_back({{k0, k1}, coef(rng) * decay, coef(rng) * decay});
      }
  }
  double vmax = 0.0;
  double gmax = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    auto x = grid.coordinate(n);
    vmax = std::max(vmax, std::abs(s.value(x[0], x[1])));
    auto g = s.gradient(x[0], x[1]);
    gmax = std::max(gmax, std::sqrt(g[0] * g[0] + g[1] * g[1]));
  }
  double scale = 1.0;
  if (vmax > 0.0) scale = amplitude / vmax;
  if (gmax * scale > random_max_slope) scale = random_max_slope / gmax;
  return s.scaled(scale);
}

inline InitialCondition make_initial(const InitialSpec& spec, const PeriodicGrid& grid) {
  const int d = grid.dim();
  auto wave = [&](int k) { return spec.wavenumbers.empty() ? 1 : spec.wavenumbers.at(static_cast<std::size_t>(k)); };
  TrigSeries s;
  s.dim = d;
  s.period = {grid.period(0), d == 2 ? grid.period(1) : grid.period(0)};
  switch (spec.kind) {
    case InitialKind::constant:
      s.terms.push_back({{0, 0}, spec.constant, 0.0});
      break;
    case InitialKind::sine:
      s.terms.push_back({{wave(0), d == 2 ? wave(1) : 0}, 0.0, spec.amplitude});
      break;
    case InitialKind::product_sine:
      if (d == 1) {
        s.terms.push_back({{wave(0), 0}, 0.0, spec.amplitude});
      } else {
        // sin a sin b = (cos(a - b) - cos(a + b)) / 2
        s.terms.push_back({{wave(0), -wave(1)}, 0.5 * spec.amplitude, 0.0});
        s.terms.push_back({{wave(0), wave(1)}, -0.5 * spec.amplitude, 0.0});
      }
      break;
    case InitialKind::trig_random:
      s = random_trig_series(grid, spec.seed, spec.amplitude);
      break;
    case InitialKind::affine: {
      Vec2 slope{0.0, 0.0};
      for (std::size_t k = 0; k < spec.slope.size() && k < 2; ++k) slope[k] = spec.slope[k];
      return {GraphField::plane(grid, slope, spec.constant), std::nullopt};
    }
  }
  if (spec.kind == InitialKind::product_sine && d == 2) {
    // Sample the product directly so nodes on the zero lines are exactly zero.
    const double a = spec.amplitude;
    const double k0 = 2.0 * std::numbers::pi * wave(0) / grid.period(0);
    const double k1 = 2.0 * std::numbers::pi * wave(1) / grid.period(1);
    return {GraphField::sample(grid, [&](double x, double y) { return a * std::sin(k0 * x) * std::sin(k1 * y); }), s};
  }
  return {s.sample(grid), s};
}

}  // namespace flowforge::experiment
