#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace flowforge {

struct TrigTerm {
  std::array<int, 2> wavenumber{0, 0};  // integer multiples of 2 pi / L_k
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

/// Finite trigonometric polynomial sum_m c_m cos(k_m . x) + s_m sin(k_m . x)
/// with k_m = 2 pi kappa_m / L.
struct TrigSeries {
  int dim = 1;
  std::array<double, 2> period{2.0 * std::numbers::pi, 2.0 * std::numbers::pi};
  std::vector<TrigTerm> terms;

  std::array<double, 2> wave_vector(const TrigTerm& term) const {
    return {2.0 * std::numbers::pi * term.wavenumber[0] / period[0],
            dim == 2 ? 2.0 * std::numbers::pi * term.wavenumber[1] / period[1] : 0.0};
  }

  double value(double x, double y) const {
    double s = 0.0;
    for (const auto& term : terms) {
      auto k = wave_vector(term);
      const double phase = k[0] * x + k[1] * y;
      s += term.cos_coef * std::cos(phase) + term.sin_coef * std::sin(phase);
    }
    return s;
  }

  Vec2 gradient(double x, double y) const {
    Vec2 g{0.0, 0.0};
    for (const auto& term : terms) {
      auto k = wave_vector(term);
      const double phase = k[0] * x + k[1] * y;
      const double d = -term.cos_coef * std::sin(phase) + term.sin_coef * std::cos(phase);
      g[0] += k[0] * d;
      g[1] += k[1] * d;
    }
    return g;
  }

  TrigSeries scaled(double factor) const {
    TrigSeries out = *this;
    for (auto& term : out.terms) {
      term.cos_coef *= factor;
      term.sin_coef *= factor;
    }
    return out;
  }

  /// Multiplies each term by m(|k|^2).
  template <typename Multiplier>
  TrigSeries filtered(Multiplier&& m) const {
    TrigSeries out = *this;
    for (auto& term : out.terms) {
      auto k = wave_vector(term);
      const double f = m(k[0] * k[0] + k[1] * k[1]);
      term.cos_coef *= f;
      term.sin_coef *= f;
    }
    return out;
  }

  bool matches(const PeriodicGrid& grid) const {
    if (grid.dim() != dim) return false;
    for (int k = 0; k < dim; ++k)
      if (grid.period(k) != period[k]) return false;
    return true;
  }

  GraphField sample(const PeriodicGrid& grid) const {
    if (!matches(grid)) throw std::invalid_argument("TrigSeries: grid dimension or period mismatch");
    return GraphField::sample(grid, [this](double x, double y) { return value(x, y); });
  }
};

}  // namespace flowforge
