#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "heat_step.hpp"

namespace flowforge {

struct TrajectoryMeta {
  std::string source;  // "scheme" or "pde"
  std::vector<double> direction;
  double t_total = 0.0;
  std::size_t steps = 0;
  HeatStepParams heat;  // scheme runs only
  std::vector<StepDiagnostics> step_diagnostics;
  StepDiagnostics total;

  std::size_t warnings() const { return total.warnings(); }
};

/// Time-stamped snapshots sharing one grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<GraphField> snapshots;
  TrajectoryMeta meta;

  const GraphField& final_field() const { return snapshots.back(); }

  void check() const {
    if (times.size() != snapshots.size() || times.empty())
      throw std::logic_error("Trajectory: times and snapshots differ in length");
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (!(times[k] > times[k - 1])) throw std::logic_error("Trajectory: times not strictly increasing");
      if (!(snapshots[k].grid() == snapshots[0].grid())) throw std::logic_error("Trajectory: mixed grids");
    }
  }
};

inline std::vector<double> components(const Direction& r) {
  std::vector<double> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) v[i] = r[i];
  return v;
}

}  // namespace flowforge
