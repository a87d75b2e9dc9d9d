#pragma once

// Executes one configured experiment, writes its artifacts and returns the
// run manifest.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "../geometry.hpp"
#include "../pde_reference.hpp"
#include "../semigroup.hpp"
#include "../version.hpp"
#include "catalog.hpp"
#include "config.hpp"
#include "snapshot_io.hpp"

namespace flowforge::experiment {

namespace fs = std::filesystem;

struct RunManifest {
  json doc;

  std::size_t warnings() const { return doc.value("warnings", std::size_t{0}); }
  const json& metrics() const { return doc.at("metrics"); }
};

enum ExitCode : int { exit_ok = 0, exit_config_error = 1, exit_numerical_failure = 2 };

inline json to_json(const StepDiagnostics& d) {
  return {{"solves", d.solves},
          {"multiple_roots", d.multiple_roots},
          {"concavity_failures", d.concavity_failures},
          {"sign_pattern_failures", d.sign_pattern_failures},
          {"newton_fallbacks", d.newton_fallbacks},
          {"max_newton_iterations", d.max_newton_iterations},
          {"under_resolved", d.under_resolved},
          {"warnings", d.warnings()}};
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

inline std::vector<std::string> write_trajectory(const fs::path& dir, const Trajectory& traj) {
  std::vector<std::string> files;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%05zu.csv", k);
    write_snapshot(dir / name, traj.snapshots[k], traj.times[k]);
    files.push_back((dir / name).string());
  }
  return files;
}

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

class Recorder {
 public:
  explicit Recorder(json& doc) : doc_(doc) {}

  void step_diagnostics(const std::string& label, const std::vector<StepDiagnostics>& steps) {
    json arr = json::array();
    for (const auto& d : steps) {
      arr.push_back(to_json(d));
      total_.merge(d);
    }
    doc_["diagnostics"][label] = arr;
  }
  void diagnostics(const std::string& label, const StepDiagnostics& d) {
    doc_["diagnostics"][label] = to_json(d);
    total_.merge(d);
  }
  void finish() {
    doc_["warnings"] = total_.warnings();
    doc_["diagnostics"]["total"] = to_json(total_);
  }

 private:
  json& doc_;
  StepDiagnostics total_;
};

}  // namespace detail

/// Runs cfg (mode already bound) and writes artifacts below out_dir.
/// Numerical failures propagate as NumericalError.
inline RunManifest run(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto started = std::chrono::steady_clock::now();
  const PeriodicGrid grid = cfg.grid();
  const Direction r = cfg.r();
  const InitialCondition init = make_initial(cfg.initial, grid);

  RunManifest manifest;
  json& doc = manifest.doc;
  doc["version"] = version_string;
  doc["mode"] = cfg.mode;
  doc["config"] = cfg.raw;
  doc["seed"] = cfg.initial.seed;
  doc["metrics"] = json::object();
  doc["artifacts"] = json::array();
  detail::Recorder rec(doc);
  json& metrics = doc["metrics"];
  auto add_artifacts = [&](const std::vector<std::string>& files) {
    for (const auto& f : files) doc["artifacts"].push_back(f);
  };
  const bool exact_available = grid.dim() == 1 && r.is_vertical() && init.series.has_value();

  if (cfg.mode == "evolve" || cfg.mode == "compare") {
    const Trajectory scheme = iterate_scheme(init.field, r, *cfg.t_total, *cfg.steps, cfg.heat);
    add_artifacts(detail::write_trajectory(out_dir / "scheme", scheme));
    rec.step_diagnostics("scheme_steps", scheme.meta.step_diagnostics);
    metrics["final_sup_norm"] = scheme.final_field().sup_norm();

    if (cfg.mode == "compare") {
      PdeParams pp;
      pp.safety = cfg.pde_safety;
      pp.t_total = *cfg.t_total;
      pp.snapshot_count = *cfg.steps + 1;
      const Trajectory ref = pde_solve(init.field, r, pp);
      add_artifacts(detail::write_trajectory(out_dir / "reference", ref));
      metrics["pde_steps"] = ref.meta.steps;

      std::string table = exact_available ? "time,sup_err_pde,sup_err_exact\n" : "time,sup_err_pde\n";
      double err_pde = 0.0;
      double err_exact = 0.0;
      for (std::size_t k = 0; k < scheme.snapshots.size(); ++k) {
        err_pde = sup_dist(scheme.snapshots[k], ref.snapshots[k]);
        table += format_double(scheme.times[k]) + "," + format_double(err_pde);
        if (exact_available) {
          err_exact = sup_dist(scheme.snapshots[k], exact_heat_d1(*init.series, scheme.times[k], grid));
          table += "," + format_double(err_exact);
        }
        table += "\n";
      }
      detail::write_text(out_dir / "metrics.csv", table);
      add_artifacts({(out_dir / "metrics.csv").string()});
      metrics["final_sup_err_pde"] = err_pde;
      if (exact_available) metrics["final_sup_err_exact"] = err_exact;
    }
  } else if (cfg.mode == "reference") {
    PdeParams pp;
    pp.safety = cfg.pde_safety;
    pp.t_total = *cfg.t_total;
    pp.snapshot_count = cfg.pde_snapshots.value_or(cfg.steps ? *cfg.steps + 1 : 11);
    const Trajectory ref = pde_solve(init.field, r, pp);
    add_artifacts(detail::write_trajectory(out_dir / "reference", ref));
    metrics["pde_steps"] = ref.meta.steps;
    if (exact_available) {
      double err = 0.0;
      for (std::size_t k = 0; k < ref.snapshots.size(); ++k)
        err = std::max(err, sup_dist(ref.snapshots[k], exact_heat_d1(*init.series, ref.times[k], grid)));
      metrics["max_sup_err_exact"] = err;
    }
  } else if (cfg.mode == "speed") {
    const ScalarField rhs = flow_rhs(init.field, r);
    std::vector<double> deviations;
    std::string table = "t,max_deviation\n";
    std::vector<StepDiagnostics> diags;
    for (double t : cfg.speed_times) {
      const SpeedResult sp = empirical_vertical_speed(init.field, r, cfg.heat.with_time(t));
      diags.push_back(sp.diagnostics);
      double dev = 0.0;
      for (std::size_t n = 0; n < rhs.size(); ++n) dev = std::max(dev, std::abs(sp.speed[n] - rhs[n]));
      deviations.push_back(dev);
      table += format_double(t) + "," + format_double(dev) + "\n";
    }
    rec.step_diagnostics("speed_steps", diags);
    const double slope = loglog_slope(cfg.speed_times, deviations);
    table += "# slope=" + format_double(slope) + "\n";
    detail::write_text(out_dir / "speed.csv", table);
    add_artifacts({(out_dir / "speed.csv").string()});
    metrics["times"] = cfg.speed_times;
    metrics["max_deviation"] = deviations;
    metrics["loglog_slope"] = slope;
  } else if (cfg.mode == "props") {
    std::vector<std::pair<GraphField, GraphField>> pairs;
    for (std::size_t i = 0; i < cfg.props_pairs; ++i) {
      const std::uint64_t s = cfg.initial.seed + 2 * i;
      pairs.emplace_back(random_trig_series(grid, s, cfg.initial.amplitude).sample(grid),
                         random_trig_series(grid, s + 1, cfg.initial.amplitude).sample(grid));
    }
    const SemigroupReport rep = check_semigroup_properties(pairs, r, cfg.heat.with_time(cfg.props_t));
    rec.diagnostics("props", rep.diagnostics);
    json rows = json::array();
    for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
      const auto& p = rep.pairs[i];
      rows.push_back({{"pair", i},
                      {"shift_constant", p.shift_constant},
                      {"input_distance", p.input_distance},
                      {"output_distance", p.output_distance},
                      {"root_tol", p.root_tol},
                      {"shift_violation", p.shift.amount},
                      {"shift_node", p.shift.node},
                      {"monotone_violation", p.monotone.amount},
                      {"monotone_node", p.monotone.node},
                      {"contraction_violation", p.contraction.amount},
                      {"contraction_node", p.contraction.node},
                      {"passes", p.passes(1e-8)}});
    }
    detail::write_text(out_dir / "props.json", rows.dump(2) + "\n");
    add_artifacts({(out_dir / "props.json").string()});
    metrics["pairs"] = rep.pairs.size();
    metrics["violations"] = rep.failures();
    metrics["worst_shift"] = rep.worst_shift();
    metrics["worst_monotone"] = rep.worst_monotone();
    metrics["worst_contraction"] = rep.worst_contraction();
  } else if (cfg.mode == "resolvent") {
    const ResolventResult res = resolvent_approx(init.field, r, cfg.resolvent, cfg.heat);
    rec.diagnostics("resolvent", res.diagnostics);
    write_snapshot(out_dir / "resolvent.csv", res.field, 0.0);
    add_artifacts({(out_dir / "resolvent.csv").string()});
    metrics["iterations"] = res.iterations;
    metrics["residual"] = res.residual;
    metrics["max_ratio"] = res.max_ratio();
    metrics["contraction_bound"] = cfg.resolvent.contraction_bound();
    if (exact_available)
      metrics["sup_err_fourier"] = sup_dist(res.field, exact_resolvent_d1(*init.series, cfg.resolvent.lambda, grid));
  }

  rec.finish();
  doc["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  detail::write_text(out_dir / "manifest.json", doc.dump(2) + "\n");
  return manifest;
}

}  // namespace flowforge::experiment
