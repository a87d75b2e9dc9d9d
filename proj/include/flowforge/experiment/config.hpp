#pragma once

// Experiment configuration: strict JSON schema, defaults, validation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../errors.hpp"
#include "../grid.hpp"
#include "../heat_step.hpp"
#include "../pde_reference.hpp"
#include "../semigroup.hpp"
#include "catalog.hpp"

namespace flowforge::experiment {

using json = nlohmann::json;

inline const std::vector<std::string>& known_modes() {
  static const std::vector<std::string> modes{"evolve", "reference", "compare", "speed", "props", "resolvent"};
  return modes;
}

struct ExperimentConfig {
  std::string mode;
  int dim = 1;
  std::array<double, 2> period{};
  std::array<std::size_t, 2> points{};
  InitialSpec initial;
  std::vector<double> direction;  // normalized
  std::optional<double> t_total;
  std::optional<std::size_t> steps;
  HeatStepParams heat;
  double pde_safety = PdeParams{}.safety;
  std::optional<std::size_t> pde_snapshots;
  std::vector<double> speed_times{1e-2, 2.5e-3, 6.25e-4};
  std::size_t props_pairs = 20;
  double props_t = 1e-3;
  ResolventParams resolvent;
  std::string output = "flowforge_out";
  json raw;  // the document as loaded

  PeriodicGrid grid() const { return {dim, period, points}; }
  Direction r() const { return Direction(std::span<const double>(direction)); }
};

namespace detail {

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

inline double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(field, "expected a finite number");
  return x;
}

inline double positive(const json& v, const std::string& field) {
  const double x = number(v, field);
  if (!(x > 0.0)) throw ValidationError(field, "must be positive");
  return x;
}

inline std::int64_t integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ValidationError(field, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::size_t count(const json& v, const std::string& field, std::int64_t min) {
  const auto x = integer(v, field);
  if (x < min) throw ValidationError(field, "must be >= " + std::to_string(min));
  return static_cast<std::size_t>(x);
}

inline std::vector<double> numbers(const json& v, const std::string& field, std::size_t expected) {
  if (!v.is_array()) throw ValidationError(field, "expected an array");
  if (expected != 0 && v.size() != expected)
    throw ValidationError(field, "expected " + std::to_string(expected) + " entries");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses and validates a configuration document. Mode-specific requirements
/// are checked by finalize_config once the mode is known.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace detail;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte);
    throw ParseError("malformed JSON", line, col);
  }
  check_keys(doc, "",
             {"mode", "grid", "initial", "direction", "t_total", "steps", "heat", "pde", "speed", "props", "resolvent",
              "output"});

  ExperimentConfig cfg;
  cfg.raw = doc;

  if (doc.contains("mode")) {
    if (!doc["mode"].is_string()) throw ValidationError("mode", "expected a string");
    cfg.mode = doc["mode"].get<std::string>();
    if (std::find(known_modes().begin(), known_modes().end(), cfg.mode) == known_modes().end())
      throw ValidationError("mode", "unknown mode '" + cfg.mode + "'");
  }

  if (!doc.contains("grid")) throw ValidationError("grid", "required");
  const json& grid = doc["grid"];
  check_keys(grid, "grid", {"dim", "period", "points"});
  if (!grid.contains("dim")) throw ValidationError("grid.dim", "required");
  const auto dim = integer(grid["dim"], "grid.dim");
  if (dim != 1 && dim != 2) throw ValidationError("grid.dim", "must be 1 or 2");
  cfg.dim = static_cast<int>(dim);
  if (!grid.contains("period")) throw ValidationError("grid.period", "required");
  if (!grid.contains("points")) throw ValidationError("grid.points", "required");
  const auto period = numbers(grid["period"], "grid.period", cfg.dim);
  if (!grid["points"].is_array() || grid["points"].size() != static_cast<std::size_t>(cfg.dim))
    throw ValidationError("grid.points", "expected " + std::to_string(cfg.dim) + " entries");
  cfg.period = {1.0, 1.0};
  cfg.points = {1, 1};
  for (int k = 0; k < cfg.dim; ++k) {
    if (!(period[k] > 0.0)) throw ValidationError("grid.period", "must be positive");
    cfg.period[k] = period[k];
    cfg.points[k] = count(grid["points"][k], "grid.points", static_cast<std::int64_t>(PeriodicGrid::min_points));
  }

  if (!doc.contains("initial")) throw ValidationError("initial", "required");
  const json& init = doc["initial"];
  check_keys(init, "initial", {"kind", "amplitude", "wavenumbers", "seed", "constant", "slope"});
  if (!init.contains("kind") || !init["kind"].is_string()) throw ValidationError("initial.kind", "required string");
  auto kind = parse_initial_kind(init["kind"].get<std::string>());
  if (!kind) throw ValidationError("initial.kind", "unknown kind '" + init["kind"].get<std::string>() + "'");
  cfg.initial.kind = *kind;
  if (init.contains("amplitude")) cfg.initial.amplitude = number(init["amplitude"], "initial.amplitude");
  if (init.contains("wavenumbers")) {
    const json& w = init["wavenumbers"];
    if (!w.is_array() || w.size() != static_cast<std::size_t>(cfg.dim))
      throw ValidationError("initial.wavenumbers", "expected " + std::to_string(cfg.dim) + " integers");
    for (const auto& v : w) cfg.initial.wavenumbers.push_back(static_cast<int>(integer(v, "initial.wavenumbers")));
  }
  if (init.contains("seed")) cfg.initial.seed = static_cast<std::uint64_t>(count(init["seed"], "initial.seed", 0));
  if (init.contains("constant")) cfg.initial.constant = number(init["constant"], "initial.constant");
  if (init.contains("slope")) cfg.initial.slope = numbers(init["slope"], "initial.slope", cfg.dim);

  if (doc.contains("direction")) {
    auto r = numbers(doc["direction"], "direction", cfg.dim + 1);
    double n2 = 0.0;
    for (double x : r) n2 += x * x;
    if (!(n2 > 0.0)) throw ValidationError("direction", "must be nonzero");
    for (double& x : r) x /= std::sqrt(n2);
    if (!(r.back() > 0.0)) throw ValidationError("direction", "last component must be positive");
    cfg.direction = r;
  } else {
    cfg.direction.assign(static_cast<std::size_t>(cfg.dim) + 1, 0.0);
    cfg.direction.back() = 1.0;
  }

  if (doc.contains("t_total")) cfg.t_total = positive(doc["t_total"], "t_total");
  if (doc.contains("steps")) cfg.steps = count(doc["steps"], "steps", 1);

  if (doc.contains("heat")) {
    const json& h = doc["heat"];
    check_keys(h, "heat", {"trunc_mult", "root_tol", "max_bisect", "max_newton", "bracket_margin", "kernel_scale"});
    if (h.contains("trunc_mult")) {
      cfg.heat.trunc_mult = number(h["trunc_mult"], "heat.trunc_mult");
      if (!(cfg.heat.trunc_mult >= 4.0)) throw ValidationError("heat.trunc_mult", "must be >= 4");
    }
    if (h.contains("root_tol")) cfg.heat.root_tol = positive(h["root_tol"], "heat.root_tol");
    if (h.contains("max_bisect")) cfg.heat.max_bisect = static_cast<int>(count(h["max_bisect"], "heat.max_bisect", 1));
    if (h.contains("max_newton")) cfg.heat.max_newton = static_cast<int>(count(h["max_newton"], "heat.max_newton", 1));
    if (h.contains("bracket_margin")) cfg.heat.bracket_margin = positive(h["bracket_margin"], "heat.bracket_margin");
    if (h.contains("kernel_scale")) cfg.heat.kernel_scale = positive(h["kernel_scale"], "heat.kernel_scale");
  }

  if (doc.contains("pde")) {
    const json& p = doc["pde"];
    check_keys(p, "pde", {"safety", "snapshot_count"});
    if (p.contains("safety")) {
      cfg.pde_safety = number(p["safety"], "pde.safety");
      if (!(cfg.pde_safety > 0.0 && cfg.pde_safety <= 1.0)) throw ValidationError("pde.safety", "must lie in (0, 1]");
    }
    if (p.contains("snapshot_count")) cfg.pde_snapshots = count(p["snapshot_count"], "pde.snapshot_count", 2);
  }

  if (doc.contains("speed")) {
    const json& s = doc["speed"];
    check_keys(s, "speed", {"times"});
    if (s.contains("times")) {
      cfg.speed_times = numbers(s["times"], "speed.times", 0);
      if (cfg.speed_times.size() < 2) throw ValidationError("speed.times", "need at least two times");
      for (double t : cfg.speed_times)
        if (!(t > 0.0)) throw ValidationError("speed.times", "must be positive");
    }
  }

  if (doc.contains("props")) {
    const json& p = doc["props"];
    check_keys(p, "props", {"pairs", "t"});
    if (p.contains("pairs")) cfg.props_pairs = count(p["pairs"], "props.pairs", 1);
    if (p.contains("t")) cfg.props_t = positive(p["t"], "props.t");
  }

  if (doc.contains("resolvent")) {
    const json& p = doc["resolvent"];
    check_keys(p, "resolvent", {"lambda", "t", "fp_tol", "max_iters"});
    if (p.contains("lambda")) cfg.resolvent.lambda = positive(p["lambda"], "resolvent.lambda");
    if (p.contains("t")) cfg.resolvent.t = positive(p["t"], "resolvent.t");
    if (p.contains("fp_tol")) cfg.resolvent.fp_tol = positive(p["fp_tol"], "resolvent.fp_tol");
    if (p.contains("max_iters")) cfg.resolvent.max_iters = count(p["max_iters"], "resolvent.max_iters", 1);
  }

  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw ValidationError("output", "expected a string");
    cfg.output = doc["output"].get<std::string>();
  }

  if (cfg.initial.kind == InitialKind::affine && cfg.initial.slope.empty())
    throw ValidationError("initial.slope", "required for affine data");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Binds the command-line mode and checks what that mode needs.
inline void finalize_config(ExperimentConfig& cfg, const std::string& mode) {
  if (std::find(known_modes().begin(), known_modes().end(), mode) == known_modes().end())
    throw ValidationError("mode", "unknown mode '" + mode + "'");
  if (!cfg.mode.empty() && cfg.mode != mode)
    throw ValidationError("mode", "config says '" + cfg.mode + "' but '" + mode + "' was requested");
  cfg.mode = mode;
  if (mode == "evolve" || mode == "reference" || mode == "compare") {
    if (!cfg.t_total) throw ValidationError("t_total", "required for mode " + mode);
    if (mode != "reference" && !cfg.steps) throw ValidationError("steps", "required for mode " + mode);
  }
}

}  // namespace flowforge::experiment
