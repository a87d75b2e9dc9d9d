#pragma once

// Snapshot CSV files.
//
//   # time=<t>
//   [# tilt=<a0>,<a1>]        only for tilted fields
//   i[,j],x[,y],gamma         one row per node, axis 0 fastest
//
// Floats are written with 17 significant digits, so reading a file back
// reproduces every sample bit for bit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../grid.hpp"

namespace flowforge::experiment {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string snapshot_csv(const GraphField& g, double time) {
  const auto& grid = g.grid();
  std::string out = "# time=" + format_double(time) + "\n";
  if (g.tilt()[0] != 0.0 || g.tilt()[1] != 0.0)
    out += "# tilt=" + format_double(g.tilt()[0]) + "," + format_double(g.tilt()[1]) + "\n";
  for (std::size_t n = 0; n < g.size(); ++n) {
    auto [i0, i1] = grid.unflatten(n);
    auto x = grid.coordinate(n);
    if (grid.dim() == 1) {
      out += std::to_string(i0) + "," + format_double(x[0]) + "," + format_double(g[n]) + "\n";
    } else {
      out += std::to_string(i0) + "," + std::to_string(i1) + "," + format_double(x[0]) + "," + format_double(x[1]) +
             "," + format_double(g[n]) + "\n";
    }
  }
  return out;
}

inline void write_snapshot(const std::filesystem::path& path, const GraphField& g, double time) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << snapshot_csv(g, time);
}

struct Snapshot {
  double time = 0.0;
  GraphField field;
};

inline Snapshot parse_snapshot(const std::string& text, const PeriodicGrid& grid) {
  std::istringstream in(text);
  std::string line;
  double time = 0.0;
  Vec2 tilt{0.0, 0.0};
  std::vector<double> values(grid.size());
  std::vector<bool> seen(grid.size(), false);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# time=", 0) == 0) {
      time = std::stod(line.substr(7));
      continue;
    }
    if (line.rfind("# tilt=", 0) == 0) {
      auto rest = line.substr(7);
      auto comma = rest.find(',');
      tilt = {std::stod(rest.substr(0, comma)), std::stod(rest.substr(comma + 1))};
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    const std::size_t expected = grid.dim() == 1 ? 3 : 5;
    if (cols.size() != expected) throw std::runtime_error("snapshot: bad row '" + line + "'");
    const std::size_t i0 = std::stoul(cols[0]);
    const std::size_t i1 = grid.dim() == 2 ? std::stoul(cols[1]) : 0;
    if (i0 >= grid.points(0) || i1 >= grid.points(1)) throw std::runtime_error("snapshot: index out of range");
    const std::size_t n = grid.flat(i0, i1);
    values[n] = std::stod(cols.back());
    seen[n] = true;
  }
  for (bool s : seen)
    if (!s) throw std::runtime_error("snapshot: missing nodes");
  return {time, GraphField(grid, std::move(values), tilt)};
}

inline Snapshot read_snapshot(const std::filesystem::path& path, const PeriodicGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_snapshot(ss.str(), grid);
}

}  // namespace flowforge::experiment
