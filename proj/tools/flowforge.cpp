// flowforge <mode> --config <path> [--out <dir>] [--seed <u64>]
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flowforge/errors.hpp"
#include "flowforge/experiment/config.hpp"
#include "flowforge/experiment/runner.hpp"
#include "flowforge/version.hpp"

namespace ex = flowforge::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-driven curvature flow of graphs"};
  app.set_version_flag("--version", flowforge::version_string);

  std::string mode;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("mode", mode, "evolve | reference | compare | speed | props | resolvent")
      ->required()
      ->check(CLI::IsMember(ex::known_modes()));
  app.add_option("--config", config_path, "experiment configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--seed", seed, "seed for random initial data (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ex::exit_ok : ex::exit_config_error;
  }

  ex::ExperimentConfig cfg;
  try {
    cfg = ex::load_config(config_path);
    ex::finalize_config(cfg, mode);
    if (seed) cfg.initial.seed = *seed;
    if (out_dir) cfg.output = *out_dir;
    cfg.r();
  } catch (const flowforge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ex::exit_config_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ex::exit_config_error;
  }

  try {
    const auto manifest = ex::run(cfg, cfg.output);
    std::cout << manifest.metrics().dump(2) << "\n";
    if (manifest.warnings() > 0) std::cerr << "warnings: " << manifest.warnings() << "\n";
    return ex::exit_ok;
  } catch (const flowforge::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return ex::exit_numerical_failure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ex::exit_config_error;
  }
}
