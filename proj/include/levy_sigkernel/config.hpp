#pragma once

// JSON experiment configuration. Every schema violation raises ConfigError
// carrying the JSON path of the offending field, e.g. "triplets[1].intervals[0].diffusion".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "levy_sigkernel/characteristics.hpp"
#include "levy_sigkernel/mmd.hpp"

namespace levy_sigkernel {

struct GridConfig {
  int s_points = 0;  // uniform points before breakpoints are merged in
  int t_points = 0;
  double T = 0.0;
  bool richardson = false;
};

struct LevelsConfig {
  int M = 0, N = 0;
  /// Depth at which characteristic velocities are built; levels above
  /// max(M, N) only enter the truncation certificate.
  int velocity_depth = 0;
};

struct McConfig {
  std::size_t n_paths = 10000;
  int steps = 1;
  std::uint64_t seed = 0;
};

struct BoundsConfig {
  int max_depth = 8;
  std::vector<double> rho_factorial{1.0};
  std::vector<double> rho_geometric{0.5};
  std::vector<int> remainder_m{1, 2, 5, 10, 20, 40, 60};
};

struct ExperimentConfig {
  std::string experiment;  // kernel | mmd | validate | bounds
  std::vector<LevyTriplet> triplets;
  std::optional<GridConfig> grid;
  std::optional<LevelsConfig> levels;
  McConfig mc;
  std::string output_dir = ".";
  std::optional<AugmentedPathEnsemble> ensemble;
  std::optional<WienerSpec> wiener;
  BoundsConfig bounds;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

LevyTriplet parse_triplet(const nlohmann::json& j, const std::string& path, double default_horizon);

}  // namespace levy_sigkernel
