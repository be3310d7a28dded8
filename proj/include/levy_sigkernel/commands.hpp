#pragma once

// Batch jobs behind the command-line tool. Each writes its files into the
// output directory and returns the list of files written.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "levy_sigkernel/config.hpp"
#include "levy_sigkernel/kernel_solver.hpp"

namespace levy_sigkernel {

struct RunOptions {
  std::filesystem::path output_dir;  // empty: use the config's output_dir
  int threads = 1;
  std::optional<std::uint64_t> seed;  // overrides mc.seed
};

struct CommandResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
};

/// kernel.csv (surface) and certificate.txt.
CommandResult cmd_kernel(const ExperimentConfig& config, const RunOptions& options);
/// mmd.csv.
CommandResult cmd_mmd(const ExperimentConfig& config, const RunOptions& options);
/// validate.csv with one row per check; exit code 1 if any check fails.
CommandResult cmd_validate(const ExperimentConfig& config, const RunOptions& options);
/// bounds.csv, remainders.csv and, for Gaussian jumps, gaussian_tail.csv.
CommandResult cmd_bounds(const ExperimentConfig& config, const RunOptions& options);

/// Dispatches on config.experiment.
CommandResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Header s,t,w followed by |f^(n)| and |f~^(n)| columns when present.
void write_surface_csv(std::ostream& out, const KernelSurface& surface);

/// Uniform grids of the config merged with every breakpoint of both triplets.
std::vector<double> config_grid(const GridConfig& grid, int points,
                                const std::vector<double>& breaks_a,
                                const std::vector<double>& breaks_b);

}  // namespace levy_sigkernel
