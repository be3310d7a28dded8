// Command-line front end: levy_sigkernel --config exp.json [--output dir] [--threads n] [--seed s]

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "levy_sigkernel/commands.hpp"
#include "levy_sigkernel/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Expected signature kernels of inhomogeneous Levy processes"};
  std::string config_path, output;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  app.add_option("--output", output, "Output directory (overrides output_dir)");
  app.add_option("--threads", threads, "Worker threads (default: LEVY_SIGKERNEL_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Monte Carlo seed (overrides mc.seed)");
  CLI11_PARSE(app, argc, argv);

  levy_sigkernel::RunOptions options;
  options.output_dir = output;
  options.seed = seed;
  options.threads = threads;
  if (threads == 0) {
    options.threads = 1;
    if (const char* env = std::getenv("LEVY_SIGKERNEL_THREADS")) {
      try {
        options.threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        std::cerr << "error: LEVY_SIGKERNEL_THREADS must be a positive integer\n";
        return 2;
      }
    }
  }

  try {
    const auto config = levy_sigkernel::load_config(config_path);
    const auto result = levy_sigkernel::run_experiment(config, options);
    for (const auto& f : result.files) std::cout << "wrote " << f.string() << "\n";
    if (result.exit_code != 0) std::cout << "validation failed\n";
    return result.exit_code;
  } catch (const levy_sigkernel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
