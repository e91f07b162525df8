// Batch experiment runner.  Reads a flat [section] key=value config file,
// applies command-line overrides, and writes CSV/.dat tables.
//
// Exit codes: 0 success, 2 config error (bad flags, file or keys),
// 3 numeric precondition violated (e.g. t >= t*), 1 anything else.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "magpi/config.hpp"
#include "magpi/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "magpi: path-integral / Dyson-series experiments for the magnetic "
      "Schrodinger equation"};

  std::string config_path, out_dir;
  std::uint64_t seed = 0, samples = 0;
  int steps = 0, threads = 0;
  bool list = false, print_config = false;

  auto* opt_config =
      app.add_option("-c,--config", config_path, "config file (INI-style)");
  auto* opt_seed =
      app.add_option("--seed", seed, "override run.seed");
  auto* opt_samples =
      app.add_option("--samples", samples, "override budget.samples");
  auto* opt_steps = app.add_option("--steps", steps, "override budget.steps");
  auto* opt_threads =
      app.add_option("--threads", threads, "override budget.threads");
  auto* opt_out = app.add_option("--out", out_dir, "override run.out");
  app.add_flag("--list", list, "list experiment names and exit");
  app.add_flag("--print-config", print_config,
               "print the effective canonical config and its hash, then exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list) {
      for (const auto& name : magpi::experiment_names())
        std::cout << name << '\n';
      return 0;
    }
    if (opt_config->count() == 0)
      throw magpi::config_error("no config file given (use --config PATH)");

    magpi::Config cfg = magpi::load_config(config_path);
    if (opt_seed->count()) cfg.set("run.seed", std::to_string(seed));
    if (opt_samples->count())
      cfg.set("budget.samples", std::to_string(samples));
    if (opt_steps->count()) cfg.set("budget.steps", std::to_string(steps));
    if (opt_threads->count())
      cfg.set("budget.threads", std::to_string(threads));
    if (opt_out->count()) cfg.set("run.out", out_dir);

    if (print_config) {
      std::cout << magpi::serialize(cfg)
                << "# hash " << magpi::hash_hex(magpi::config_hash(cfg))
                << '\n';
      return 0;
    }

    const auto out = magpi::run_experiment(cfg);
    for (const auto& f : out.files) std::cout << "wrote " << f << '\n';
    return 0;
  } catch (const magpi::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const magpi::precondition_error& e) {
    std::cerr << "precondition error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
