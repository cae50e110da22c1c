// Command-line front end: loads a JSON run configuration, dispatches one of
// the experiment commands, and writes CSV/JSON artifacts.
//
// Exit codes: 0 ok, 2 config error, 3 numeric failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cansys/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"canonical-system spectral toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  double horizon = -1.0;
  double tol = -1.0;
  int threads = 1;

  for (const std::string& name : {"szego", "weyl", "entropy", "khrushchev", "scatter"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--horizon", horizon, "working horizon T_max");
    sub->add_option("--tol", tol, "ODE tolerance");
    sub->add_option("--threads", threads, "worker threads (results are identical)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    cansys::RunConfig cfg = cansys::RunConfig::fromFile(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (horizon > 0.0) cfg.horizon = horizon;
    if (tol > 0.0) cfg.ode_tol = tol;
    return cansys::dispatch(command, cfg);
  } catch (const cansys::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cansys::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cansys::kExitNumeric;
  }
}
