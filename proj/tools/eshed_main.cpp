#include "eshed/cli.hpp"
#include "eshed/error.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace cli = eshed::cli;

int main(int argc, char** argv) {
  CLI::App app{"eshed: energyshed capacity analysis and policy design"};
  app.set_version_flag("--version", cli::version());

  std::string command, format = "csv";
  std::string scenario, out_dir = "eshed-out";
  std::optional<double> epsilon, mesh, zeta;
  std::optional<std::string> x_min, zeta_grid;
  std::optional<int> threads;

  app.add_option("command", command, "analyze | solve-p1 | design-p2 | design-p4 | pareto | baseline | validate")
      ->required()
      ->check(CLI::IsMember(cli::command_names()));
  app.add_option("--scenario", scenario, "scenario JSON")->required();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--x-min", x_min, "ratio floor for every energyshed, or a JSON file (array or {name: value})");
  app.add_option("--epsilon", epsilon, "bisection tolerance (design-p2)");
  app.add_option("--mesh", mesh, "tau mesh step (design-p4, pareto)");
  app.add_option("--zeta", zeta, "cost weight (design-p4)");
  app.add_option("--zeta-grid", zeta_grid, "file with the zeta values for pareto");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--threads", threads, "sweep workers, 0 = all cores (default: ESHED_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_code::usage;
  }

  cli::CommandSpec spec;
  try {
    spec.command = cli::command_from_string(command);
    spec.format = cli::format_from_string(format);
    spec.threads = cli::resolve_threads(threads, std::getenv("ESHED_THREADS"));
  } catch (const eshed::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code::usage;
  }
  spec.scenario_path = scenario;
  spec.output_dir = out_dir;
  spec.epsilon = epsilon;
  spec.mesh = mesh;
  spec.zeta = zeta;
  spec.x_min = x_min;
  if (zeta_grid) spec.zeta_grid_path = *zeta_grid;
  return cli::run(spec, std::cout, std::cerr);
}
