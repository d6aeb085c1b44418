#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "dof/cli.hpp"

/// Command-line front end: wires CLI11 argument parsing to the subcommand
/// implementations in dof::cli. All subcommands read one JSON instance file
/// and print a JSON report to stdout. Exit codes: 0 = positive outcome,
/// 2 = negative outcome, 1 = input or usage error.
int main(int argc, char** argv) {
  CLI::App app{"Degrees-of-freedom analysis for MIMO relay networks"};
  app.require_subcommand(1);

  std::string input;
  int cap = 3;
  dof::cli::PipelineOptions opt;
  std::string power_grid_text;

  const auto add_input = [&](CLI::App* sub) {
    sub->add_option("input", input, "JSON instance file")->required();
  };
  const auto add_sim_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", opt.seed, "RNG seed (default 0)");
    sub->add_option("--trials", opt.trials, "Monte Carlo trials for the slope estimate");
    sub->add_option("--power-grid", power_grid_text,
                    "Comma-separated ascending transmit powers (e.g. 1e2,1e3,1e4)");
    sub->add_option("--tolerance", opt.tolerance, "Relative singular-value threshold");
  };

  CLI::App* check = app.add_subcommand("check", "Evaluate the outer bound");
  add_input(check);
  CLI::App* plan = app.add_subcommand("plan", "Plan detour rerouting");
  add_input(plan);
  CLI::App* enumerate = app.add_subcommand("enumerate", "List bound-satisfying tuples");
  add_input(enumerate);
  enumerate->add_option("--cap", cap, "Maximum per-entry demand (default 3)");
  CLI::App* simulate = app.add_subcommand("simulate", "Certify alignment numerically");
  add_input(simulate);
  add_sim_flags(simulate);
  simulate->add_option("--csv", opt.csv_path, "Write the rate curve to this CSV file");
  CLI::App* pipeline = app.add_subcommand("pipeline", "Full check/plan/certify run");
  add_input(pipeline);
  add_sim_flags(pipeline);
  pipeline->add_flag("--stable-timing", opt.stable_timing,
                     "Zero the timing block so identical runs emit identical bytes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (!power_grid_text.empty()) {
    try {
      opt.power_grid = dof::cli::parse_power_grid(power_grid_text);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }

  if (check->parsed()) return dof::cli::cmd_check(input, std::cout, std::cerr);
  if (plan->parsed()) return dof::cli::cmd_plan(input, std::cout, std::cerr);
  if (enumerate->parsed()) return dof::cli::cmd_enumerate(input, cap, std::cout, std::cerr);
  if (simulate->parsed()) return dof::cli::cmd_simulate(input, opt, std::cout, std::cerr);
  if (pipeline->parsed()) return dof::cli::cmd_pipeline(input, opt, std::cout, std::cerr);
  return 1;
}
