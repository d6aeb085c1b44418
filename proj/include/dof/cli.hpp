#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dof/ssa.hpp"

/// Subcommand implementations, separated from the binary entry point so
/// tests can drive them directly. Exit-code contract for every command:
/// 0 = positive outcome, 2 = negative outcome (infeasible / unresolved /
/// certificate false), 1 = input or usage error.
namespace dof::cli {

struct SimulateOptions {
  std::uint64_t seed = 0;
  int trials = 20;
  std::vector<double> power_grid{1e2, 1e3, 1e4, 1e5, 1e6};
  double tolerance = ssa::kRankTol;
  std::string csv_path;  ///< per-power rate CSV; empty = not written
};

struct PipelineOptions : SimulateOptions {
  bool stable_timing = false;  ///< zero the timing block for reproducible bytes
};

/// Outer-bound check: BoundReport JSON to `out`.
int cmd_check(const std::string& path, std::ostream& out, std::ostream& err);

/// Reroute planning: DetourPlan JSON to `out`.
int cmd_plan(const std::string& path, std::ostream& out, std::ostream& err);

/// Enumerate all bound-satisfying tuples with entries ≤ cap.
int cmd_enumerate(const std::string& path, int cap, std::ostream& out, std::ostream& err);

/// Plan, then certify and estimate the rate slope of the modified tuple.
int cmd_simulate(const std::string& path, const SimulateOptions& opt, std::ostream& out,
                 std::ostream& err);

/// Full chain with a RunReport: check, plan, certificate, slope, timing.
int cmd_pipeline(const std::string& path, const PipelineOptions& opt, std::ostream& out,
                 std::ostream& err);

/// Parse a comma-separated power grid ("1e2,1e3,1e4"). Throws
/// std::invalid_argument on junk, non-positive, or non-ascending entries.
[[nodiscard]] std::vector<double> parse_power_grid(const std::string& text);

}  // namespace dof::cli
