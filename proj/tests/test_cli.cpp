#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dof/cli.hpp"

namespace cli = dof::cli;
using nlohmann::json;

namespace {

const std::string kData = DOF_TEST_DATA_DIR;
const std::string kBinary = DOF_LAB_BINARY;

struct Run {
  int exit_code = -1;
  json doc;
  std::string err;
};

Run run_cmd(const std::string& which, const std::string& file, const cli::PipelineOptions& opt = {},
            int cap = 3) {
  std::ostringstream out, err;
  Run r;
  if (which == "check") r.exit_code = cli::cmd_check(file, out, err);
  if (which == "plan") r.exit_code = cli::cmd_plan(file, out, err);
  if (which == "enumerate") r.exit_code = cli::cmd_enumerate(file, cap, out, err);
  if (which == "simulate") r.exit_code = cli::cmd_simulate(file, opt, out, err);
  if (which == "pipeline") r.exit_code = cli::cmd_pipeline(file, opt, out, err);
  r.err = err.str();
  if (!out.str().empty()) r.doc = json::parse(out.str());
  return r;
}

/// Run the real binary; returns its exit code and stdout.
std::pair<int, std::string> run_binary(const std::string& args) {
  const std::string cmd = kBinary + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), got);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

cli::PipelineOptions fast_options() {
  cli::PipelineOptions opt;
  opt.seed = 5;
  opt.trials = 4;
  opt.power_grid = {1e2, 1e3, 1e4, 1e5};
  opt.stable_timing = true;
  return opt;
}

}  // namespace

TEST_CASE("check: exit codes and report fields") {
  Run ok = run_cmd("check", kData + "/golden_y.json");
  CHECK(ok.exit_code == 0);
  CHECK(ok.doc["boundReport"]["feasible"] == true);
  CHECK(ok.doc["boundReport"]["totalDof"] == 4);
  CHECK(ok.doc["boundReport"]["totalDofCap"] == 6);
  CHECK(ok.doc["meta"]["version"] == "1.0.0");
  CHECK(ok.doc["config"]["users"] == 3);
  CHECK(ok.doc["config"]["labelPermutation"] == json::array({0, 1, 2}));

  Run bad = run_cmd("check", kData + "/infeasible_four.json");
  CHECK(bad.exit_code == 2);
  CHECK(bad.doc["boundReport"]["feasible"] == false);
  CHECK(bad.doc["boundReport"]["violations"].size() == 48);
  const json& v0 = bad.doc["boundReport"]["violations"][0];
  CHECK(v0["id"] == "uplink-triple");
  CHECK(v0["lhs"] == 6);
  CHECK(v0["rhs"] == 4);
  CHECK(v0["assignment"] == json::array({0, 1, 2, 3}));
}

TEST_CASE("check: unsorted antenna input is canonicalized with a label permutation") {
  const std::string file = "/tmp/dof_cli_perm.json";
  {
    std::ofstream f(file);
    f << R"({"K": 3, "M": [2, 3, 2], "N": 3,
            "d": [[0, 0, 0], [2, 0, 0], [0, 1, 0]]})";
  }
  Run r = run_cmd("check", file);
  CHECK(r.exit_code == 0);
  // Sorted frame: user 0 is the 3-antenna user (input label 1).
  CHECK(r.doc["config"]["antennas"] == json::array({3, 2, 2}));
  CHECK(r.doc["config"]["labelPermutation"] == json::array({1, 0, 2}));
  // Input d(1,0)=2 becomes d(0,1)=2 in the sorted frame, and input
  // d(2,1)=1 (toward the 3-antenna user) becomes d(2,0)=1.
  CHECK(r.doc["tuple"][0][1] == 2);
  CHECK(r.doc["tuple"][2][0] == 1);
}

TEST_CASE("plan: exit codes and plan payload") {
  Run ok = run_cmd("plan", kData + "/golden_single_cycle.json");
  CHECK(ok.exit_code == 0);
  CHECK(ok.doc["detourPlan"]["scheme"] == "DS1");
  CHECK(ok.doc["detourPlan"]["lambda"] == 1);
  CHECK(ok.doc["detourPlan"]["reroutes"].size() == 1);
  CHECK(ok.doc["detourPlan"]["modified"][1][2] == 1);
  CHECK(ok.doc["detourPlan"]["routing"].size() >= 6);

  Run un = run_cmd("plan", kData + "/unresolvable_y.json");
  CHECK(un.exit_code == 2);
  CHECK(un.doc["detourPlan"]["scheme"] == "Unresolved");
}

TEST_CASE("enumerate: counts match and oversize caps fail cleanly") {
  Run r = run_cmd("enumerate", kData + "/tiny_region.json", {}, 1);
  CHECK(r.exit_code == 0);
  CHECK(r.doc["count"] == 25);
  CHECK(r.doc["tuples"].size() == 25);
  CHECK(r.doc["tuples"][0] == json::array({0, 0, 0, 0, 0, 0}));
  CHECK(r.doc["tuples"][24] == json::array({1, 1, 1, 0, 1, 0}));

  std::ostringstream out, err;
  const std::string big = "/tmp/dof_cli_big.json";
  {
    std::ofstream f(big);
    f << R"({"K": 4, "M": [8, 8, 8, 8], "N": 8})";
  }
  CHECK(cli::cmd_enumerate(big, 8, out, err) == 1);
  CHECK(err.str().find("search space") != std::string::npos);
}

TEST_CASE("simulate: certificate true on a documented instance, csv written") {
  cli::PipelineOptions opt = fast_options();
  opt.csv_path = "/tmp/dof_cli_curve.csv";
  Run r = run_cmd("simulate", kData + "/golden_y.json", opt);
  CHECK(r.exit_code == 0);
  CHECK(r.doc["certificate"]["allTrue"] == true);
  CHECK(r.doc["certificate"]["perStream"].size() == 4);
  CHECK(r.doc["slope"]["streams"] == 5);
  CHECK(r.doc["slope"]["trials"] == 4);

  std::ifstream csv(opt.csv_path);
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "power,sum_rate,slope_window_flag");
  int rows = 0;
  for (std::string line; std::getline(csv, line) && !line.empty();) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("simulate: unresolved plan short-circuits with exit 2") {
  Run r = run_cmd("simulate", kData + "/unresolvable_y.json", fast_options());
  CHECK(r.exit_code == 2);
  CHECK(r.doc["detourPlan"]["scheme"] == "Unresolved");
  CHECK_FALSE(r.doc.contains("certificate"));
  CHECK_FALSE(r.doc.contains("slope"));
}

TEST_CASE("simulate: option validation is an input error") {
  cli::PipelineOptions opt = fast_options();
  opt.trials = 0;
  CHECK(run_cmd("simulate", kData + "/golden_y.json", opt).exit_code == 1);
  opt = fast_options();
  opt.power_grid = {1e2, 1e3};
  CHECK(run_cmd("simulate", kData + "/golden_y.json", opt).exit_code == 1);
  opt = fast_options();
  opt.tolerance = 0.0;
  CHECK(run_cmd("simulate", kData + "/golden_y.json", opt).exit_code == 1);
}

TEST_CASE("pipeline: full report, stage gating, determinism") {
  cli::PipelineOptions opt = fast_options();
  std::ostringstream out1, out2, err;
  REQUIRE(cli::cmd_pipeline(kData + "/golden_double_cycle.json", opt, out1, err) == 0);
  REQUIRE(cli::cmd_pipeline(kData + "/golden_double_cycle.json", opt, out2, err) == 0);
  CHECK(out1.str() == out2.str());  // byte-identical with --stable-timing

  json doc = json::parse(out1.str());
  CHECK(doc["boundReport"]["feasible"] == true);
  CHECK(doc["detourPlan"]["scheme"] == "DS2");
  CHECK(doc["certificate"]["allTrue"] == true);
  CHECK(doc["slope"]["streams"] == 10);
  CHECK(doc["timing"]["totalMs"] == 0.0);
  CHECK(doc["meta"]["rankTolerance"] == opt.tolerance);

  // Unresolved input: report carries bound + plan but no ssa stages, exit 2.
  std::ostringstream out3;
  CHECK(cli::cmd_pipeline(kData + "/unresolvable_y.json", opt, out3, err) == 2);
  json doc3 = json::parse(out3.str());
  CHECK(doc3.contains("boundReport"));
  CHECK(doc3.contains("detourPlan"));
  CHECK_FALSE(doc3.contains("certificate"));
  CHECK_FALSE(doc3.contains("slope"));
  CHECK(doc3.contains("timing"));
}

TEST_CASE("malformed input files exit 1 with a diagnostic") {
  std::ostringstream out, err;
  CHECK(cli::cmd_check("/tmp/does_not_exist_dof.json", out, err) == 1);
  CHECK(err.str().find("error:") != std::string::npos);

  const std::string bad = "/tmp/dof_cli_bad.json";
  {
    std::ofstream f(bad);
    f << "{ not json";
  }
  std::ostringstream out2, err2;
  CHECK(cli::cmd_check(bad, out2, err2) == 1);

  const std::string diag = "/tmp/dof_cli_diag.json";
  {
    std::ofstream f(diag);
    f << R"({"K": 3, "M": [3, 2, 2], "N": 3, "d": [[1, 0, 0], [0, 0, 0], [0, 0, 0]]})";
  }
  std::ostringstream out3, err3;
  CHECK(cli::cmd_check(diag, out3, err3) == 1);
  CHECK(err3.str().find("diagonal") != std::string::npos);
}

TEST_CASE("power grid parser accepts lists and rejects junk") {
  CHECK(cli::parse_power_grid("1e2,1e3,1e4") == std::vector<double>{1e2, 1e3, 1e4});
  CHECK(cli::parse_power_grid("100") == std::vector<double>{100.0});
  CHECK_THROWS_AS((void)cli::parse_power_grid("1e2,abc"), std::invalid_argument);
  CHECK_THROWS_AS((void)cli::parse_power_grid("1e3,1e2"), std::invalid_argument);
  CHECK_THROWS_AS((void)cli::parse_power_grid("0,1e2"), std::invalid_argument);
  CHECK_THROWS_AS((void)cli::parse_power_grid(""), std::invalid_argument);
}

TEST_CASE("binary smoke: subcommands, exit codes, and stdout JSON") {
  auto [code, out] = run_binary("check " + kData + "/golden_y.json");
  CHECK(code == 0);
  CHECK(json::parse(out)["boundReport"]["feasible"] == true);

  auto [code2, out2] = run_binary("plan " + kData + "/unresolvable_y.json");
  CHECK(code2 == 2);
  CHECK(json::parse(out2)["detourPlan"]["scheme"] == "Unresolved");

  auto [code3, out3] = run_binary(
      "pipeline " + kData +
      "/golden_y.json --seed 5 --trials 3 --power-grid 1e2,1e3,1e4 --stable-timing");
  CHECK(code3 == 0);
  json doc3 = json::parse(out3);
  CHECK(doc3["certificate"]["allTrue"] == true);
  CHECK(doc3["timing"]["checkMs"] == 0.0);

  auto [code4, out4] = run_binary("check /tmp/does_not_exist_dof.json");
  CHECK(code4 == 1);
  CHECK(out4.empty());

  auto [code5, out5] = run_binary("simulate " + kData + "/golden_y.json --power-grid 1e3,junk");
  CHECK(code5 == 1);
}
