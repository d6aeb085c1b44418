#include "dof/cli.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <exception>
#include <optional>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "dof/bounds.hpp"
#include "dof/detour.hpp"
#include "dof/io.hpp"

namespace dof::cli {

namespace {

using io::json;

// ===== Shared helpers =====

/// Print a JSON document followed by a newline.
void emit(const json& doc, std::ostream& out) { out << doc.dump(2) << '\n'; }

/// Shortest round-trip decimal form, stable across platforms.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

/// Load and validate the instance file; on failure report and return nullopt.
std::optional<io::Instance> load(const std::string& path, std::ostream& err) {
  try {
    return io::load_instance(path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

/// Validate numeric simulation options; on failure report and return false.
bool validate(const SimulateOptions& opt, std::ostream& err) {
  if (opt.trials < 1) {
    err << "error: trials must be >= 1\n";
    return false;
  }
  if (opt.tolerance <= 0.0) {
    err << "error: tolerance must be positive\n";
    return false;
  }
  if (opt.power_grid.size() < 3) {
    err << "error: power grid needs at least 3 points\n";
    return false;
  }
  for (std::size_t i = 0; i < opt.power_grid.size(); ++i) {
    if (opt.power_grid[i] <= 0.0 || (i > 0 && opt.power_grid[i] <= opt.power_grid[i - 1])) {
      err << "error: power grid must be positive and strictly ascending\n";
      return false;
    }
  }
  return true;
}

/// Certificate + slope for the modified tuple of a resolved plan.
struct SimResult {
  ssa::DecodabilityCertificate cert;
  ssa::SlopeEstimate slope;
};

SimResult run_ssa_stage(const NetworkConfig& cfg, const DoFTuple& modified,
                        const SimulateOptions& opt) {
  SimResult r;
  r.slope = ssa::estimate_dof_slope(cfg, modified, opt.power_grid, opt.trials, opt.seed);
  const DerivedProfile prof = derive_profile(cfg, modified);
  const ssa::ChannelRealization ch = ssa::generate_channels(cfg, prof, opt.seed);
  ssa::SSADesign design = ssa::build_design(cfg, modified, ch);
  r.cert = ssa::certify(design, ch, opt.tolerance);
  r.cert.dof_slope_estimate = r.slope.slope;
  return r;
}

void write_csv_rows(std::ofstream& f, const ssa::SlopeEstimate& slope) {
  f << "power,sum_rate,slope_window_flag\n";
  for (std::size_t i = 0; i < slope.power.size(); ++i) {
    f << num(slope.power[i]) << ',' << num(slope.sum_rate[i]) << ','
      << (slope.window[i] ? 1 : 0) << '\n';
  }
}

}  // namespace

// ===== Subcommands =====

int cmd_check(const std::string& path, std::ostream& out, std::ostream& err) {
  const std::optional<io::Instance> loaded = load(path, err);
  if (!loaded) return 1;
  const io::Instance& inst = *loaded;
  const bounds::BoundReport report = bounds::check(inst.cfg, inst.d);
  json doc;
  doc["meta"] = io::meta_json();
  doc["config"] = io::config_json(inst.cfg);
  doc["tuple"] = io::tuple_json(inst.d);
  doc["boundReport"] = io::to_json(report);
  emit(doc, out);
  return report.feasible ? 0 : 2;
}

int cmd_plan(const std::string& path, std::ostream& out, std::ostream& err) {
  const std::optional<io::Instance> loaded = load(path, err);
  if (!loaded) return 1;
  const io::Instance& inst = *loaded;
  const detour::DetourPlan plan = detour::plan(inst.cfg, inst.d);
  json doc;
  doc["meta"] = io::meta_json();
  doc["config"] = io::config_json(inst.cfg);
  doc["tuple"] = io::tuple_json(inst.d);
  doc["detourPlan"] = io::to_json(plan);
  emit(doc, out);
  return plan.scheme == detour::Scheme::Unresolved ? 2 : 0;
}

int cmd_enumerate(const std::string& path, int cap, std::ostream& out, std::ostream& err) {
  const std::optional<io::Instance> loaded = load(path, err);
  if (!loaded) return 1;
  const io::Instance& inst = *loaded;
  std::vector<DoFTuple> region;
  try {
    region = bounds::enumerate_region(inst.cfg, cap);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  json doc;
  doc["meta"] = io::meta_json();
  doc["config"] = io::config_json(inst.cfg);
  doc["cap"] = cap;
  doc["count"] = region.size();
  json tuples = json::array();
  for (const DoFTuple& t : region) tuples.push_back(t.flat());
  doc["tuples"] = std::move(tuples);
  emit(doc, out);
  return 0;
}

int cmd_simulate(const std::string& path, const SimulateOptions& opt, std::ostream& out,
                 std::ostream& err) {
  const std::optional<io::Instance> loaded = load(path, err);
  if (!loaded) return 1;
  const io::Instance& inst = *loaded;
  if (!validate(opt, err)) return 1;
  std::ofstream csv;
  if (!opt.csv_path.empty()) {
    csv.open(opt.csv_path, std::ios::trunc);
    if (!csv) {
      err << "error: cannot open csv output file: " << opt.csv_path << '\n';
      return 1;
    }
  }

  const detour::DetourPlan plan = detour::plan(inst.cfg, inst.d);
  json doc;
  doc["meta"] = io::meta_json(opt.tolerance);
  doc["config"] = io::config_json(inst.cfg);
  doc["tuple"] = io::tuple_json(inst.d);
  doc["detourPlan"] = io::to_json(plan);
  if (plan.scheme == detour::Scheme::Unresolved) {
    emit(doc, out);
    return 2;
  }

  try {
    const SimResult r = run_ssa_stage(inst.cfg, plan.modified, opt);
    doc["certificate"] = io::to_json(r.cert);
    doc["slope"] = io::to_json(r.slope);
    emit(doc, out);
    if (csv.is_open()) write_csv_rows(csv, r.slope);
    return r.cert.all_true() ? 0 : 2;
  } catch (const std::exception& e) {
    doc["error"] = std::string(e.what());
    emit(doc, out);
    return 2;
  }
}

int cmd_pipeline(const std::string& path, const PipelineOptions& opt, std::ostream& out,
                 std::ostream& err) {
  using clock = std::chrono::steady_clock;
  const auto ms_between = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };

  const std::optional<io::Instance> loaded = load(path, err);
  if (!loaded) return 1;
  const io::Instance& inst = *loaded;
  if (!validate(opt, err)) return 1;

  const auto t0 = clock::now();
  const bounds::BoundReport report = bounds::check(inst.cfg, inst.d);
  const auto t1 = clock::now();
  const detour::DetourPlan plan = detour::plan(inst.cfg, inst.d);
  const auto t2 = clock::now();

  json doc;
  doc["meta"] = io::meta_json(opt.tolerance);
  doc["config"] = io::config_json(inst.cfg);
  doc["tuple"] = io::tuple_json(inst.d);
  doc["boundReport"] = io::to_json(report);
  doc["detourPlan"] = io::to_json(plan);

  bool ok = report.feasible && plan.scheme != detour::Scheme::Unresolved;
  double certify_ms = 0.0;
  double slope_ms = 0.0;
  if (plan.scheme != detour::Scheme::Unresolved) {
    try {
      const auto c0 = clock::now();
      ssa::SlopeEstimate slope =
          ssa::estimate_dof_slope(inst.cfg, plan.modified, opt.power_grid, opt.trials, opt.seed);
      const auto c1 = clock::now();
      const DerivedProfile prof = derive_profile(inst.cfg, plan.modified);
      const ssa::ChannelRealization ch = ssa::generate_channels(inst.cfg, prof, opt.seed);
      ssa::SSADesign design = ssa::build_design(inst.cfg, plan.modified, ch);
      ssa::DecodabilityCertificate cert = ssa::certify(design, ch, opt.tolerance);
      cert.dof_slope_estimate = slope.slope;
      const auto c2 = clock::now();
      slope_ms = ms_between(c0, c1);
      certify_ms = ms_between(c1, c2);
      ok = ok && cert.all_true();
      doc["certificate"] = io::to_json(cert);
      doc["slope"] = io::to_json(slope);
    } catch (const std::exception& e) {
      doc["error"] = std::string(e.what());
      ok = false;
    }
  }

  const auto t3 = clock::now();
  json timing;
  if (opt.stable_timing) {
    timing = {{"checkMs", 0.0}, {"planMs", 0.0},  {"certifyMs", 0.0},
              {"slopeMs", 0.0}, {"totalMs", 0.0}};
  } else {
    timing = {{"checkMs", ms_between(t0, t1)},
              {"planMs", ms_between(t1, t2)},
              {"certifyMs", certify_ms},
              {"slopeMs", slope_ms},
              {"totalMs", ms_between(t0, t3)}};
  }
  doc["timing"] = std::move(timing);
  emit(doc, out);
  return ok ? 0 : 2;
}

// ===== Option parsing helpers =====

std::vector<double> parse_power_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string piece =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(piece, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("power grid entry is not a number: \"" + piece + "\"");
    }
    while (used < piece.size() && std::isspace(static_cast<unsigned char>(piece[used]))) ++used;
    if (used != piece.size())
      throw std::invalid_argument("power grid entry is not a number: \"" + piece + "\"");
    if (value <= 0.0) throw std::invalid_argument("power grid must be positive and ascending");
    if (!grid.empty() && value <= grid.back())
      throw std::invalid_argument("power grid must be positive and ascending");
    grid.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return grid;
}

}  // namespace dof::cli
