#include "dof/bounds.hpp"

#include <algorithm>
#include <limits>

namespace dof::bounds {

namespace {

constexpr std::array<std::array<int, 3>, 6> kPerm3{{{0, 1, 2},
                                                    {0, 2, 1},
                                                    {1, 0, 2},
                                                    {1, 2, 0},
                                                    {2, 0, 1},
                                                    {2, 1, 0}}};

std::vector<std::array<int, 4>> perms4() {
  std::array<int, 4> base{0, 1, 2, 3};
  std::vector<std::array<int, 4>> out;
  out.reserve(24);
  do {
    out.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return out;
}

void visit_three_user(const NetworkConfig& cfg, const DoFTuple& d,
                      const ConstraintVisitor& visit) {
  const long long n = cfg.relay();
  const auto m = [&](int i) { return static_cast<long long>(cfg.antennas(i)); };
  for (const auto& pm : kPerm3) {
    const int i = pm[0], j = pm[1], k = pm[2];
    const std::array<int, kMaxUsers> assign{i, j, k, -1};
    visit("uplink-node", d(i, j) + d(i, k), std::min({n, m(i), m(j) + m(k)}), assign);
    visit("downlink-node", d(j, i) + d(k, i), std::min({n, m(i), m(j) + m(k)}), assign);
    const long long pair_max = std::max(d(j, k), d(k, j));
    visit("uplink-pair", d(i, j) + d(i, k) + pair_max, std::min(n, m(j) + m(k)), assign);
    visit("downlink-pair", d(j, i) + d(k, i) + pair_max, std::min(n, m(j) + m(k)), assign);
  }
  const long long cap = std::min({2 * n, m(0) + m(1) + m(2), 2 * (m(1) + m(2))});
  visit("total", d.total(), cap, {-1, -1, -1, -1});
}

void visit_four_user(const NetworkConfig& cfg, const DoFTuple& d,
                     const ConstraintVisitor& visit) {
  static const std::vector<std::array<int, 4>> perms = perms4();
  const long long n = cfg.relay();
  const auto m = [&](int i) { return static_cast<long long>(cfg.antennas(i)); };
  for (const auto& pm : perms) {
    const int i = pm[0], j = pm[1], k = pm[2], l = pm[3];
    const std::array<int, kMaxUsers> assign{i, j, k, l};
    const long long node_cap = std::min({m(i), n, m(j) + m(k) + m(l)});
    visit("uplink-node", d(i, j) + d(i, k) + d(i, l), node_cap, assign);
    visit("downlink-node", d(j, i) + d(k, i) + d(l, i), node_cap, assign);
    const long long ij_max = std::max(d(i, j), d(j, i));
    const long long pair_cap = std::min(n, m(i) + m(j));
    visit("uplink-pair", d(i, k) + d(i, l) + d(j, k) + d(j, l) + ij_max, pair_cap, assign);
    visit("downlink-pair", d(k, i) + d(l, i) + d(k, j) + d(l, j) + ij_max, pair_cap, assign);
    const long long jk_max = std::max(d(j, k), d(k, j));
    const long long triple_cap = std::min(n, m(i) + m(j) + m(k));
    visit("uplink-triple", d(i, l) + d(j, l) + d(k, l) + d(i, j) + d(i, k) + jk_max,
          triple_cap, assign);
    visit("downlink-triple", d(l, i) + d(l, j) + d(l, k) + d(j, i) + d(k, i) + jk_max,
          triple_cap, assign);
  }
  const long long cap =
      std::min({2 * n, m(0) + m(1) + m(2) + m(3), 2 * (m(1) + m(2) + m(3))});
  visit("total", d.total(), cap, {-1, -1, -1, -1});
}

BoundReport report_from(const NetworkConfig& cfg, const DoFTuple& d) {
  BoundReport report;
  report.total_dof = d.total();
  report.total_dof_cap = total_dof_cap(cfg);
  for_each_constraint(cfg, d, [&](const std::string& id, long long lhs, long long rhs,
                                  const std::array<int, kMaxUsers>& assign) {
    if (lhs > rhs) {
      report.violations.push_back({id, lhs, rhs, assign});
    }
  });
  report.feasible = report.violations.empty();
  return report;
}

}  // namespace

void for_each_constraint(const NetworkConfig& cfg, const DoFTuple& d,
                         const ConstraintVisitor& visit) {
  if (cfg.users() != d.users()) throw std::invalid_argument("dimension mismatch");
  if (cfg.users() == 3) {
    visit_three_user(cfg, d, visit);
  } else {
    visit_four_user(cfg, d, visit);
  }
}

BoundReport check_three_user(const NetworkConfig& cfg, const DoFTuple& d) {
  if (cfg.users() != 3) throw std::invalid_argument("config is not a 3-user network");
  return report_from(cfg, d);
}

BoundReport check_four_user(const NetworkConfig& cfg, const DoFTuple& d) {
  if (cfg.users() != 4) throw std::invalid_argument("config is not a 4-user network");
  return report_from(cfg, d);
}

BoundReport check(const NetworkConfig& cfg, const DoFTuple& d) {
  return cfg.users() == 3 ? check_three_user(cfg, d) : check_four_user(cfg, d);
}

long long min_slack(const NetworkConfig& cfg, const DoFTuple& d) {
  long long slack = std::numeric_limits<long long>::max();
  for_each_constraint(cfg, d, [&](const std::string&, long long lhs, long long rhs,
                                  const std::array<int, kMaxUsers>&) {
    slack = std::min(slack, rhs - lhs);
  });
  return slack;
}

long long total_dof_cap(const NetworkConfig& cfg) {
  const long long n = cfg.relay();
  const long long sum = cfg.antenna_sum();
  const long long rest = sum - cfg.antennas(0);
  const long long closed = std::min({2 * n, sum, 2 * rest});

  // Derivation-chain recomputation: per-node caps summed, then the doubled
  // cap on everything-but-the-largest-user, combined by min.
  long long per_node = std::min({static_cast<long long>(cfg.antennas(0)), n, rest});
  for (int i = 1; i < cfg.users(); ++i) {
    per_node += std::min(static_cast<long long>(cfg.antennas(i)), n);
  }
  const long long doubled = 2 * std::min(n, rest);
  if (std::min(per_node, doubled) != closed) {
    throw std::logic_error("total-demand cap derivation chain mismatch");
  }
  return closed;
}

std::vector<DoFTuple> enumerate_region(const NetworkConfig& cfg, int cap) {
  if (cap < 0) throw std::invalid_argument("cap must be >= 0");
  const int coords = cfg.users() * (cfg.users() - 1);
  double space = 1.0;
  for (int c = 0; c < coords; ++c) space *= static_cast<double>(cap) + 1.0;
  if (space > 1e8) throw std::invalid_argument("search space exceeds 10^8 points");

  std::vector<DoFTuple> region;
  std::vector<int> flat(static_cast<size_t>(coords), 0);
  while (true) {
    DoFTuple t = DoFTuple::from_flat(cfg.users(), flat);
    if (feasible(cfg, t)) region.push_back(t);
    int pos = coords - 1;
    while (pos >= 0 && flat[static_cast<size_t>(pos)] == cap) {
      flat[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++flat[static_cast<size_t>(pos)];
  }
  return region;
}

}  // namespace dof::bounds
