#include "dof/model.hpp"

#include <algorithm>
#include <numeric>

namespace dof {

// ===== NetworkConfig =====================================================

NetworkConfig::NetworkConfig(const std::vector<int>& antennas, int relay_antennas) {
  if (antennas.size() != 3 && antennas.size() != 4) {
    throw std::invalid_argument("user count must be 3 or 4");
  }
  if (relay_antennas < 1) {
    throw std::invalid_argument("relay antenna count must be >= 1");
  }
  for (int m : antennas) {
    if (m < 1) throw std::invalid_argument("antenna counts must be >= 1");
  }
  k_ = static_cast<int>(antennas.size());
  n_ = relay_antennas;
  std::array<int, kMaxUsers> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.begin() + k_, [&](int a, int b) {
    return antennas[static_cast<size_t>(a)] > antennas[static_cast<size_t>(b)];
  });
  for (int i = 0; i < k_; ++i) {
    label_[static_cast<size_t>(i)] = order[static_cast<size_t>(i)];
    m_[static_cast<size_t>(i)] = antennas[static_cast<size_t>(order[static_cast<size_t>(i)])];
  }
}

int NetworkConfig::antenna_sum() const {
  return std::accumulate(m_.begin(), m_.begin() + k_, 0);
}

bool NetworkConfig::identity_order() const {
  for (int i = 0; i < k_; ++i) {
    if (label_[static_cast<size_t>(i)] != i) return false;
  }
  return true;
}

// ===== DoFTuple ==========================================================

DoFTuple::DoFTuple(int users) : k_(users) {
  if (users != 3 && users != 4) throw std::invalid_argument("user count must be 3 or 4");
}

DoFTuple DoFTuple::from_flat(int users, const std::vector<int>& flat) {
  DoFTuple t(users);
  const size_t expected = static_cast<size_t>(users) * static_cast<size_t>(users - 1);
  if (flat.size() != expected) {
    throw std::invalid_argument("flat tuple has wrong length");
  }
  size_t pos = 0;
  for (int i = 0; i < users; ++i) {
    for (int j = 0; j < users; ++j) {
      if (i == j) continue;
      t.set(i, j, flat[pos++]);
    }
  }
  return t;
}

void DoFTuple::set(int i, int j, int value) {
  if (i < 0 || j < 0 || i >= k_ || j >= k_ || i == j) {
    throw std::invalid_argument("bad demand index");
  }
  if (value < 0) throw std::invalid_argument("demand entries must be >= 0");
  d_[static_cast<size_t>(i)][static_cast<size_t>(j)] = value;
}

void DoFTuple::add(int i, int j, int delta) { set(i, j, (*this)(i, j) + delta); }

std::vector<int> DoFTuple::flat() const {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(k_) * static_cast<size_t>(k_ - 1));
  for (int i = 0; i < k_; ++i) {
    for (int j = 0; j < k_; ++j) {
      if (i != j) out.push_back((*this)(i, j));
    }
  }
  return out;
}

long long DoFTuple::total() const {
  long long s = 0;
  for (int i = 0; i < k_; ++i) {
    for (int j = 0; j < k_; ++j) s += (*this)(i, j);
  }
  return s;
}

// ===== DerivedProfile ====================================================

std::string to_string(CycleForm form) {
  switch (form) {
    case CycleForm::NoneExceeded: return "NoneExceeded";
    case CycleForm::YCycleForward: return "YCycleForward";
    case CycleForm::YCycleReverse: return "YCycleReverse";
    case CycleForm::FourUserSingleCycle: return "FourUserSingleCycle";
    case CycleForm::FourUserDoubleCycle: return "FourUserDoubleCycle";
    case CycleForm::OversubscribedAcyclic: return "OversubscribedAcyclic";
  }
  return "?";
}

namespace {

/// Argmax direction per unordered pair; ties resolve forward (i < j wins).
/// wins[i][j] is true when the (i,j) demand is the pair's argmax direction.
std::array<std::array<bool, kMaxUsers>, kMaxUsers> tournament(const DoFTuple& d) {
  std::array<std::array<bool, kMaxUsers>, kMaxUsers> wins{};
  const int k = d.users();
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const bool forward = d(i, j) >= d(j, i);
      wins[static_cast<size_t>(i)][static_cast<size_t>(j)] = forward;
      wins[static_cast<size_t>(j)][static_cast<size_t>(i)] = !forward;
    }
  }
  return wins;
}

/// True when the three directed pair-max edges among {x,y,z} form a cycle;
/// if so, orient starting at the smallest node.
bool oriented_triangle(const std::array<std::array<bool, kMaxUsers>, kMaxUsers>& wins, int x,
                       int y, int z, std::array<int, 3>& cycle_out) {
  // A 3-node tournament is cyclic iff every node has out-degree 1.
  const int deg_x = (wins[static_cast<size_t>(x)][static_cast<size_t>(y)] ? 1 : 0) +
                    (wins[static_cast<size_t>(x)][static_cast<size_t>(z)] ? 1 : 0);
  const int deg_y = (wins[static_cast<size_t>(y)][static_cast<size_t>(x)] ? 1 : 0) +
                    (wins[static_cast<size_t>(y)][static_cast<size_t>(z)] ? 1 : 0);
  const int deg_z = (wins[static_cast<size_t>(z)][static_cast<size_t>(x)] ? 1 : 0) +
                    (wins[static_cast<size_t>(z)][static_cast<size_t>(y)] ? 1 : 0);
  if (deg_x != 1 || deg_y != 1 || deg_z != 1) return false;
  const int start = std::min({x, y, z});
  int second = -1, third = -1;
  for (int cand : {x, y, z}) {
    if (cand != start && wins[static_cast<size_t>(start)][static_cast<size_t>(cand)]) {
      second = cand;
    }
  }
  third = x + y + z - start - second;
  cycle_out = {start, second, third};
  return true;
}

}  // namespace

DerivedProfile derive_profile(const NetworkConfig& cfg, const DoFTuple& d) {
  if (cfg.users() != d.users()) throw std::invalid_argument("dimension mismatch");
  const int k = cfg.users();
  DerivedProfile p;
  p.users = k;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      p.dstar[static_cast<size_t>(i)][static_cast<size_t>(j)] = std::max(d(i, j), d(j, i));
    }
  }
  for (int i = 0; i < k; ++i) {
    int out = 0, in = 0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      out += d(i, j);
      in += d(j, i);
    }
    p.mbar[static_cast<size_t>(i)] = std::max(out, in);
  }
  int nbar = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      nbar += p.dstar[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
  }
  p.nbar = nbar;

  if (nbar <= cfg.relay()) {
    p.form = CycleForm::NoneExceeded;
    return p;
  }

  const auto wins = tournament(d);
  if (k == 3) {
    std::array<int, 3> cyc{};
    if (oriented_triangle(wins, 0, 1, 2, cyc)) {
      p.cycle = cyc;
      p.form = (cyc == std::array<int, 3>{0, 1, 2}) ? CycleForm::YCycleForward
                                                    : CycleForm::YCycleReverse;
    } else {
      p.form = CycleForm::OversubscribedAcyclic;
    }
    return p;
  }

  // k == 4: collect the cyclic triangles among the four node triples.
  std::vector<std::pair<int, std::array<int, 3>>> cyclic;  // (excluded node, cycle)
  for (int excluded = 0; excluded < 4; ++excluded) {
    std::array<int, 3> nodes{};
    int pos = 0;
    for (int u = 0; u < 4; ++u) {
      if (u != excluded) nodes[static_cast<size_t>(pos++)] = u;
    }
    std::array<int, 3> cyc{};
    if (oriented_triangle(wins, nodes[0], nodes[1], nodes[2], cyc)) {
      cyclic.emplace_back(excluded, cyc);
    }
  }
  if (cyclic.empty()) {
    p.form = CycleForm::OversubscribedAcyclic;
    return p;
  }
  if (cyclic.size() == 1) {
    p.form = CycleForm::FourUserSingleCycle;
    p.excluded = cyclic[0].first;
    p.cycle = cyclic[0].second;
    return p;
  }
  // Two cyclic triangles sharing exactly one directed edge: find it and name
  // the canonical labels (shared edge a→b, intermediates p < q).
  const auto& c1 = cyclic[0].second;
  const auto& c2 = cyclic[1].second;
  auto edges_of = [](const std::array<int, 3>& c) {
    return std::array<std::pair<int, int>, 3>{
        std::pair{c[0], c[1]}, std::pair{c[1], c[2]}, std::pair{c[2], c[0]}};
  };
  const auto e1 = edges_of(c1);
  const auto e2 = edges_of(c2);
  int sa = -1, sb = -1;
  for (const auto& [u, v] : e1) {
    for (const auto& [x, y] : e2) {
      if (u == x && v == y) {
        sa = u;
        sb = v;
      }
    }
  }
  p.form = CycleForm::FourUserDoubleCycle;
  p.shared_from = sa;
  p.shared_to = sb;
  const int third1 = c1[0] + c1[1] + c1[2] - sa - sb;
  const int third2 = c2[0] + c2[1] + c2[2] - sa - sb;
  p.via_first = std::min(third1, third2);
  p.via_second = std::max(third1, third2);
  return p;
}

// ===== RoutingTable ======================================================

long long RoutingTable::delivered(int i, int j) const {
  long long s = 0;
  for (const auto& e : entries) {
    if (e.source == i && e.destination == j) s += e.streams;
  }
  return s;
}

}  // namespace dof
