#include "dof/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

namespace dof::ssa {

namespace {

// ===== Pinned RNG ========================================================

/// mt19937_64 + Box-Muller. std::normal_distribution is implementation-
/// defined, so the transform is spelled out to keep seeds portable.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = unit_(eng_);
    } while (u1 <= 1e-300);
    const double u2 = unit_(eng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  Vec vector(int n) {
    Vec v(n);
    for (int k = 0; k < n; ++k) v(k) = (*this)();
    return v;
  }

  Mat matrix(int rows, int cols) {
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = (*this)();
    }
    return m;
  }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64-style mixer deriving independent sub-streams from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ===== Numerics ==========================================================

int numerical_rank(const Mat& a, double tol = kRankTol) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > tol * s(0)) ++r;
  }
  return r;
}

/// Orthonormal basis (columns) of the null space of a.
Mat null_space(const Mat& a, double rtol = kRankTol) {
  if (a.rows() == 0 || a.cols() == 0) return Mat::Identity(a.cols(), a.cols());
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      if (s(k) > rtol * s(0)) ++r;
    }
  }
  return svd.matrixV().rightCols(a.cols() - r);
}

/// Orthonormal basis of the orthogonal complement of col(b) in R^n.
Mat orth_complement(const Mat& b, int n) {
  if (b.rows() == 0 || b.cols() == 0) return Mat::Identity(n, n);
  return null_space(b.transpose());
}

/// Q factor of the reduced QR decomposition.
Mat thin_q(const Mat& a) {
  Eigen::HouseholderQR<Mat> qr(a);
  const Eigen::Index k = std::min(a.rows(), a.cols());
  return qr.householderQ() * Mat::Identity(a.rows(), k);
}

/// Minimum-norm least-squares solve.
Mat lstsq(const Mat& a, const Mat& b) {
  if (a.rows() == 0 || a.cols() == 0) return Mat::Zero(a.cols(), b.cols());
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.solve(b);
}

Mat hstack(const std::vector<Mat>& blocks, int rows) {
  Eigen::Index cols = 0;
  for (const auto& m : blocks) cols += m.cols();
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& m : blocks) {
    out.middleCols(at, m.cols()) = m;
    at += m.cols();
  }
  return out;
}

Mat vstack(const std::vector<Mat>& blocks, int cols) {
  Eigen::Index rows = 0;
  for (const auto& m : blocks) rows += m.rows();
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& m : blocks) {
    out.middleRows(at, m.rows()) = m;
    at += m.rows();
  }
  return out;
}

constexpr std::array<std::pair<int, int>, 6> kPairs{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

// ===== Two-hop gain model ================================================

/// Per-stream uplink gains |D_p H_i V_ij e_t|^2 and downlink zero-forcing
/// constants |Pc^T (H_dn T_p w)|^2 for unit forwarded directions w. The
/// downlink constant projects each desired column onto the complement of
/// foreign-pair interference and the receiver's other desired columns.
struct TwoHopGains {
  std::array<std::array<Vec, kMaxUsers>, kMaxUsers> up_gain, dn_coef;
};

TwoHopGains two_hop_gains(const SSADesign& des, const ChannelRealization& ch) {
  const int k = des.users;
  TwoHopGains g;

  // Normalized forwarded direction per stream inside its pair's w space.
  std::array<std::array<Mat, kMaxUsers>, kMaxUsers> wdir;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j || des.d(i, j) == 0) continue;
      const int p = pair_index(i, j);
      const Mat u = des.D[static_cast<size_t>(p)] * ch.up[static_cast<size_t>(i)] *
                    des.V[static_cast<size_t>(i)][static_cast<size_t>(j)];
      Mat w(u.rows(), u.cols());
      Vec gain(u.cols());
      for (Eigen::Index t = 0; t < u.cols(); ++t) {
        const double g2 = u.col(t).squaredNorm();
        gain(t) = g2;
        w.col(t) = g2 > 0.0 ? Vec(u.col(t) / std::sqrt(g2)) : Vec(u.col(t));
      }
      g.up_gain[static_cast<size_t>(i)][static_cast<size_t>(j)] = gain;
      wdir[static_cast<size_t>(i)][static_cast<size_t>(j)] = w;
    }
  }

  for (int j = 0; j < k; ++j) {
    const int mj = static_cast<int>(ch.dn[static_cast<size_t>(j)].rows());
    std::vector<Mat> nuisance;
    std::vector<std::pair<int, int>> desired;  // (source, stream t)
    std::vector<Vec> own;
    for (const auto& [a, b] : kPairs) {
      if (b >= k || !des.pair_active(a, b)) continue;
      const int p = pair_index(a, b);
      const Mat eff = ch.dn[static_cast<size_t>(j)] * des.T[static_cast<size_t>(p)];
      if (j == a || j == b) {
        const int other = j == a ? b : a;
        for (int t = 0; t < des.d(other, j); ++t) {
          own.push_back(eff * wdir[static_cast<size_t>(other)][static_cast<size_t>(j)].col(t));
          desired.emplace_back(other, t);
        }
      } else {
        for (const auto& [s, r] : {std::pair{a, b}, std::pair{b, a}}) {
          for (int t = 0; t < des.d(s, r); ++t) {
            nuisance.push_back(
                eff * wdir[static_cast<size_t>(s)][static_cast<size_t>(r)].col(t));
          }
        }
      }
    }
    std::vector<Mat> nuis_blocks;
    nuis_blocks.reserve(nuisance.size());
    for (const auto& c : nuisance) nuis_blocks.push_back(c);
    for (int i = 0; i < k; ++i) {
      if (des.d(i, j) > 0) {
        g.dn_coef[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            Vec::Zero(des.d(i, j));
      }
    }
    for (size_t idx = 0; idx < desired.size(); ++idx) {
      std::vector<Mat> blocks = nuis_blocks;
      for (size_t o = 0; o < desired.size(); ++o) {
        if (o != idx) blocks.push_back(own[o]);
      }
      const Mat nm = hstack(blocks, mj);
      const Mat pc = orth_complement(nm, mj);
      const Vec h = pc.transpose() * own[idx];
      const auto [src, t] = desired[idx];
      g.dn_coef[static_cast<size_t>(src)][static_cast<size_t>(j)](t) = h.squaredNorm();
    }
  }
  return g;
}

/// Smallest downlink zero-forcing constant over all streams (1.0 if none):
/// the objective of the relay-precoder conditioning ascent.
double min_downlink_constant(const SSADesign& des, const ChannelRealization& ch) {
  const TwoHopGains g = two_hop_gains(des, ch);
  double best = 1.0;
  bool any = false;
  for (int i = 0; i < des.users; ++i) {
    for (int j = 0; j < des.users; ++j) {
      if (i == j || des.d(i, j) == 0) continue;
      for (int t = 0; t < des.d(i, j); ++t) {
        const double c = g.dn_coef[static_cast<size_t>(i)][static_cast<size_t>(j)](t);
        best = any ? std::min(best, c) : c;
        any = true;
      }
    }
  }
  return any ? best : 1.0;
}

int thread_cap() {
  unsigned cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("DOF_LAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && static_cast<unsigned>(v) < cap) cap = static_cast<unsigned>(v);
  }
  return static_cast<int>(cap);
}

}  // namespace

// ===== Channels ==========================================================

ChannelRealization generate_channels(const NetworkConfig& cfg,
                                     const DerivedProfile& profile,
                                     std::uint64_t seed) {
  if (profile.users != cfg.users()) throw std::invalid_argument("dimension mismatch");
  if (profile.nbar > cfg.relay()) {
    throw std::invalid_argument("relay demand nbar exceeds N; reroute first");
  }
  GaussianSampler g(seed);
  ChannelRealization ch;
  ch.users = cfg.users();
  ch.nbar = profile.nbar;
  ch.seed = seed;
  for (int i = 0; i < cfg.users(); ++i) ch.up.push_back(g.matrix(ch.nbar, cfg.antennas(i)));
  for (int i = 0; i < cfg.users(); ++i) ch.dn.push_back(g.matrix(cfg.antennas(i), ch.nbar));
  return ch;
}

// ===== Errors ============================================================

AlignmentInfeasible::AlignmentInfeasible(int i_, int j_, int required_, int available_)
    : std::runtime_error("alignment infeasible for pair " + std::to_string(i_ + 1) +
                         "," + std::to_string(j_ + 1) + ": needs " +
                         std::to_string(required_) + " null directions, has " +
                         std::to_string(available_)),
      i(i_),
      j(j_),
      required(required_),
      available(available_) {}

RelayZFInfeasible::RelayZFInfeasible(int user_, int deficit_)
    : std::runtime_error("relay-side nulling infeasible at user " +
                         std::to_string(user_ + 1) + ": short by " +
                         std::to_string(deficit_) + " dimension(s)"),
      user(user_),
      deficit(deficit_) {}

// ===== Design basics =====================================================

int pair_index(int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= kMaxUsers || j >= kMaxUsers) {
    throw std::invalid_argument("pair_index needs two distinct users in range");
  }
  if (i > j) std::swap(i, j);
  for (size_t p = 0; p < kPairs.size(); ++p) {
    if (kPairs[p].first == i && kPairs[p].second == j) return static_cast<int>(p);
  }
  throw std::logic_error("unreachable pair");
}

bool SSADesign::pair_active(int i, int j) const { return dstar(i, j) > 0; }

int SSADesign::dstar(int i, int j) const { return std::max(d(i, j), d(j, i)); }

// ===== Alignment =========================================================

SSADesign build_alignment(const NetworkConfig& cfg, const DoFTuple& d,
                          const ChannelRealization& ch) {
  const auto profile = derive_profile(cfg, d);
  if (ch.users != cfg.users() || ch.nbar != profile.nbar) {
    throw std::invalid_argument("channel realization does not match the tuple");
  }
  const int k = cfg.users();
  const int nbar = profile.nbar;

  SSADesign des;
  des.users = k;
  des.nbar = nbar;
  des.d = d;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i != j) {
        des.V[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            Mat::Zero(cfg.antennas(i), d(i, j));
      }
    }
  }
  for (auto& m : des.basis) m = Mat(nbar, 0);
  for (auto& m : des.D) m = Mat(0, nbar);
  for (auto& m : des.T) m = Mat(nbar, 0);
  if (nbar == 0) return des;

  GaussianSampler g(mix_seed(ch.seed, 1));

  // Per-pair data: direction order (a→b carries the larger demand) and the
  // admissible relay-direction subspaces for aligned and extension columns.
  struct PairData {
    int a = -1, b = -1, big = 0, small = 0;
    Mat na, nb;    // null-basis blocks for users a and b
    Mat q_aligned, q_generic;
  };
  std::array<PairData, 6> pd;
  struct ColDesc {
    int pidx = -1;
    bool aligned = false;
  };
  std::vector<ColDesc> cols;

  for (const auto& [i, j] : kPairs) {
    if (j >= k || des.dstar(i, j) == 0) continue;
    const int p = pair_index(i, j);
    PairData& pair = pd[static_cast<size_t>(p)];
    const bool forward = d(i, j) >= d(j, i);
    pair.a = forward ? i : j;
    pair.b = forward ? j : i;
    pair.big = d(pair.a, pair.b);
    pair.small = d(pair.b, pair.a);
    const Mat& ha = ch.up[static_cast<size_t>(pair.a)];
    const Mat& hb = ch.up[static_cast<size_t>(pair.b)];
    Mat stacked(nbar, ha.cols() + hb.cols());
    stacked << ha, -hb;
    const Mat ns = null_space(stacked);
    if (ns.cols() < pair.small) {
      throw AlignmentInfeasible(pair.a, pair.b, pair.small, static_cast<int>(ns.cols()));
    }
    pair.na = ns.topRows(ha.cols());
    pair.nb = ns.bottomRows(hb.cols());
    if (pair.small > 0) pair.q_aligned = thin_q(ha * pair.na);
    if (pair.big > pair.small) pair.q_generic = thin_q(ha);
    for (int c = 0; c < pair.small; ++c) cols.push_back({p, true});
    for (int c = 0; c < pair.big - pair.small; ++c) cols.push_back({p, false});
  }
  if (static_cast<int>(cols.size()) != nbar) {
    throw std::logic_error("pair demand columns do not sum to nbar");
  }

  // Seed each relay direction randomly inside its admissible subspace, then
  // sweep: re-pick each column as the direction in its subspace farthest
  // from the span of the others, keeping the combined basis well separated.
  auto subspace_of = [&](const ColDesc& c) -> const Mat& {
    return c.aligned ? pd[static_cast<size_t>(c.pidx)].q_aligned
                     : pd[static_cast<size_t>(c.pidx)].q_generic;
  };
  Mat u(nbar, nbar);
  for (size_t ci = 0; ci < cols.size(); ++ci) {
    const Mat& q = subspace_of(cols[ci]);
    const Vec v = q * g.vector(static_cast<int>(q.cols()));
    u.col(static_cast<Eigen::Index>(ci)) = v / v.norm();
  }
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (size_t ci = 0; ci < cols.size(); ++ci) {
      Mat others(nbar, nbar - 1);
      Eigen::Index at = 0;
      for (size_t o = 0; o < cols.size(); ++o) {
        if (o != ci) others.col(at++) = u.col(static_cast<Eigen::Index>(o));
      }
      const Mat comp = orth_complement(others, nbar);
      const Mat& q = subspace_of(cols[ci]);
      const Mat local = comp * (comp.transpose() * q);
      Eigen::JacobiSVD<Mat> svd(local, Eigen::ComputeThinV);
      const Vec w = q * svd.matrixV().col(0);
      u.col(static_cast<Eigen::Index>(ci)) = w / w.norm();
    }
  }

  // Recover beamformers whose relay images realize the chosen directions.
  double worst_resid = 0.0;
  Eigen::Index ci = 0;
  for (const auto& [i, j] : kPairs) {
    if (j >= k || des.dstar(i, j) == 0) continue;
    const int p = pair_index(i, j);
    const PairData& pair = pd[static_cast<size_t>(p)];
    const Mat& ha = ch.up[static_cast<size_t>(pair.a)];
    const Mat& hb = ch.up[static_cast<size_t>(pair.b)];
    Mat va(ha.cols(), pair.big), vb(hb.cols(), pair.small);
    Mat base(nbar, pair.big);
    for (int c = 0; c < pair.small; ++c) {
      const Vec dir = u.col(ci++);
      const Vec y = lstsq(ha * pair.na, dir);
      Vec wa = pair.na * y, wb = pair.nb * y;
      const double sa = wa.norm(), sb = wb.norm();
      if (sa < 1e-12 || sb < 1e-12) throw std::runtime_error("degenerate aligned beam");
      va.col(c) = wa / sa;
      vb.col(c) = wb / sb;
      base.col(c) = ha * va.col(c);
    }
    for (int c = 0; c < pair.big - pair.small; ++c) {
      const Vec dir = u.col(ci++);
      Vec v = lstsq(ha, dir);
      v /= v.norm();
      va.col(pair.small + c) = v;
      base.col(pair.small + c) = ha * v;
    }
    des.V[static_cast<size_t>(pair.a)][static_cast<size_t>(pair.b)] = va;
    des.V[static_cast<size_t>(pair.b)][static_cast<size_t>(pair.a)] = vb;
    des.basis[static_cast<size_t>(p)] = base;
    if (pair.small > 0) {
      const Mat img = hb * vb;
      const Mat proj = base * lstsq(base, img);
      worst_resid = std::max(worst_resid, (img - proj).norm() / img.norm());
      if (numerical_rank(img) < pair.small) {
        throw std::runtime_error("aligned image is rank deficient");
      }
    }
  }
  des.alignment_residual = worst_resid;

  std::vector<Mat> all_bases;
  for (size_t p = 0; p < kPairs.size(); ++p) {
    if (des.basis[p].cols() > 0) all_bases.push_back(des.basis[p]);
  }
  if (numerical_rank(hstack(all_bases, nbar)) != nbar) {
    throw std::runtime_error("aligned bases do not span the relay space");
  }
  return des;
}

// ===== Relay processing ==================================================

void build_relay_processing(SSADesign& design, const ChannelRealization& ch) {
  const int k = design.users;
  const int nbar = design.nbar;
  if (nbar == 0) return;
  GaussianSampler g(mix_seed(ch.seed, 2));

  // Combiners: rows orthogonal to every other pair's aligned subspace.
  for (const auto& [i, j] : kPairs) {
    if (j >= k || !design.pair_active(i, j)) continue;
    const int p = pair_index(i, j);
    std::vector<Mat> others;
    for (size_t q = 0; q < kPairs.size(); ++q) {
      if (static_cast<int>(q) != p && design.basis[q].cols() > 0) {
        others.push_back(design.basis[q]);
      }
    }
    design.D[static_cast<size_t>(p)] = orth_complement(hstack(others, nbar), nbar).transpose();
  }

  // Lazy budget-greedy nulling: a precoder column is forced orthogonal to a
  // foreign receiver's downlink exactly when that receiver has no spare
  // dimensions left to null it itself.
  std::array<int, kMaxUsers> budget{}, nullcap{};
  for (int u = 0; u < k; ++u) {
    int desired = 0;
    for (int a = 0; a < k; ++a) {
      if (a != u) desired += design.d(a, u);
    }
    const int mu = static_cast<int>(ch.dn[static_cast<size_t>(u)].rows());
    budget[static_cast<size_t>(u)] = mu - desired;
    if (budget[static_cast<size_t>(u)] < 0) {
      throw std::invalid_argument("receiver antenna budget exceeded at user " +
                                  std::to_string(u + 1));
    }
    nullcap[static_cast<size_t>(u)] = std::max(0, nbar - mu);
  }

  struct TCol {
    int pidx = -1, col = -1;
    Mat q;
  };
  std::vector<TCol> tcols;
  for (const auto& [i, j] : kPairs) {
    if (j >= k || !design.pair_active(i, j)) continue;
    const int p = pair_index(i, j);
    const int ds = design.dstar(i, j);
    std::vector<int> foreign;
    for (int u = 0; u < k; ++u) {
      if (u != i && u != j) foreign.push_back(u);
    }
    Mat t(nbar, ds);
    for (int c = 0; c < ds; ++c) {
      std::vector<int> order = foreign;
      std::sort(order.begin(), order.end(), [&](int x, int y) {
        return std::pair(budget[static_cast<size_t>(x)], x) <
               std::pair(budget[static_cast<size_t>(y)], y);
      });
      std::vector<int> nulls;
      int stacked_rows = 0;
      for (int u : order) {
        if (budget[static_cast<size_t>(u)] != 0) continue;
        const int mu = static_cast<int>(ch.dn[static_cast<size_t>(u)].rows());
        if (nullcap[static_cast<size_t>(u)] < 1) throw RelayZFInfeasible(u, 1);
        if (nbar - (stacked_rows + mu) < 1) {
          throw RelayZFInfeasible(u, 1 - (nbar - stacked_rows - mu));
        }
        nulls.push_back(u);
        stacked_rows += mu;
      }
      for (int u : nulls) --nullcap[static_cast<size_t>(u)];
      for (int u : foreign) {
        if (std::find(nulls.begin(), nulls.end(), u) == nulls.end()) {
          --budget[static_cast<size_t>(u)];
        }
      }
      Mat q;
      if (nulls.empty()) {
        q = Mat::Identity(nbar, nbar);
      } else {
        std::vector<Mat> rows;
        rows.reserve(nulls.size());
        for (int u : nulls) rows.push_back(ch.dn[static_cast<size_t>(u)]);
        q = null_space(vstack(rows, nbar));
      }
      const Vec col = q * g.vector(static_cast<int>(q.cols()));
      t.col(c) = col / col.norm();
      std::sort(nulls.begin(), nulls.end());
      design.null_sets[static_cast<size_t>(p)].push_back(nulls);
      tcols.push_back({p, c, q});
    }
    design.T[static_cast<size_t>(p)] = t;
  }

  // Max-min ascent: re-pick each precoder column inside its admissible
  // subspace to raise the smallest end-to-end downlink constant. Random
  // candidates keep the column generic; only improvements are kept.
  double current = min_downlink_constant(design, ch);
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (const auto& tc : tcols) {
      if (tc.q.cols() <= 1) continue;
      Mat& t = design.T[static_cast<size_t>(tc.pidx)];
      Vec best = t.col(tc.col);
      double best_value = current;
      for (int trial = 0; trial < 24; ++trial) {
        Vec cand = tc.q * g.vector(static_cast<int>(tc.q.cols()));
        cand /= cand.norm();
        t.col(tc.col) = cand;
        const double value = min_downlink_constant(design, ch);
        if (value > best_value) {
          best = cand;
          best_value = value;
        }
      }
      t.col(tc.col) = best;
      current = best_value;
    }
  }
}

SSADesign build_design(const NetworkConfig& cfg, const DoFTuple& d,
                       const ChannelRealization& ch) {
  SSADesign des = build_alignment(cfg, d, ch);
  build_relay_processing(des, ch);
  return des;
}

// ===== Certification =====================================================

bool DecodabilityCertificate::all_true() const {
  return std::all_of(per_stream.begin(), per_stream.end(),
                     [](const StreamVerdict& v) { return v.decodable; });
}

DecodabilityCertificate certify(SSADesign& design, const ChannelRealization& ch,
                                double rank_tol) {
  const int k = design.users;
  DecodabilityCertificate cert;
  cert.alignment_residual = design.alignment_residual;

  std::array<bool, kMaxUsers> user_ok{};
  user_ok.fill(true);

  for (int i = 0; i < k; ++i) {
    const int mi = static_cast<int>(ch.dn[static_cast<size_t>(i)].rows());
    std::vector<Mat> desired_blocks, intf_blocks;
    for (const auto& [a, b] : kPairs) {
      if (b >= k || !design.pair_active(a, b)) continue;
      const int p = pair_index(a, b);
      const Mat eff = ch.dn[static_cast<size_t>(i)] * design.T[static_cast<size_t>(p)];
      const Mat& dp = design.D[static_cast<size_t>(p)];
      if (i == a || i == b) {
        // Desired: the other end's streams toward i. Streams i sends are
        // excluded — the receiver knows its own symbols and subtracts them.
        const int other = i == a ? b : a;
        if (design.d(other, i) > 0) {
          desired_blocks.push_back(
              eff * (dp * ch.up[static_cast<size_t>(other)] *
                     design.V[static_cast<size_t>(other)][static_cast<size_t>(i)]));
        }
      } else {
        for (const auto& [s, r] : {std::pair{a, b}, std::pair{b, a}}) {
          if (design.d(s, r) > 0) {
            intf_blocks.push_back(
                eff * (dp * ch.up[static_cast<size_t>(s)] *
                       design.V[static_cast<size_t>(s)][static_cast<size_t>(r)]));
          }
        }
      }
    }
    const Mat dm = hstack(desired_blocks, mi);
    const Mat im = hstack(intf_blocks, mi);
    const int nd = static_cast<int>(dm.cols());
    Mat stack(mi, dm.cols() + im.cols());
    stack << dm, im;

    // Shared scale: all rank decisions are relative to the largest singular
    // value of the combined stack, so a tiny nulled block cannot inflate
    // its own rank.
    double smax = 0.0;
    if (stack.cols() > 0) {
      Eigen::JacobiSVD<Mat> svd(stack);
      if (svd.singularValues().size() > 0) smax = svd.singularValues()(0);
      for (Eigen::Index s = 0; s < svd.singularValues().size(); ++s) {
        const double ratio = smax > 0.0 ? svd.singularValues()(s) / smax : 0.0;
        if (ratio > rank_tol) cert.min_singular_ratio = std::min(cert.min_singular_ratio, ratio);
      }
    }
    auto rank_rel = [&](const Mat& m) {
      if (m.cols() == 0 || smax == 0.0) return 0;
      Eigen::JacobiSVD<Mat> svd(m);
      int r = 0;
      for (Eigen::Index s = 0; s < svd.singularValues().size(); ++s) {
        if (svd.singularValues()(s) > rank_tol * smax) ++r;
      }
      return r;
    };
    const int r = rank_rel(im);
    const bool good = rank_rel(stack) == nd + r && rank_rel(dm) == nd && nd + r <= mi;
    user_ok[static_cast<size_t>(i)] = good;

    // Interference-nulling matched-filter rows, one per desired stream.
    const Mat comp = orth_complement(im, mi);
    Mat filt(nd, mi);
    for (int c = 0; c < nd; ++c) {
      Vec f = comp * (comp.transpose() * dm.col(c));
      const double n = f.norm();
      filt.row(c) = n > 0.0 ? Vec(f / n).transpose() : f.transpose();
    }
    design.U[static_cast<size_t>(i)] = filt;
  }

  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j || design.d(i, j) == 0) continue;
      cert.per_stream.push_back({i, j, user_ok[static_cast<size_t>(j)]});
    }
  }
  return cert;
}

// ===== Monte-Carlo decode ================================================

double mc_symbol_mse(const SSADesign& design, const ChannelRealization& ch,
                     double power, int symbols, std::uint64_t seed) {
  const int k = design.users;
  const int nbar = design.nbar;
  if (symbols <= 0) throw std::invalid_argument("symbols must be positive");

  struct Stream {
    int i, j, t;
  };
  std::vector<Stream> streams;
  std::array<int, kMaxUsers> per_user{};
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      per_user[static_cast<size_t>(i)] += design.d(i, j);
      for (int t = 0; t < design.d(i, j); ++t) streams.push_back({i, j, t});
    }
  }
  if (streams.empty()) return 0.0;

  // Relay linear map and the analytic transmit-energy normalization.
  Mat relay = Mat::Zero(nbar, nbar);
  for (size_t p = 0; p < kPairs.size(); ++p) {
    if (design.T[p].cols() > 0) relay += design.T[p] * design.D[p];
  }
  std::vector<Vec> relay_img(streams.size());  // relay output per unit symbol
  double energy = relay.squaredNorm();         // forwarded relay-noise power
  for (size_t s = 0; s < streams.size(); ++s) {
    const auto& st = streams[s];
    const double scale = std::sqrt(power / per_user[static_cast<size_t>(st.i)]);
    relay_img[s] = relay *
                   (ch.up[static_cast<size_t>(st.i)] *
                    design.V[static_cast<size_t>(st.i)][static_cast<size_t>(st.j)].col(st.t)) *
                   scale;
    energy += relay_img[s].squaredNorm();
  }
  const double c_relay = std::sqrt(power / energy);

  // Per-receiver end-to-end columns, split into desired / self / foreign.
  struct Receiver {
    std::vector<size_t> desired;           // stream indices toward this user
    std::vector<size_t> self;              // streams this user transmits
    Mat solve_a;                           // Pc^T * desired columns
    Mat pc;                                // interference complement basis
    std::vector<Vec> col;                  // end-to-end column per stream
    Mat noise_map;                         // forwarded relay noise map
  };
  std::vector<Receiver> rx(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    Receiver& r = rx[static_cast<size_t>(j)];
    const Mat& hj = ch.dn[static_cast<size_t>(j)];
    const int mj = static_cast<int>(hj.rows());
    r.noise_map = c_relay * hj * relay;
    std::vector<Mat> foreign;
    r.col.resize(streams.size());
    for (size_t s = 0; s < streams.size(); ++s) {
      r.col[s] = c_relay * (hj * relay_img[s]);
      if (streams[s].j == j) {
        r.desired.push_back(s);
      } else if (streams[s].i == j) {
        r.self.push_back(s);
      } else {
        foreign.push_back(r.col[s]);
      }
    }
    // Interference rank is judged on the shared scale of every incident
    // stream column, so residuals of zero-forced relay columns do not
    // masquerade as full-rank interference and exhaust the complement.
    const Mat f = hstack(foreign, mj);
    double scale = 0.0;
    for (size_t s = 0; s < streams.size(); ++s) scale = std::max(scale, r.col[s].norm());
    Mat intf_basis(mj, 0);
    if (f.cols() > 0 && scale > 0.0) {
      Eigen::JacobiSVD<Mat> svd(f, Eigen::ComputeThinU);
      int rk = 0;
      for (Eigen::Index v = 0; v < svd.singularValues().size(); ++v) {
        if (svd.singularValues()(v) > kRankTol * scale) ++rk;
      }
      intf_basis = svd.matrixU().leftCols(rk);
    }
    r.pc = orth_complement(intf_basis, mj);
    Mat a(r.pc.cols(), r.desired.size());
    for (size_t c = 0; c < r.desired.size(); ++c) {
      a.col(static_cast<Eigen::Index>(c)) = r.pc.transpose() * r.col[r.desired[c]];
    }
    r.solve_a = a;
  }

  GaussianSampler g(seed);
  std::vector<double> mse(streams.size(), 0.0);
  for (int rep = 0; rep < symbols; ++rep) {
    const Vec sym = g.vector(static_cast<int>(streams.size()));
    const Vec zr = g.vector(nbar);
    for (int j = 0; j < k; ++j) {
      Receiver& r = rx[static_cast<size_t>(j)];
      if (r.desired.empty()) {
        g.vector(static_cast<int>(ch.dn[static_cast<size_t>(j)].rows()));  // keep stream order
        continue;
      }
      const int mj = static_cast<int>(ch.dn[static_cast<size_t>(j)].rows());
      Vec y = r.noise_map * zr + g.vector(mj);
      for (size_t s = 0; s < streams.size(); ++s) {
        if (streams[s].i == j) continue;  // self symbols are known: subtracted
        y += r.col[s] * sym(static_cast<Eigen::Index>(s));
      }
      const Vec est = lstsq(r.solve_a, Vec(r.pc.transpose() * y));
      for (size_t c = 0; c < r.desired.size(); ++c) {
        const double err =
            est(static_cast<Eigen::Index>(c)) - sym(static_cast<Eigen::Index>(r.desired[c]));
        mse[r.desired[c]] += err * err;
      }
    }
  }
  double worst = 0.0;
  for (size_t s = 0; s < streams.size(); ++s) {
    worst = std::max(worst, mse[s] / symbols);
  }
  return worst;
}

// ===== Rate slope ========================================================

std::vector<double> rate_curve(const SSADesign& design, const ChannelRealization& ch,
                               const std::vector<double>& grid) {
  const int k = design.users;
  long long total_streams = design.d.total();
  std::vector<double> rates(grid.size(), 0.0);
  if (total_streams == 0) return rates;

  const TwoHopGains gains = two_hop_gains(design, ch);
  std::array<int, kMaxUsers> per_user{};
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i != j) per_user[static_cast<size_t>(i)] += design.d(i, j);
    }
  }
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    const double p = grid[gi];
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      if (per_user[static_cast<size_t>(i)] == 0) continue;
      for (int j = 0; j < k; ++j) {
        if (i == j || design.d(i, j) == 0) continue;
        for (int t = 0; t < design.d(i, j); ++t) {
          const double up = p / per_user[static_cast<size_t>(i)] *
                            gains.up_gain[static_cast<size_t>(i)][static_cast<size_t>(j)](t);
          const double dn = p / static_cast<double>(total_streams) *
                            gains.dn_coef[static_cast<size_t>(i)][static_cast<size_t>(j)](t);
          total += 0.5 * std::log(1.0 + std::min(up, dn));
        }
      }
    }
    rates[gi] = total;
  }
  return rates;
}

SlopeEstimate estimate_dof_slope(const NetworkConfig& cfg, const DoFTuple& d,
                                 const std::vector<double>& grid, int trials,
                                 std::uint64_t seed) {
  if (grid.size() < 3) {
    throw std::invalid_argument("power grid needs at least 3 points");
  }
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    if (grid[gi] <= 0.0 || (gi > 0 && grid[gi] <= grid[gi - 1])) {
      throw std::invalid_argument("power grid must be positive and ascending");
    }
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");

  const auto profile = derive_profile(cfg, d);
  SlopeEstimate est;
  est.power = grid;
  est.streams = static_cast<int>(d.total());
  est.trials = trials;

  // Top-decade fit window (at least the two largest grid points).
  std::vector<bool> window(grid.size(), false);
  int in_window = 0;
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    window[gi] = grid[gi] >= grid.back() / 10.0 - 1e-9;
    if (window[gi]) ++in_window;
  }
  if (in_window < 2) {
    window[grid.size() - 2] = true;
  }
  est.window = window;

  if (est.streams == 0) {
    est.sum_rate.assign(grid.size(), 0.0);
    est.certified_trials = trials;
    return est;
  }

  // Independent per-trial channel seeds; trials may run on worker threads
  // but results are aggregated in trial order, so the outcome does not
  // depend on the thread count.
  std::vector<std::vector<double>> per_trial(static_cast<size_t>(trials));
  std::vector<char> certified(static_cast<size_t>(trials), 0);
  std::vector<std::exception_ptr> failure(static_cast<size_t>(trials));
  auto run_trial = [&](int t) {
    try {
      const auto ch = generate_channels(cfg, profile, mix_seed(seed, 100 + static_cast<std::uint64_t>(t)));
      SSADesign design = build_design(cfg, d, ch);
      const auto cert = certify(design, ch);
      certified[static_cast<size_t>(t)] = cert.all_true() ? 1 : 0;
      per_trial[static_cast<size_t>(t)] = rate_curve(design, ch, grid);
    } catch (...) {
      failure[static_cast<size_t>(t)] = std::current_exception();
    }
  };
  const int workers = std::min(thread_cap(), trials);
  if (workers <= 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int t = w; t < trials; t += workers) run_trial(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (int t = 0; t < trials; ++t) {
    if (failure[static_cast<size_t>(t)]) std::rethrow_exception(failure[static_cast<size_t>(t)]);
  }

  est.sum_rate.assign(grid.size(), 0.0);
  for (int t = 0; t < trials; ++t) {
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      est.sum_rate[gi] += per_trial[static_cast<size_t>(t)][gi];
    }
    est.certified_trials += certified[static_cast<size_t>(t)];
  }
  for (double& v : est.sum_rate) v /= trials;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    if (!window[gi]) continue;
    const double x = 0.5 * std::log(grid[gi]);
    sx += x;
    sy += est.sum_rate[gi];
    sxx += x * x;
    sxy += x * est.sum_rate[gi];
    ++n;
  }
  est.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return est;
}

}  // namespace dof::ssa
