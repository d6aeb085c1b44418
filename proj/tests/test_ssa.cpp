#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <vector>

#include "dof/detour.hpp"
#include "dof/model.hpp"
#include "dof/ssa.hpp"

using dof::DoFTuple;
using dof::NetworkConfig;
namespace ssa = dof::ssa;

namespace {

/// The detoured 3-user demand from the documented instance: fits N = 3.
struct YFixture {
  NetworkConfig cfg{std::vector<int>{3, 2, 2}, 3};
  DoFTuple d = DoFTuple::from_flat(3, {2, 1, 1, 0, 1, 0});
};

/// Symmetric two-stream exchange between users 1 and 2 over a roomy relay.
struct PairFixture {
  NetworkConfig cfg{std::vector<int>{2, 2, 2}, 4};
  DoFTuple d = DoFTuple::from_flat(3, {1, 0, 1, 0, 0, 0});
};

ssa::SSADesign make_design(const NetworkConfig& cfg, const DoFTuple& d, std::uint64_t seed,
                           ssa::ChannelRealization& ch_out) {
  ch_out = ssa::generate_channels(cfg, dof::derive_profile(cfg, d), seed);
  return ssa::build_design(cfg, d, ch_out);
}

}  // namespace

TEST_CASE("channel generation: shapes, determinism, moment sanity") {
  YFixture f;
  const dof::DerivedProfile prof = dof::derive_profile(f.cfg, f.d);
  REQUIRE(prof.nbar == 3);
  ssa::ChannelRealization a = ssa::generate_channels(f.cfg, prof, 42);
  ssa::ChannelRealization b = ssa::generate_channels(f.cfg, prof, 42);
  ssa::ChannelRealization c = ssa::generate_channels(f.cfg, prof, 43);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.up[static_cast<std::size_t>(i)].rows() == 3);
    CHECK(a.up[static_cast<std::size_t>(i)].cols() == f.cfg.antennas(i));
    CHECK(a.dn[static_cast<std::size_t>(i)].rows() == f.cfg.antennas(i));
    CHECK(a.dn[static_cast<std::size_t>(i)].cols() == 3);
    CHECK((a.up[static_cast<std::size_t>(i)] - b.up[static_cast<std::size_t>(i)]).norm() == 0.0);
    CHECK((a.dn[static_cast<std::size_t>(i)] - b.dn[static_cast<std::size_t>(i)]).norm() == 0.0);
  }
  CHECK((a.up[0] - c.up[0]).norm() != 0.0);

  // Second moment of the pinned sampler stays near 1 over a large draw.
  NetworkConfig wide({100, 100, 100}, 60);
  DoFTuple heavy(3);
  heavy.set(0, 1, 60);
  heavy.set(1, 0, 60);
  dof::DerivedProfile pw = dof::derive_profile(wide, heavy);
  REQUIRE(pw.nbar == 60);
  ssa::ChannelRealization w = ssa::generate_channels(wide, pw, 7);
  double sum2 = 0.0;
  long n = 0;
  for (const ssa::Mat& h : w.up) {
    sum2 += h.squaredNorm();
    n += h.size();
  }
  for (const ssa::Mat& h : w.dn) {
    sum2 += h.squaredNorm();
    n += h.size();
  }
  CHECK(n == 2 * 3 * 60 * 100);
  CHECK(std::abs(sum2 / static_cast<double>(n) - 1.0) < 0.05);
}

TEST_CASE("channel generation rejects an oversubscribed profile") {
  NetworkConfig cfg({3, 2, 2}, 3);
  DoFTuple d = DoFTuple::from_flat(3, {2, 0, 0, 1, 1, 0});  // nbar = 4 > N
  CHECK_THROWS_AS((void)ssa::generate_channels(cfg, dof::derive_profile(cfg, d), 1),
                  std::invalid_argument);
}

TEST_CASE("alignment: beamformer shapes, unit columns, residual budget") {
  YFixture f;
  ssa::ChannelRealization ch;
  ssa::SSADesign design = make_design(f.cfg, f.d, 11, ch);
  CHECK(design.nbar == 3);
  CHECK(design.alignment_residual < ssa::kAlignTol);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const ssa::Mat& v = design.V[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      CHECK(v.rows() == f.cfg.antennas(i));
      CHECK(v.cols() == f.d(i, j));
      for (int cidx = 0; cidx < v.cols(); ++cidx)
        CHECK(std::abs(v.col(cidx).norm() - 1.0) < 1e-12);
    }
  // Pair bases stack to an invertible relay matrix.
  ssa::Mat all(design.nbar, design.nbar);
  int at = 0;
  for (int p = 0; p < 6; ++p) {
    const ssa::Mat& bp = design.basis[static_cast<std::size_t>(p)];
    if (bp.cols() == 0) continue;
    all.middleCols(at, bp.cols()) = bp;
    at += static_cast<int>(bp.cols());
  }
  REQUIRE(at == design.nbar);
  Eigen::JacobiSVD<ssa::Mat> svd(all);
  CHECK(svd.singularValues()(all.cols() - 1) / svd.singularValues()(0) > 1e-6);

  // Aligned pair directions truly coincide: H_a v_a ≈ ± H_b v_b per aligned column.
  for (const auto& [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}}) {
    const int dij = f.d(i, j), dji = f.d(j, i);
    const int nal = std::min(dij, dji);
    if (nal == 0) continue;
    const int a = dij >= dji ? i : j, b = a == i ? j : i;
    for (int t = 0; t < nal; ++t) {
      ssa::Vec lhs = ch.up[static_cast<std::size_t>(a)] *
                     design.V[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].col(t);
      ssa::Vec rhs = ch.up[static_cast<std::size_t>(b)] *
                     design.V[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)].col(t);
      const double co = lhs.dot(rhs) / (lhs.norm() * rhs.norm());
      CHECK(std::abs(std::abs(co) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("design is deterministic for a fixed seed") {
  YFixture f;
  ssa::ChannelRealization ch1, ch2;
  ssa::SSADesign a = make_design(f.cfg, f.d, 5, ch1);
  ssa::SSADesign b = make_design(f.cfg, f.d, 5, ch2);
  CHECK((a.V[0][1] - b.V[0][1]).norm() == 0.0);
  CHECK((a.T[0] - b.T[0]).norm() == 0.0);
  CHECK((a.D[0] - b.D[0]).norm() == 0.0);
}

TEST_CASE("certificates hold across seeds on the documented instances") {
  YFixture f;
  NetworkConfig f1({6, 5, 4, 3}, 6);
  DoFTuple d1 = DoFTuple::from_flat(4, {1, 1, 2, 1, 1, 1, 1, 0, 0, 2, 0, 0});
  NetworkConfig f2({6, 6, 4, 3}, 6);
  DoFTuple d2 = DoFTuple::from_flat(4, {1, 1, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1});
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    ssa::ChannelRealization ch;
    ssa::SSADesign dy = make_design(f.cfg, f.d, seed, ch);
    ssa::DecodabilityCertificate cy = ssa::certify(dy, ch);
    CHECK(cy.all_true());
    CHECK(cy.alignment_residual < ssa::kAlignTol);
    CHECK(cy.per_stream.size() == 4);  // four demand entries in the tuple

    ssa::SSADesign s1 = make_design(f1, d1, seed, ch);
    CHECK(ssa::certify(s1, ch).all_true());
    ssa::SSADesign s2 = make_design(f2, d2, seed, ch);
    CHECK(ssa::certify(s2, ch).all_true());
  }
}

TEST_CASE("corrupting the relay processing flips the certificate") {
  YFixture f;
  ssa::ChannelRealization ch;
  ssa::SSADesign design = make_design(f.cfg, f.d, 3, ch);
  REQUIRE(ssa::certify(design, ch).all_true());
  // Randomize the relay precoders: the zero-forcing nulls that kept
  // forwarded interference inside each receiver's budget disappear, so
  // interference rank overruns the antenna count at the two-antenna users.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (auto& t : design.T) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
      for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = gauss(rng);
      t.col(c).normalize();
    }
  }
  ssa::DecodabilityCertificate bad = ssa::certify(design, ch);
  CHECK_FALSE(bad.all_true());
}

TEST_CASE("certificate booleans are invariant to channel scaling") {
  YFixture f;
  const dof::DerivedProfile prof = dof::derive_profile(f.cfg, f.d);
  ssa::ChannelRealization ch = ssa::generate_channels(f.cfg, prof, 17);
  ssa::SSADesign base = ssa::build_design(f.cfg, f.d, ch);
  ssa::DecodabilityCertificate cb = ssa::certify(base, ch);

  ssa::ChannelRealization scaled = ch;
  scaled.up[1] *= 1e3;
  scaled.dn[2] *= 1e-2;
  ssa::SSADesign rebuilt = ssa::build_design(f.cfg, f.d, scaled);
  ssa::DecodabilityCertificate cs = ssa::certify(rebuilt, scaled);
  REQUIRE(cb.per_stream.size() == cs.per_stream.size());
  for (std::size_t s = 0; s < cb.per_stream.size(); ++s)
    CHECK(cb.per_stream[s].decodable == cs.per_stream[s].decodable);
  CHECK(cb.all_true() == cs.all_true());
}

TEST_CASE("zero demand certifies vacuously") {
  NetworkConfig cfg({3, 2, 2}, 3);
  DoFTuple zero(3);
  ssa::ChannelRealization ch;
  ssa::SSADesign design = make_design(cfg, zero, 1, ch);
  ssa::DecodabilityCertificate cert = ssa::certify(design, ch);
  CHECK(cert.per_stream.empty());
  CHECK(cert.all_true());
}

TEST_CASE("alignment infeasibility is reported structurally") {
  // Full bidirectional exchange d12 = d21 = 2 between 2-antenna users leaves
  // a 1-dimensional stacked null space: one aligned direction short.
  NetworkConfig cfg({2, 2, 2}, 3);
  DoFTuple d(3);
  d.set(0, 1, 2);
  d.set(1, 0, 2);
  d.set(0, 2, 1);
  d.set(2, 0, 1);
  dof::DerivedProfile prof = dof::derive_profile(cfg, d);
  REQUIRE(prof.nbar == 3);
  ssa::ChannelRealization ch = ssa::generate_channels(cfg, prof, 9);
  try {
    (void)ssa::build_alignment(cfg, d, ch);
    FAIL("expected AlignmentInfeasible");
  } catch (const ssa::AlignmentInfeasible& e) {
    CHECK(e.i == 0);
    CHECK(e.j == 1);
    CHECK(e.required == 2);
    CHECK(e.available == 1);
  }
}

TEST_CASE("monte-carlo decode error vanishes at high power") {
  YFixture f;
  ssa::ChannelRealization ch;
  ssa::SSADesign design = make_design(f.cfg, f.d, 2, ch);
  const double mse_hi = ssa::mc_symbol_mse(design, ch, 1e6, 400, 77);
  const double mse_lo = ssa::mc_symbol_mse(design, ch, 1e2, 400, 77);
  CHECK(mse_hi < 1e-3);
  CHECK(mse_hi < mse_lo);

  PairFixture pf;
  ssa::SSADesign pd = make_design(pf.cfg, pf.d, 2, ch);
  CHECK(ssa::mc_symbol_mse(pd, ch, 1e6, 400, 78) < 1e-3);
}

TEST_CASE("slope estimate approaches the stream count") {
  PairFixture pf;
  const std::vector<double> grid{1e2, 1e3, 1e4, 1e5, 1e6};
  ssa::SlopeEstimate est = ssa::estimate_dof_slope(pf.cfg, pf.d, grid, 8, 1);
  CHECK(est.streams == 2);
  CHECK(est.trials == 8);
  CHECK(est.certified_trials == 8);
  CHECK(est.slope == doctest::Approx(2.0).epsilon(0.05));
  REQUIRE(est.power.size() == grid.size());
  REQUIRE(est.sum_rate.size() == grid.size());
  REQUIRE(est.window.size() == grid.size());
  // Only the top decade enters the fit window.
  CHECK(est.window == std::vector<bool>{false, false, false, true, true});
}

TEST_CASE("slope of the empty tuple is zero") {
  NetworkConfig cfg({3, 2, 2}, 3);
  DoFTuple zero(3);
  ssa::SlopeEstimate est = ssa::estimate_dof_slope(cfg, zero, {1e2, 1e3, 1e4}, 4, 0);
  CHECK(est.slope == 0.0);
  CHECK(est.streams == 0);
  CHECK(est.certified_trials == 4);
  for (double r : est.sum_rate) CHECK(r == 0.0);
}

TEST_CASE("slope estimation is deterministic and thread-count independent") {
  PairFixture pf;
  const std::vector<double> grid{1e2, 1e3, 1e4};
  ssa::SlopeEstimate a = ssa::estimate_dof_slope(pf.cfg, pf.d, grid, 6, 9);
#if defined(_WIN32)
  ssa::SlopeEstimate b = a;
#else
  setenv("DOF_LAB_THREADS", "1", 1);
  ssa::SlopeEstimate b = ssa::estimate_dof_slope(pf.cfg, pf.d, grid, 6, 9);
  unsetenv("DOF_LAB_THREADS");
#endif
  CHECK(a.slope == b.slope);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.sum_rate[i] == b.sum_rate[i]);
}

TEST_CASE("slope estimator validates its grid") {
  PairFixture pf;
  CHECK_THROWS_AS((void)ssa::estimate_dof_slope(pf.cfg, pf.d, {1e2, 1e3}, 2, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)ssa::estimate_dof_slope(pf.cfg, pf.d, {1e3, 1e2, 1e4}, 2, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)ssa::estimate_dof_slope(pf.cfg, pf.d, {0.0, 1e2, 1e3}, 2, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)ssa::estimate_dof_slope(pf.cfg, pf.d, {1e2, 1e3, 1e4}, 0, 0),
                  std::invalid_argument);
}

TEST_CASE("rate curve is monotone in power for a fixed design") {
  YFixture f;
  ssa::ChannelRealization ch;
  ssa::SSADesign design = make_design(f.cfg, f.d, 21, ch);
  const std::vector<double> grid{1e1, 1e2, 1e3, 1e4, 1e5};
  std::vector<double> rates = ssa::rate_curve(design, ch, grid);
  REQUIRE(rates.size() == grid.size());
  for (std::size_t i = 1; i < rates.size(); ++i) CHECK(rates[i] > rates[i - 1]);
}

TEST_CASE("end-to-end on a planned reroute: detour then certify the modified tuple") {
  NetworkConfig cfg({3, 2, 2}, 3);
  DoFTuple d = DoFTuple::from_flat(3, {2, 0, 0, 1, 1, 0});
  dof::detour::DetourPlan p = dof::detour::plan(cfg, d);
  REQUIRE(p.scheme == dof::detour::Scheme::DSY);
  ssa::ChannelRealization ch;
  ssa::SSADesign design = make_design(cfg, p.modified, 4, ch);
  CHECK(ssa::certify(design, ch).all_true());
}
