#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dof/model.hpp"

/// Numerical signal-space alignment: beamformer construction over random
/// channel realizations, per-stream decodability certificates, and the
/// finite-power rate-slope estimator.
namespace dof::ssa {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Default relative singular-value threshold for rank decisions.
inline constexpr double kRankTol = 1e-8;
/// Alignment residual budget asserted by tests.
inline constexpr double kAlignTol = 1e-9;

// ===== Channels ==========================================================

/// One random channel draw: uplink H_up[i] is nbar × M_i (all transmit
/// antennas), downlink H_dn[i] is M_i × nbar. Deterministic given the seed;
/// entries i.i.d. standard normal via a pinned sampler.
struct ChannelRealization {
  int users = 0;
  int nbar = 0;
  std::vector<Mat> up;
  std::vector<Mat> dn;
  std::uint64_t seed = 0;
};

[[nodiscard]] ChannelRealization generate_channels(const NetworkConfig& cfg,
                                                   const DerivedProfile& profile,
                                                   std::uint64_t seed);

// ===== Errors ============================================================

/// Pairwise alignment is dimensionally impossible: the stacked null space
/// offers fewer directions than the pair's bidirectional minimum needs.
struct AlignmentInfeasible : std::runtime_error {
  AlignmentInfeasible(int i_, int j_, int required_, int available_);
  int i, j, required, available;
};

/// A relay precoder column is forced into a null space with no remaining
/// capacity, so the foreign receiver cannot be protected.
struct RelayZFInfeasible : std::runtime_error {
  RelayZFInfeasible(int user_, int deficit_);
  int user, deficit;
};

// ===== Design ============================================================

/// Unordered-pair index into the 6-slot per-pair arrays: {01,02,03,12,13,23}.
[[nodiscard]] int pair_index(int i, int j);

struct SSADesign {
  int users = 0;
  int nbar = 0;
  DoFTuple d;  ///< the (already detoured) tuple this design realizes

  /// Transmit beamformers V[i][j]: M_i × d(i,j), unit-norm columns.
  std::array<std::array<Mat, kMaxUsers>, kMaxUsers> V;
  /// Per-pair aligned relay basis (nbar × dstar) and relay combiner
  /// D (dstar × nbar, orthonormal rows), relay precoder T (nbar × dstar).
  std::array<Mat, 6> basis, D, T;
  /// Per-column relay-side null assignments: users whose downlink the
  /// column is orthogonal to (per pair, per column).
  std::array<std::vector<std::vector<int>>, 6> null_sets;
  /// Per-user receive filters, one row per desired stream (filled by
  /// certify); rows ordered by (source, stream index) ascending.
  std::array<Mat, kMaxUsers> U;

  double alignment_residual = 0.0;  ///< worst relative off-span residual
  [[nodiscard]] bool pair_active(int i, int j) const;
  [[nodiscard]] int dstar(int i, int j) const;
};

/// Build transmit beamformers and aligned relay bases. Aligned directions and
/// free extension columns are chosen inside their admissible subspaces by a
/// conditioning sweep (maximizing each column's angle to the span of the
/// rest), keeping the combined basis well separated. Throws
/// AlignmentInfeasible when a pair lacks null-space dimensions.
[[nodiscard]] SSADesign build_alignment(const NetworkConfig& cfg, const DoFTuple& d,
                                        const ChannelRealization& ch);

/// Add relay combiners and precoders. Precoder columns are forced into
/// downlink null spaces exactly where a foreign receiver has no spare
/// dimensions (lazy budget rule), then re-picked within their admissible
/// subspaces to maximize the smallest end-to-end downlink gain. Throws
/// RelayZFInfeasible when a forced nulling has no capacity.
void build_relay_processing(SSADesign& design, const ChannelRealization& ch);

// ===== Certification =====================================================

struct StreamVerdict {
  int source = -1, destination = -1;
  bool decodable = false;
};

struct DecodabilityCertificate {
  std::vector<StreamVerdict> per_stream;  ///< one entry per (i,j) with d>0
  double alignment_residual = 0.0;
  double min_singular_ratio = 1.0;  ///< worst retained/largest ratio seen
  std::optional<double> dof_slope_estimate;
  [[nodiscard]] bool all_true() const;
};

/// Per-user rank tests: interference has rank r, stacking desired columns
/// keeps rank additive, and desired + r fits in M_i. Self streams are
/// excluded (the receiver knows its own symbols and subtracts them). Fills
/// design.U with interference-nulling receive filters. rank_tol is relative
/// to each stacked matrix's largest singular value.
[[nodiscard]] DecodabilityCertificate certify(SSADesign& design, const ChannelRealization& ch,
                                              double rank_tol = kRankTol);

/// build_alignment followed by build_relay_processing on the given channels.
[[nodiscard]] SSADesign build_design(const NetworkConfig& cfg, const DoFTuple& d,
                                     const ChannelRealization& ch);

/// Monte-Carlo decode check: transmit random unit-power symbols at power P
/// through the full linear chain (relay noise included) and measure the
/// worst per-stream mean squared error after filtering and normalization.
[[nodiscard]] double mc_symbol_mse(const SSADesign& design, const ChannelRealization& ch,
                                   double power, int symbols, std::uint64_t seed);

// ===== Rate slope ========================================================

struct SlopeEstimate {
  double slope = 0.0;
  int streams = 0;                ///< certified stream count
  std::vector<double> power;      ///< the grid
  std::vector<double> sum_rate;   ///< mean sum rate per grid point
  std::vector<bool> window;       ///< true where the point entered the fit
  int trials = 0;
  int certified_trials = 0;       ///< trials whose certificate was all-true
};

/// Per-design sum-rate curve over the power grid. Per stream, the rate is
/// 0.5·log(1 + min(uplink SINR, downlink SINR)) with transmit power split
/// equally over each user's streams and relay power over all streams.
[[nodiscard]] std::vector<double> rate_curve(const SSADesign& design,
                                             const ChannelRealization& ch,
                                             const std::vector<double>& grid);

/// Average rate_curve over `trials` channel realizations (seeds derived from
/// `seed`), then least-squares fit sum-rate against 0.5·log P over the top
/// decade of the grid. Throws std::invalid_argument for grids with fewer
/// than 3 points or non-ascending powers.
[[nodiscard]] SlopeEstimate estimate_dof_slope(const NetworkConfig& cfg, const DoFTuple& d,
                                               const std::vector<double>& grid, int trials,
                                               std::uint64_t seed);

}  // namespace dof::ssa
