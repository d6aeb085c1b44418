#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "dof/model.hpp"

/// Exact integer evaluation of the demand-region outer bounds for 3- and
/// 4-user relay networks, the closed-form total-demand cap with its
/// derivation-chain self-check, and small-instance region enumeration.
namespace dof::bounds {

// ===== Reports ===========================================================

/// One violated inequality instance: which family, the two sides, and the
/// witnessing user assignment (0-based sorted labels, -1 padded).
struct Violation {
  std::string id;
  long long lhs = 0;
  long long rhs = 0;
  std::array<int, kMaxUsers> assign{-1, -1, -1, -1};
};

struct BoundReport {
  bool feasible = true;
  std::vector<Violation> violations;  ///< exhaustive, deterministic order
  long long total_dof = 0;
  long long total_dof_cap = 0;
};

// ===== Checks ============================================================

/// Evaluate every 3-user inequality instance (all ordered assignments) plus
/// the total-demand cap. Throws std::invalid_argument unless cfg.users()==3.
[[nodiscard]] BoundReport check_three_user(const NetworkConfig& cfg, const DoFTuple& d);

/// Evaluate every 4-user inequality instance plus the total cap.
/// Throws std::invalid_argument unless cfg.users()==4.
[[nodiscard]] BoundReport check_four_user(const NetworkConfig& cfg, const DoFTuple& d);

/// Dispatch on cfg.users().
[[nodiscard]] BoundReport check(const NetworkConfig& cfg, const DoFTuple& d);

[[nodiscard]] inline bool feasible(const NetworkConfig& cfg, const DoFTuple& d) {
  return check(cfg, d).feasible;
}

/// Visit every inequality instance as (id, lhs, rhs, assign), in the same
/// deterministic order used by the checkers. The total bound is visited last.
using ConstraintVisitor =
    std::function<void(const std::string&, long long, long long,
                       const std::array<int, kMaxUsers>&)>;
void for_each_constraint(const NetworkConfig& cfg, const DoFTuple& d,
                         const ConstraintVisitor& visit);

/// Minimum of (rhs − lhs) over all inequality instances. Negative iff the
/// tuple is infeasible.
[[nodiscard]] long long min_slack(const NetworkConfig& cfg, const DoFTuple& d);

// ===== Total-demand cap ==================================================

/// Closed-form cap min(2N, ΣM, 2(ΣM − M_1)). Also recomputes the cap through
/// the derivation chain (per-node caps plus the doubled pair cap) and throws
/// std::logic_error if the two disagree — an internal-consistency failure.
[[nodiscard]] long long total_dof_cap(const NetworkConfig& cfg);

// ===== Region enumeration ================================================

/// All integral tuples with every coordinate ≤ cap that satisfy the
/// applicable bound system, in lexicographic flat order. Throws
/// std::invalid_argument if the raw search space exceeds 10^8 points.
[[nodiscard]] std::vector<DoFTuple> enumerate_region(const NetworkConfig& cfg, int cap);

}  // namespace dof::bounds
