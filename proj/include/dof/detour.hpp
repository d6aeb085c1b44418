#pragma once

#include <string>
#include <vector>

#include "dof/model.hpp"

/// Demand rerouting around oversubscribed 3-node cycles: when the derived
/// relay requirement nbar exceeds N, part of one cycle edge's demand is sent
/// over the 2-hop alternative path so the modified tuple fits the relay.
namespace dof::detour {

enum class Scheme {
  DirectSSA,   ///< nbar ≤ N already; no rerouting
  DSY,         ///< 3-user cycle reroute
  DS1,         ///< 4-user single-cycle reroute
  DS2,         ///< 4-user double-cycle reroute (split λ = β + γ)
  Unresolved,  ///< no admissible reroute found; evidence in rationale
};

[[nodiscard]] std::string to_string(Scheme scheme);

struct DetourPlan {
  Scheme scheme = Scheme::DirectSSA;
  int lambda = 0;  ///< nbar − N on entry (0 for DirectSSA)
  int beta = 0;    ///< DS2 first-cycle share; else 0
  int gamma = 0;   ///< DS2 second-cycle share; else 0
  /// Demand moved off edge (from → to) onto the path from → via → to.
  struct Reroute {
    int from = -1, to = -1, via = -1, amount = 0;
  };
  std::vector<Reroute> reroutes;
  DoFTuple modified;
  RoutingTable routing;  ///< delivers the ORIGINAL demand
  std::string rationale;
};

/// Full planning pipeline: bound check, profile derivation, scheme dispatch,
/// candidate search and ranking, routing construction. Never throws on
/// unresolvable inputs — including outer-bound-infeasible ones — and instead
/// returns Unresolved with per-candidate evidence in the rationale.
[[nodiscard]] DetourPlan plan(const NetworkConfig& cfg, const DoFTuple& d);

/// Scheme executors. Each selects the cycle edge per the documented ranking
/// (maximize minimum remaining slack; prefer edges not incident to user 1;
/// then lexicographic), re-checks the bounds on the modified tuple, and
/// builds the routing table. lambda = 0 yields the identity transformation.
[[nodiscard]] DetourPlan apply_ds_y(const NetworkConfig& cfg, const DoFTuple& d, int lambda);
[[nodiscard]] DetourPlan apply_ds1(const NetworkConfig& cfg, const DoFTuple& d, int lambda);
[[nodiscard]] DetourPlan apply_ds2(const NetworkConfig& cfg, const DoFTuple& d, int lambda);

}  // namespace dof::detour
