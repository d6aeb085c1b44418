#pragma once

#include <array>
#include <string>

#include <json.hpp>

#include "dof/bounds.hpp"
#include "dof/detour.hpp"
#include "dof/model.hpp"
#include "dof/ssa.hpp"

/// JSON parsing and serialization for instances and reports. All output uses
/// ordered JSON so identical runs print byte-identical documents.
namespace dof::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

// ===== Instance input ====================================================

/// A parsed problem instance. Users are re-indexed into the canonical
/// non-increasing antenna order; `label` maps sorted position → position in
/// the input file, and the demand matrix is permuted to match.
struct Instance {
  NetworkConfig cfg;
  DoFTuple d;
};

/// Parse {"K": int, "M": [int...], "N": int, "d": [[int...]...]} where d is
/// the K×K demand matrix (zero diagonal) in input order. "d" may be omitted
/// (zero demand). Throws std::invalid_argument with a diagnostic on any
/// schema violation.
[[nodiscard]] Instance parse_instance(const json& j);

/// parse_instance after reading and parsing the file at `path`.
[[nodiscard]] Instance load_instance(const std::string& path);

// ===== Report serialization ==============================================

/// Tool version plus the numeric tolerances that govern certificates.
[[nodiscard]] json meta_json(double rank_tol = ssa::kRankTol);

/// Canonicalized configuration: sorted antenna counts, relay antennas, and
/// the permutation back to input order.
[[nodiscard]] json config_json(const NetworkConfig& cfg);

/// K×K demand matrix (canonical order).
[[nodiscard]] json tuple_json(const DoFTuple& d);

[[nodiscard]] json to_json(const bounds::BoundReport& report);
[[nodiscard]] json to_json(const detour::DetourPlan& plan);
[[nodiscard]] json to_json(const ssa::DecodabilityCertificate& cert);
[[nodiscard]] json to_json(const ssa::SlopeEstimate& est);

}  // namespace dof::io
