#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

/// Core network model: configurations, demand tuples, derived demand
/// profiles, and routing tables for 3- and 4-user MIMO relay networks.
namespace dof {

inline constexpr int kMaxUsers = 4;

// ===== NetworkConfig =====================================================

/// Antenna configuration of a K-user single-relay network. Users are kept
/// sorted by non-increasing antenna count; the permutation back to the
/// caller's original labels is recorded.
class NetworkConfig {
 public:
  /// Construct from per-user antenna counts (any order) and the relay count.
  /// Throws std::invalid_argument unless K ∈ {3,4}, all counts ≥ 1.
  NetworkConfig(const std::vector<int>& antennas, int relay_antennas);

  [[nodiscard]] int users() const { return k_; }
  [[nodiscard]] int relay() const { return n_; }
  /// Antennas of the user at sorted position i (non-increasing order).
  [[nodiscard]] int antennas(int i) const { return m_.at(static_cast<size_t>(i)); }
  /// Original (input-order) label of the user at sorted position i.
  [[nodiscard]] int original_label(int i) const { return label_.at(static_cast<size_t>(i)); }
  /// Sum of all user antenna counts.
  [[nodiscard]] int antenna_sum() const;
  /// True if the input order already was non-increasing.
  [[nodiscard]] bool identity_order() const;

 private:
  int k_ = 0;
  int n_ = 0;
  std::array<int, kMaxUsers> m_{};
  std::array<int, kMaxUsers> label_{};
};

// ===== DoFTuple ==========================================================

/// Integral demand matrix d, where d(i,j) is the stream count user i sends
/// to user j through the relay. Diagonal is identically zero.
class DoFTuple {
 public:
  DoFTuple() = default;
  explicit DoFTuple(int users);

  /// Build from the flattened row-major off-diagonal order, e.g. for K=3:
  /// (d12, d13, d21, d23, d31, d32). Throws on size/negativity errors.
  static DoFTuple from_flat(int users, const std::vector<int>& flat);

  [[nodiscard]] int users() const { return k_; }
  [[nodiscard]] int operator()(int i, int j) const {
    return d_[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  /// Replace one entry (i ≠ j, value ≥ 0). Throws on violation.
  void set(int i, int j, int value);
  /// Add a (possibly negative) delta to one entry; result must stay ≥ 0.
  void add(int i, int j, int delta);

  [[nodiscard]] std::vector<int> flat() const;
  /// Total demand Σ_{i≠j} d(i,j).
  [[nodiscard]] long long total() const;

  bool operator==(const DoFTuple& o) const = default;

 private:
  int k_ = 0;
  std::array<std::array<int, kMaxUsers>, kMaxUsers> d_{};
};

// ===== DerivedProfile ====================================================

/// Structural form taken by the relay-space requirement when it exceeds the
/// relay's antennas. NoneExceeded means nbar ≤ N (no detour needed).
enum class CycleForm {
  NoneExceeded,
  YCycleForward,          ///< 3 users, oversubscribed cycle 1→2→3→1
  YCycleReverse,          ///< 3 users, oversubscribed cycle 1→3→2→1
  FourUserSingleCycle,    ///< 4 users, one 3-node cycle (excluded node l)
  FourUserDoubleCycle,    ///< 4 users, two 3-node cycles sharing one edge
  OversubscribedAcyclic,  ///< oversubscribed but the pair-max tournament is acyclic
};

[[nodiscard]] std::string to_string(CycleForm form);

/// Pairwise maxima, per-user used-antenna counts, required relay dimension,
/// and the cycle classification of a demand tuple.
struct DerivedProfile {
  int users = 0;
  /// dstar[i][j] = max(d_ij, d_ji); symmetric, zero diagonal.
  std::array<std::array<int, kMaxUsers>, kMaxUsers> dstar{};
  /// mbar[i] = max(outgoing sum, incoming sum) at user i.
  std::array<int, kMaxUsers> mbar{};
  /// nbar = Σ over unordered pairs of dstar.
  int nbar = 0;
  CycleForm form = CycleForm::NoneExceeded;
  /// FourUserSingleCycle: the node outside the cycle.
  int excluded = -1;
  /// Oriented cycle nodes c0→c1→c2→c0 (Y forms and single-cycle form).
  std::array<int, 3> cycle{-1, -1, -1};
  /// FourUserDoubleCycle canonical labels: shared directed edge a→b; the two
  /// cycles are a→b→p→a and a→b→q→a with p < q.
  int shared_from = -1, shared_to = -1, via_first = -1, via_second = -1;
};

/// Compute the derived profile, classifying the oversubscription structure.
/// Direction ties (d_ij = d_ji) resolve to the forward (lower-index → higher-
/// index) direction. Throws std::invalid_argument on dimension mismatch.
[[nodiscard]] DerivedProfile derive_profile(const NetworkConfig& cfg, const DoFTuple& d);

// ===== RoutingTable ======================================================

/// Materialized delivery plan: which demand flows over which user path.
/// Paths list user nodes only (each hop traverses the relay).
struct RoutingTable {
  struct Entry {
    int source = -1;
    int destination = -1;
    std::vector<int> via_path;  ///< starts at source, ends at destination
    int streams = 0;            ///< positive
  };
  std::vector<Entry> entries;

  /// Total streams delivered from i to j across all paths.
  [[nodiscard]] long long delivered(int i, int j) const;
};

}  // namespace dof
