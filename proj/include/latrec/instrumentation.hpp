#pragma once

// Ground-truth trace audits. These read hidden types from the world and are
// measurement tools only; nothing here feeds back into an algorithm.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "latrec/algorithm.hpp"
#include "latrec/model.hpp"
#include "latrec/stats.hpp"

namespace latrec {

/// Per-recommendation classification. kNone means no bad event fired.
enum class BadEvent : std::uint8_t { kNone = 0, kB1 = 1, kB2 = 2, kB3 = 3, kB4 = 4 };

struct TraceStats {
  std::uint32_t n_users = 0;
  std::uint32_t horizon = 0;
  std::uint32_t s_I = 0;
  std::uint32_t s_U = 0;

  // Indexed by BadEvent; [0] counts recommendations that were not bad.
  std::array<std::uint64_t, 5> counts{};
  std::array<std::uint64_t, 5> disliked{};
  std::uint64_t bad = 0;

  // Recommendations where the user is the first of their type to rate the
  // item and fewer than s_I user types had rated it.
  std::uint64_t first_of_type_weak = 0;
  // Same, per user: first item of its type for that user while d < s_U.
  std::uint64_t first_item_type_weak_user = 0;

  std::uint64_t I_strong = 0;     // items rated by >= max(s_I, 1) user types
  std::uint64_t I_weak_mass = 0;  // sum of c over items with 0 < c < s_I
  std::uint64_t I_total = 0;      // items rated at all
  std::uint64_t weak_users = 0;   // users with d < s_U at the end (N * U_weak)
  std::uint32_t gamma_star = 0;   // min over users of final d
  std::uint32_t pi_star = 0;      // largest user-type multiplicity

  std::vector<std::uint32_t> d_final;
  // Row-major T x N classification, filled when requested.
  std::vector<BadEvent> events;

  std::uint64_t b1_b2() const { return counts[1] + counts[2]; }
  std::uint64_t b1_b3() const { return counts[1] + counts[3]; }
};

/// Replays the trace against ground truth. Counters seen at step t reflect
/// steps strictly before t; all users in one step see the same state.
/// Throws kWorldMismatch if the trace disagrees with the world.
TraceStats audit(const Trace& trace, const LatentWorld& world, std::uint32_t s_I, std::uint32_t s_U,
                 bool keep_events = false);

struct ConstraintCheck {
  int id = 0;
  bool applicable = true;
  bool pass = true;
  // lhs >= rhs is the asserted inequality. For constraint 1, lhs >= mid >= rhs.
  long double lhs = 0;
  long double mid = 0;
  long double rhs = 0;
};

struct ConstraintReport {
  std::array<ConstraintCheck, 5> checks;

  bool all_pass() const;
  /// 1-based ids of failing constraints.
  std::vector<int> failures() const;
};

ConstraintReport verify_constraints(const TraceStats& stats, std::uint32_t T, std::uint32_t N, std::uint32_t s_I,
                                    std::uint32_t s_U);
/// Throws kConstraintViolated naming the first failing constraint.
void require_constraints(const ConstraintReport& report);

struct CategoryRate {
  std::uint64_t count = 0;
  std::uint64_t disliked = 0;
  double rate = 0;  // NaN when count == 0
  Interval ci{0, 1};
};

/// Dislike rate among recommendations of each category, pooled over audits.
/// Index 0 is the "not bad" category.
std::array<CategoryRate, 5> empirical_bad_fraction(std::span<const TraceStats> stats, double z = 3.0);

struct ClusteringAudit {
  bool clustered = false;        // user clustering actually ran to completion
  bool partition_pure = true;    // no cluster mixes user types
  bool type_split = false;       // some user type spread over several clusters
  std::uint64_t items_classified = 0;
  std::uint64_t items_misclassified = 0;
  std::uint64_t exploit_recs = 0;
  std::uint64_t exploit_dislikes = 0;
  // Exploit recommendations of an item placed in a liked representative's
  // cluster although its type differs.
  std::uint64_t consumed_misclassified = 0;
  std::uint64_t exploit_dislikes_clean = 0;  // dislikes outside those
  std::uint64_t users_short = 0;             // users with |R_u| < horizon
};

ClusteringAudit audit_clustering(const RunDiagnostics& diag, const Environment& env, std::uint32_t horizon);

}  // namespace latrec
