#pragma once

// The explore-then-exploit recommendation system and its baselines. A run
// drives an Environment for a fixed number of steps; all phases stop early
// when the step budget runs out.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "latrec/model.hpp"
#include "latrec/rng.hpp"

namespace latrec {

enum class Strategy { kRecsys, kRandom, kUserUser, kItemItem, kHeuristic };

const char* to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
inline constexpr Strategy kAllStrategies[] = {Strategy::kRecsys, Strategy::kRandom, Strategy::kUserUser,
                                              Strategy::kItemItem, Strategy::kHeuristic};

struct AlgParams {
  std::uint32_t r_U = 0;
  std::uint32_t r_I = 0;
  std::uint64_t I_usr = 0;
  std::uint64_t I_rep = 0;
  std::uint64_t I_exp = 0;
  double ell = 1;
  bool item_clust = false;

  friend bool operator==(const AlgParams&, const AlgParams&) = default;
};

/// Target number of item types to learn, clamped to [1, q_I].
double choose_ell(double N, double q_U, double q_I, double T);
AlgParams no_item_clust_params(std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T);
AlgParams item_clust_params(std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T);
/// Picks item clustering exactly when R_I(T) < R_U(T).
AlgParams select_params(std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T);
/// Budgets a strategy uses for horizon T. `random` gets all-zero budgets.
AlgParams params_for(Strategy s, std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T);

struct Partition {
  std::vector<std::uint32_t> cluster_of;        // per user
  std::vector<std::vector<UserId>> clusters;    // label -> members, ascending

  std::size_t size() const noexcept { return clusters.size(); }
  std::size_t min_cluster_size() const;
};

Partition trivial_partition(std::uint32_t n_users);
/// Groups users by exact equality of their rating vectors; labels follow
/// first appearance in user order.
Partition partition_by_feedback(const std::vector<std::vector<Rating>>& feedback);

/// Cluster x representative preferences; 0 marks "not rated".
using ClusterPrefs = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct ItemClusters {
  // For each exploration item, the representatives (by index into the rep
  // list) whose cluster S_j contains it. Empty for items nobody rated.
  std::vector<std::vector<std::uint32_t>> matches;
  // Cluster preferences recorded per exploration item: (cluster, rating).
  std::vector<std::vector<std::pair<std::uint32_t, Rating>>> item_prefs;
};

/// Per-cluster exploitable item lists, ascending by id.
struct ExploitSets {
  std::vector<std::uint32_t> set_of_user;
  std::vector<std::vector<ItemId>> sets;

  std::span<const ItemId> items(UserId u) const { return sets[set_of_user[u]]; }
};

/// Each phase runs until it is done or env.t() reaches `deadline`.
Partition user_clustering(Environment& env, std::span<const ItemId> I_usr, std::uint32_t r_U,
                          std::uint32_t deadline);
ClusterPrefs find_prefs(Environment& env, std::span<const ItemId> I_rep, const Partition& partition,
                        std::uint32_t deadline);
ItemClusters item_clustering(Environment& env, std::span<const ItemId> I_rep, std::span<const ItemId> I_exp,
                             const Partition& partition, const ClusterPrefs& prefs, std::uint32_t r_I,
                             CounterRng& rng, std::uint32_t deadline);
ExploitSets exploit_sets(std::span<const ItemId> I_rep, std::span<const ItemId> I_exp, const Partition& partition,
                         const ClusterPrefs& prefs, const ItemClusters& clusters);
void exploit(Environment& env, const ExploitSets& sets, std::uint32_t deadline);

/// Steps of the exploration phases when nothing is truncated.
std::uint64_t explore_length(const AlgParams& params, std::uint32_t n_users, std::size_t min_cluster_size);

struct RunDiagnostics {
  Strategy strategy = Strategy::kRandom;
  AlgParams params;
  std::uint32_t start_t = 0;      // env.t() when the run began
  std::uint32_t explore_end = 0;  // env.t() when exploration finished or was cut off
  bool truncated = false;         // exploration hit the step limit
  std::uint64_t expected_explore_steps = 0;
  std::vector<ItemId> I_usr, I_rep, I_exp;
  Partition partition;
  ClusterPrefs prefs;
  ItemClusters item_clusters;
  ExploitSets sets;
};

/// Runs `strategy` with budgets for horizon `T` for `steps` (<= T) steps on
/// the given environment.
RunDiagnostics run_strategy(Environment& env, Strategy strategy, std::uint32_t T, std::uint32_t steps,
                            CounterRng rng);

Trace run(const ModelConfig& config, std::uint32_t T, Strategy strategy, std::uint64_t alg_seed);

/// Cumulative interval ends 2, 6, 14, ... clipped to T_max.
std::vector<std::uint32_t> anytime_schedule(std::uint32_t T_max);
/// Restarts the fixed-horizon strategy on intervals of length 2, 4, 8, ...
/// against the same environment.
std::vector<RunDiagnostics> run_anytime_on(Environment& env, Strategy strategy, std::uint32_t T_max,
                                           CounterRng rng);
Trace run_anytime(const ModelConfig& config, std::uint32_t T_max, Strategy strategy, std::uint64_t alg_seed);

/// regret[t-1] = dislikes per user through step t.
std::vector<double> regret_of(const Trace& trace);

}  // namespace latrec
