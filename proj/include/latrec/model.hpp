#pragma once

// Generative latent-type preference model: users and items carry hidden
// types, and a user's rating of an item is the preference-matrix entry of the
// (user type, item type) pair.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "latrec/error.hpp"
#include "latrec/rng.hpp"

namespace latrec {

using UserId = std::uint32_t;
using ItemId = std::uint64_t;
using TypeId = std::uint32_t;
using Rating = std::int8_t;  // +1 like, -1 dislike

inline constexpr ItemId kNoItem = std::numeric_limits<ItemId>::max();

/// Dense q_U x q_I matrix of ±1 preferences.
using PrefMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct ModelConfig {
  std::uint32_t n_users = 1;
  std::uint32_t n_user_types = 1;
  std::uint32_t n_item_types = 1;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Hidden ground truth. User types and the preference matrix are drawn up
/// front; item types are a pure function of (seed, item id), materialized on
/// first use so that the sampled portion can be exported.
///
/// Types are 0-based: user types lie in [0, q_U), item types in [0, q_I).
class LatentWorld {
 public:
  static LatentWorld generate(const ModelConfig& config);

  /// Explicit world. Item types not assigned with assign_item_type() are
  /// drawn from the config's seed exactly as in a generated world.
  LatentWorld(const ModelConfig& config, std::vector<TypeId> user_type, PrefMatrix pref);

  const ModelConfig& config() const noexcept { return config_; }
  std::uint32_t n_users() const noexcept { return config_.n_users; }

  TypeId user_type(UserId u) const;
  std::span<const TypeId> user_types() const noexcept { return user_type_; }

  /// Type of item `i`, sampling and recording it on first access.
  TypeId item_type(ItemId i);
  /// Type of item `i` without recording it.
  TypeId peek_item_type(ItemId i) const;
  bool item_typed(ItemId i) const noexcept;

  /// Pins the type of an item that has not been typed yet.
  void assign_item_type(ItemId i, TypeId type);

  /// Items typed so far, ascending by id.
  std::vector<std::pair<ItemId, TypeId>> typed_items() const;

  const PrefMatrix& pref_matrix() const noexcept { return pref_; }
  Rating preference(TypeId user_type, TypeId item_type) const { return pref_(user_type, item_type); }

  /// L_{u,i}. Throws kUnknownUser for u outside [0, N).
  Rating rating(UserId u, ItemId i);

  /// Largest number of users sharing one type.
  std::uint32_t max_type_multiplicity() const;

  friend bool operator==(const LatentWorld& a, const LatentWorld& b);

 private:
  TypeId sample_item_type(ItemId i) const noexcept;

  ModelConfig config_;
  std::vector<TypeId> user_type_;
  PrefMatrix pref_;
  CounterRng item_stream_;
  // Dense by item id; -1 marks "not typed yet". Item ids come from a
  // consecutive fresh-id counter, so this stays compact.
  std::vector<std::int32_t> item_type_;
};

/// Single-trial rating of u for i, equal to ξ_{τ_U(u), τ_I(i)}.
inline Rating rating(LatentWorld& world, UserId u, ItemId i) { return world.rating(u, i); }

enum class Phase : std::uint8_t {
  kUserClustering,
  kFindPrefs,
  kItemClustering,
  kExploit,
  kFiller,
};

const char* to_string(Phase phase);

struct Recommendation {
  std::uint32_t t;  // 1-based time step
  ItemId item;
  Rating rating;
  Phase phase;
};

/// Append-only record of every recommendation and its feedback.
class HistoryLog {
 public:
  explicit HistoryLog(std::uint32_t n_users = 0);

  std::uint32_t n_users() const noexcept { return static_cast<std::uint32_t>(recs_.size()); }
  std::span<const Recommendation> recs(UserId u) const { return recs_.at(u); }
  bool has_rated(UserId u, ItemId i) const { return seen_.at(u).contains(i); }

  /// Users who rated item `i`, in the order the ratings happened.
  std::span<const UserId> rated_by(ItemId i) const;
  const std::unordered_map<ItemId, std::vector<UserId>>& rated_by_index() const noexcept {
    return rated_by_;
  }

  void append(UserId u, const Recommendation& rec);

 private:
  std::vector<std::vector<Recommendation>> recs_;
  std::vector<std::unordered_set<ItemId>> seen_;
  std::unordered_map<ItemId, std::vector<UserId>> rated_by_;
};

/// Mutable simulation state. One recommendation per user per step; an item
/// is never recommended to the same user twice.
class Environment {
 public:
  explicit Environment(LatentWorld world);

  std::uint32_t t() const noexcept { return t_; }
  std::uint32_t n_users() const noexcept { return world_.n_users(); }
  ItemId next_fresh_item() const noexcept { return next_fresh_; }

  const LatentWorld& world() const noexcept { return world_; }
  const HistoryLog& history() const noexcept { return history_; }

  /// k never-seen item ids. Their types are sampled on first rating.
  std::vector<ItemId> fresh_items(std::size_t k);
  ItemId fresh_item() { return next_fresh_++; }

  /// Advances one time step. `recs[u]` is the item for user u. Validates the
  /// whole step before mutating anything: kMissingUser if recs does not cover
  /// every user, kRepeatViolation if some user already rated their item.
  std::vector<Rating> step(std::span<const ItemId> recs, std::span<const Phase> phases = {});

  bool has_rated(UserId u, ItemId i) const { return history_.has_rated(u, i); }

 private:
  LatentWorld world_;
  HistoryLog history_;
  std::uint32_t t_ = 0;
  ItemId next_fresh_ = 0;
};

inline std::vector<ItemId> fresh_items(Environment& env, std::size_t k) { return env.fresh_items(k); }

/// Flat T x N record of a finished run, row-major by time step.
struct Trace {
  ModelConfig config;
  std::uint32_t horizon = 0;
  std::vector<ItemId> items;
  std::vector<Rating> ratings;
  std::vector<Phase> phases;

  std::uint32_t n_users() const noexcept { return config.n_users; }
  std::size_t index(std::uint32_t t, UserId u) const noexcept {
    return static_cast<std::size_t>(t) * config.n_users + u;
  }
  ItemId item(std::uint32_t t, UserId u) const { return items[index(t, u)]; }
  Rating rating(std::uint32_t t, UserId u) const { return ratings[index(t, u)]; }
  Phase phase(std::uint32_t t, UserId u) const { return phases[index(t, u)]; }
};

Trace make_trace(const Environment& env);

/// Rows `t,u,item,rating,phase` with a header; t is 1-based.
void write_trace_csv(std::ostream& out, const Trace& trace);

/// World snapshot as a JSON document; read_world_snapshot(write(w)) == w.
std::string write_world_snapshot(const LatentWorld& world);
LatentWorld read_world_snapshot(const std::string& text);

}  // namespace latrec
