#include "latrec/algorithm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

#include "latrec/theory.hpp"

namespace latrec {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return b == 0 ? 0 : (a + b - 1) / b; }

std::uint64_t ceil_u64(double x) { return x <= 0 ? 0 : static_cast<std::uint64_t>(std::ceil(x)); }

// Items handed out for one step, with their phase labels.
struct StepPlan {
  std::vector<ItemId> recs;
  std::vector<Phase> phases;

  explicit StepPlan(std::uint32_t n) : recs(n, kNoItem), phases(n, Phase::kFiller) {}

  void set(UserId u, ItemId i, Phase p) {
    recs[u] = i;
    phases[u] = p;
  }
};

void fill_random(Environment& env, std::uint32_t deadline) {
  const std::uint32_t n = env.n_users();
  while (env.t() < deadline) {
    StepPlan plan(n);
    for (UserId u = 0; u < n; ++u) plan.set(u, env.fresh_item(), Phase::kFiller);
    env.step(plan.recs, plan.phases);
  }
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kRecsys: return "recsys";
    case Strategy::kRandom: return "random";
    case Strategy::kUserUser: return "useruser";
    case Strategy::kItemItem: return "itemitem";
    case Strategy::kHeuristic: return "heuristic";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

double choose_ell(double N, double q_U, double q_I, double T) {
  const double r_U = r_user(N, q_U);
  const double r_I = r_item(N, q_I);
  double ell;
  const double ki = k_item(N, q_I, r_I, T);
  if (ki <= r_U) {
    ell = ki;
  } else {
    const double kh = k_hybrid(q_U, q_I, r_U, r_I, T);
    ell = kh <= q_I / 3 ? kh : q_I;
  }
  return std::clamp(ell, 1.0, q_I);
}

AlgParams no_item_clust_params(std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T) {
  AlgParams p;
  p.r_U = r_user(N, q_U);
  p.r_I = r_item(N, q_I);
  p.I_exp = 0;
  p.I_usr = p.r_U;
  p.I_rep = std::uint64_t{6} * T;
  p.ell = 1;
  p.item_clust = false;
  return p;
}

AlgParams item_clust_params(std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T) {
  AlgParams p;
  p.r_U = r_user(N, q_U);
  p.r_I = r_item(N, q_I);
  p.item_clust = true;
  if (T == 0) return p;
  p.ell = choose_ell(N, q_U, q_I, T);
  p.I_exp = ceil_u64(16.0 * q_I / p.ell * T);
  p.I_usr = p.ell > p.r_U ? p.r_U : 0;
  p.I_rep = p.ell <= q_I / 3.0 ? ceil_u64(3 * p.ell) : ceil_u64(q_I * lg(double(N) * q_I));
  return p;
}

AlgParams select_params(std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T) {
  if (T == 0) return no_item_clust_params(N, q_U, q_I, 0);
  const UpperCurves c = upper_curves(N, q_U, q_I, T);
  return c.R_I < c.R_U ? item_clust_params(N, q_U, q_I, T) : no_item_clust_params(N, q_U, q_I, T);
}

AlgParams params_for(Strategy s, std::uint32_t N, std::uint32_t q_U, std::uint32_t q_I, std::uint32_t T) {
  switch (s) {
    case Strategy::kRecsys: return select_params(N, q_U, q_I, T);
    case Strategy::kUserUser: return no_item_clust_params(N, q_U, q_I, T);
    case Strategy::kItemItem: {
      AlgParams p = item_clust_params(N, q_U, q_I, T);
      p.I_usr = 0;
      return p;
    }
    case Strategy::kHeuristic: {
      AlgParams p;
      p.r_U = r_user(N, q_U);
      p.r_I = r_item(N, q_I);
      if (T == 0) return p;
      const HeuristicParams h = heuristic_params(N, T, q_U, q_I);
      p.I_usr = ceil_u64(h.I_usr);
      p.I_rep = ceil_u64(h.I_rep);
      p.I_exp = ceil_u64(h.I_exp);
      p.ell = std::clamp(std::min(h.I_rep / 2, double(q_I)), 1.0, double(q_I));
      p.item_clust = p.I_exp > 0;
      return p;
    }
    case Strategy::kRandom: {
      AlgParams p;
      p.r_U = r_user(N, q_U);
      p.r_I = r_item(N, q_I);
      return p;
    }
  }
  return {};
}

std::size_t Partition::min_cluster_size() const {
  std::size_t m = 0;
  for (const auto& c : clusters) {
    if (m == 0 || c.size() < m) m = c.size();
  }
  return m;
}

Partition trivial_partition(std::uint32_t n_users) {
  Partition p;
  p.cluster_of.resize(n_users);
  p.clusters.resize(n_users);
  for (UserId u = 0; u < n_users; ++u) {
    p.cluster_of[u] = u;
    p.clusters[u] = {u};
  }
  return p;
}

Partition partition_by_feedback(const std::vector<std::vector<Rating>>& feedback) {
  Partition p;
  p.cluster_of.resize(feedback.size());
  std::map<std::vector<Rating>, std::uint32_t> label;
  for (UserId u = 0; u < feedback.size(); ++u) {
    auto [it, inserted] = label.try_emplace(feedback[u], static_cast<std::uint32_t>(p.clusters.size()));
    if (inserted) p.clusters.emplace_back();
    p.cluster_of[u] = it->second;
    p.clusters[it->second].push_back(u);
  }
  return p;
}

Partition user_clustering(Environment& env, std::span<const ItemId> I_usr, std::uint32_t r_U,
                          std::uint32_t deadline) {
  const std::uint32_t n = env.n_users();
  std::vector<std::vector<Rating>> feedback(n);
  for (ItemId item : I_usr) {
    if (env.t() >= deadline) return trivial_partition(n);
    StepPlan plan(n);
    for (UserId u = 0; u < n; ++u) plan.set(u, item, Phase::kUserClustering);
    auto ratings = env.step(plan.recs, plan.phases);
    for (UserId u = 0; u < n; ++u) feedback[u].push_back(ratings[u]);
  }
  if (I_usr.size() >= r_U) return partition_by_feedback(feedback);
  return trivial_partition(n);
}

ClusterPrefs find_prefs(Environment& env, std::span<const ItemId> I_rep, const Partition& partition,
                        std::uint32_t deadline) {
  const auto W = static_cast<Eigen::Index>(partition.size());
  const auto R = static_cast<Eigen::Index>(I_rep.size());
  ClusterPrefs prefs = ClusterPrefs::Zero(W, R);
  if (R == 0) return prefs;

  const std::uint64_t steps = ceil_div(I_rep.size(), partition.min_cluster_size());
  std::vector<std::size_t> next(partition.size(), 0);
  struct Assignment {
    UserId u;
    std::uint32_t w;
    std::size_t k;
  };
  std::vector<Assignment> assigned;
  for (std::uint64_t s = 0; s < steps && env.t() < deadline; ++s) {
    StepPlan plan(env.n_users());
    assigned.clear();
    for (std::uint32_t w = 0; w < partition.size(); ++w) {
      for (UserId u : partition.clusters[w]) {
        if (next[w] < I_rep.size()) {
          const std::size_t k = next[w]++;
          plan.set(u, I_rep[k], Phase::kFindPrefs);
          assigned.push_back({u, w, k});
        } else {
          plan.set(u, env.fresh_item(), Phase::kFiller);
        }
      }
    }
    auto ratings = env.step(plan.recs, plan.phases);
    for (const auto& a : assigned) prefs(a.w, static_cast<Eigen::Index>(a.k)) = ratings[a.u];
  }
  return prefs;
}

ItemClusters item_clustering(Environment& env, std::span<const ItemId> I_rep, std::span<const ItemId> I_exp,
                             const Partition& partition, const ClusterPrefs& prefs, std::uint32_t r_I,
                             CounterRng& rng, std::uint32_t deadline) {
  const std::uint32_t n = env.n_users();
  const std::uint64_t per_item = std::min<std::uint64_t>(r_I, n);
  ItemClusters out;
  out.matches.resize(I_exp.size());
  out.item_prefs.resize(I_exp.size());

  // Users visit items in blocks of per_item positions along a list that
  // repeats one random permutation, so every step covers each user once.
  std::vector<UserId> perm(n);
  for (UserId u = 0; u < n; ++u) perm[u] = u;
  rng.shuffle(std::span<UserId>(perm));

  const std::uint64_t total = I_exp.size() * per_item;
  const std::uint64_t steps = ceil_div(total, n);
  for (std::uint64_t s = 0; s < steps && env.t() < deadline; ++s) {
    StepPlan plan(n);
    for (std::uint32_t pos = 0; pos < n; ++pos) {
      const std::uint64_t p = s * n + pos;
      if (p < total) {
        plan.set(perm[pos], I_exp[p / per_item], Phase::kItemClustering);
      } else {
        plan.set(perm[pos], env.fresh_item(), Phase::kFiller);
      }
    }
    auto ratings = env.step(plan.recs, plan.phases);
    for (std::uint32_t pos = 0; pos < n; ++pos) {
      const std::uint64_t p = s * n + pos;
      if (p >= total) break;
      const UserId u = perm[pos];
      const std::uint32_t w = partition.cluster_of[u];
      auto& recorded = out.item_prefs[p / per_item];
      const bool seen = std::any_of(recorded.begin(), recorded.end(), [&](const auto& e) { return e.first == w; });
      if (!seen) recorded.emplace_back(w, ratings[u]);
    }
  }

  // bits[w][b]: representatives that cluster w rated as (b ? +1 : -1).
  const std::size_t R = I_rep.size();
  const std::size_t words = (R + 63) / 64;
  std::vector<std::array<std::vector<std::uint64_t>, 2>> bits(partition.size());
  for (std::uint32_t w = 0; w < partition.size(); ++w) {
    bits[w][0].assign(words, 0);
    bits[w][1].assign(words, 0);
    for (std::size_t k = 0; k < R; ++k) {
      const std::int8_t v = prefs(w, static_cast<Eigen::Index>(k));
      if (v != 0) bits[w][v > 0][k / 64] |= std::uint64_t{1} << (k % 64);
    }
  }
  std::vector<std::uint64_t> match(words);
  for (std::size_t e = 0; e < I_exp.size(); ++e) {
    const auto& recorded = out.item_prefs[e];
    if (recorded.empty()) continue;
    std::fill(match.begin(), match.end(), ~std::uint64_t{0});
    for (auto [w, r] : recorded) {
      const auto& b = bits[w][r > 0];
      for (std::size_t x = 0; x < words; ++x) match[x] &= b[x];
    }
    for (std::size_t k = 0; k < R; ++k) {
      if (match[k / 64] >> (k % 64) & 1) out.matches[e].push_back(static_cast<std::uint32_t>(k));
    }
  }
  return out;
}

ExploitSets exploit_sets(std::span<const ItemId> I_rep, std::span<const ItemId> I_exp, const Partition& partition,
                         const ClusterPrefs& prefs, const ItemClusters& clusters) {
  ExploitSets out;
  out.set_of_user = partition.cluster_of;
  out.sets.resize(partition.size());
  for (std::uint32_t w = 0; w < partition.size(); ++w) {
    auto& set = out.sets[w];
    for (std::size_t k = 0; k < I_rep.size(); ++k) {
      if (prefs(w, static_cast<Eigen::Index>(k)) > 0) set.push_back(I_rep[k]);
    }
    for (std::size_t e = 0; e < I_exp.size(); ++e) {
      for (std::uint32_t k : clusters.matches[e]) {
        if (prefs(w, k) > 0) {
          set.push_back(I_exp[e]);
          break;
        }
      }
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return out;
}

void exploit(Environment& env, const ExploitSets& sets, std::uint32_t deadline) {
  const std::uint32_t n = env.n_users();
  std::vector<std::size_t> cursor(n, 0);
  while (env.t() < deadline) {
    StepPlan plan(n);
    for (UserId u = 0; u < n; ++u) {
      auto items = sets.items(u);
      std::size_t& c = cursor[u];
      while (c < items.size() && env.has_rated(u, items[c])) ++c;
      if (c < items.size()) {
        plan.set(u, items[c++], Phase::kExploit);
      } else {
        plan.set(u, env.fresh_item(), Phase::kFiller);
      }
    }
    env.step(plan.recs, plan.phases);
  }
}

std::uint64_t explore_length(const AlgParams& params, std::uint32_t n_users, std::size_t min_cluster_size) {
  const std::uint64_t per_item = std::min<std::uint64_t>(params.r_I, n_users);
  return params.I_usr + ceil_div(params.I_rep, std::max<std::size_t>(min_cluster_size, 1)) +
         ceil_div(per_item * params.I_exp, n_users);
}

RunDiagnostics run_strategy(Environment& env, Strategy strategy, std::uint32_t T, std::uint32_t steps,
                            CounterRng rng) {
  if (steps > T) throw Error(ErrorCode::kInvalidArgument, "steps exceed the horizon");
  const ModelConfig& c = env.world().config();
  RunDiagnostics d;
  d.strategy = strategy;
  d.start_t = env.t();
  const std::uint32_t deadline = env.t() + steps;
  d.params = params_for(strategy, c.n_users, c.n_user_types, c.n_item_types, T);
  if (strategy == Strategy::kRandom) {
    d.partition = trivial_partition(c.n_users);
    d.explore_end = d.start_t;
    fill_random(env, deadline);
    return d;
  }

  // Only as many items as can be rated before the deadline are drawn; the
  // rest would be dropped by truncation anyway.
  const std::uint64_t capacity = std::uint64_t{steps} * c.n_users;
  const std::uint64_t per_item = std::min<std::uint64_t>(d.params.r_I, c.n_users);
  d.I_usr = env.fresh_items(std::min<std::uint64_t>(d.params.I_usr, steps));
  d.I_rep = env.fresh_items(std::min(d.params.I_rep, capacity));
  d.I_exp = env.fresh_items(std::min(d.params.I_exp, per_item == 0 ? 0 : capacity / per_item + 1));

  d.partition = user_clustering(env, d.I_usr, d.params.r_U, deadline);
  d.prefs = find_prefs(env, d.I_rep, d.partition, deadline);
  if (d.params.I_exp > 0) {
    CounterRng perm_rng = rng.split(1);
    d.item_clusters = item_clustering(env, d.I_rep, d.I_exp, d.partition, d.prefs, d.params.r_I, perm_rng, deadline);
  } else {
    d.item_clusters.matches.resize(d.I_exp.size());
    d.item_clusters.item_prefs.resize(d.I_exp.size());
  }
  d.explore_end = env.t();
  d.expected_explore_steps = explore_length(d.params, c.n_users, d.partition.min_cluster_size());
  d.truncated = d.expected_explore_steps > steps;
  const std::uint64_t used = d.explore_end - d.start_t;
  if (d.truncated ? used != steps : used != d.expected_explore_steps) {
    throw std::logic_error("exploration used " + std::to_string(used) + " steps, expected " +
                           std::to_string(d.expected_explore_steps));
  }
  d.sets = exploit_sets(d.I_rep, d.I_exp, d.partition, d.prefs, d.item_clusters);
  exploit(env, d.sets, deadline);
  return d;
}

Trace run(const ModelConfig& config, std::uint32_t T, Strategy strategy, std::uint64_t alg_seed) {
  Environment env(LatentWorld::generate(config));
  run_strategy(env, strategy, T, T, CounterRng(alg_seed));
  return make_trace(env);
}

std::vector<std::uint32_t> anytime_schedule(std::uint32_t T_max) {
  std::vector<std::uint32_t> ends;
  std::uint64_t done = 0, len = 2;
  while (done < T_max) {
    done = std::min<std::uint64_t>(done + len, T_max);
    ends.push_back(static_cast<std::uint32_t>(done));
    len *= 2;
  }
  return ends;
}

std::vector<RunDiagnostics> run_anytime_on(Environment& env, Strategy strategy, std::uint32_t T_max,
                                           CounterRng rng) {
  std::vector<RunDiagnostics> out;
  const std::uint32_t start = env.t();
  std::uint64_t len = 2;
  std::uint64_t k = 0;
  for (std::uint32_t end : anytime_schedule(T_max)) {
    const std::uint32_t steps = start + end - env.t();
    const auto horizon = static_cast<std::uint32_t>(std::min<std::uint64_t>(len, UINT32_MAX));
    out.push_back(run_strategy(env, strategy, horizon, steps, rng.split(k++)));
    len *= 2;
  }
  return out;
}

Trace run_anytime(const ModelConfig& config, std::uint32_t T_max, Strategy strategy, std::uint64_t alg_seed) {
  Environment env(LatentWorld::generate(config));
  run_anytime_on(env, strategy, T_max, CounterRng(alg_seed));
  return make_trace(env);
}

std::vector<double> regret_of(const Trace& trace) {
  std::vector<double> out(trace.horizon);
  std::uint64_t dislikes = 0;
  for (std::uint32_t t = 0; t < trace.horizon; ++t) {
    for (UserId u = 0; u < trace.n_users(); ++u) dislikes += trace.rating(t, u) < 0;
    out[t] = static_cast<double>(dislikes) / trace.n_users();
  }
  return out;
}

}  // namespace latrec
