#include "latrec/instrumentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace latrec {

namespace {

std::uint64_t pair_key(std::uint64_t a, std::uint64_t b, std::uint64_t b_range) { return a * b_range + b; }

}  // namespace

TraceStats audit(const Trace& trace, const LatentWorld& world, std::uint32_t s_I, std::uint32_t s_U,
                 bool keep_events) {
  const ModelConfig& c = trace.config;
  if (!(c == world.config())) throw Error(ErrorCode::kWorldMismatch, "trace and world configs differ");
  const std::uint32_t N = c.n_users;
  const std::uint64_t q_U = c.n_user_types, q_I = c.n_item_types;

  TraceStats st;
  st.n_users = N;
  st.horizon = trace.horizon;
  st.s_I = s_I;
  st.s_U = s_U;
  st.pi_star = world.max_type_multiplicity();
  if (keep_events) st.events.assign(trace.items.size(), BadEvent::kNone);

  std::unordered_map<ItemId, std::uint32_t> c_item;  // user types that rated the item
  std::vector<std::uint32_t> d_user(N, 0);           // item types the user rated
  std::unordered_set<std::uint64_t> item_utype;      // (item, user type) seen
  std::unordered_set<std::uint64_t> user_itype;      // (user, item type) seen
  std::unordered_set<std::uint64_t> type_pair;       // (user type, item type) seen

  std::vector<TypeId> item_type(N);
  for (std::uint32_t t = 0; t < trace.horizon; ++t) {
    for (UserId u = 0; u < N; ++u) {
      const ItemId i = trace.item(t, u);
      const TypeId w = world.user_type(u);
      const TypeId j = world.peek_item_type(i);
      item_type[u] = j;
      if (trace.rating(t, u) != world.preference(w, j)) {
        throw Error(ErrorCode::kWorldMismatch,
                    "rating of item " + std::to_string(i) + " by user " + std::to_string(u) + " disagrees");
      }
      auto it = c_item.find(i);
      const std::uint32_t ci = it == c_item.end() ? 0 : it->second;
      const std::uint32_t du = d_user[u];
      const bool item_known_to_type = item_utype.contains(pair_key(i, w, q_U));
      const bool type_known_to_user = user_itype.contains(pair_key(u, j, q_I));
      const bool pair_known = type_pair.contains(pair_key(w, j, q_I));

      BadEvent e = BadEvent::kNone;
      if (ci < s_I && du < s_U) {
        e = BadEvent::kB1;
      } else if (ci < s_I && !item_known_to_type) {
        e = BadEvent::kB2;
      } else if (ci >= s_I && du < s_U && !type_known_to_user) {
        e = BadEvent::kB3;
      } else if (ci >= s_I && du >= s_U && !pair_known) {
        e = BadEvent::kB4;
      }
      const auto k = static_cast<std::size_t>(e);
      ++st.counts[k];
      st.disliked[k] += trace.rating(t, u) < 0;
      if (e != BadEvent::kNone) ++st.bad;
      if (keep_events) st.events[trace.index(t, u)] = e;
      if (ci < s_I && !item_known_to_type) ++st.first_of_type_weak;
      if (du < s_U && !type_known_to_user) ++st.first_item_type_weak_user;
    }
    // Counters advance only after every user in the step was classified.
    for (UserId u = 0; u < N; ++u) {
      const ItemId i = trace.item(t, u);
      const TypeId w = world.user_type(u);
      const TypeId j = item_type[u];
      if (item_utype.insert(pair_key(i, w, q_U)).second) ++c_item[i];
      if (user_itype.insert(pair_key(u, j, q_I)).second) ++d_user[u];
      type_pair.insert(pair_key(w, j, q_I));
    }
  }

  for (const auto& [item, ci] : c_item) {
    if (ci >= std::max<std::uint32_t>(s_I, 1)) ++st.I_strong;
    if (ci > 0 && ci < s_I) st.I_weak_mass += ci;
    if (ci > 0) ++st.I_total;
  }
  st.d_final = d_user;
  st.gamma_star = N == 0 ? 0 : *std::min_element(d_user.begin(), d_user.end());
  st.weak_users = static_cast<std::uint64_t>(std::count_if(d_user.begin(), d_user.end(),
                                                           [&](std::uint32_t d) { return d < s_U; }));
  return st;
}

bool ConstraintReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) { return c.pass; });
}

std::vector<int> ConstraintReport::failures() const {
  std::vector<int> out;
  for (const auto& c : checks) {
    if (!c.pass) out.push_back(c.id);
  }
  return out;
}

ConstraintReport verify_constraints(const TraceStats& st, std::uint32_t T, std::uint32_t N, std::uint32_t s_I,
                                    std::uint32_t s_U) {
  using W = long double;  // exact for every integer below 2^64
  ConstraintReport r;
  const W weak = st.weak_users;
  const W bad = st.bad;

  auto& c1 = r.checks[0];
  c1.id = 1;
  c1.lhs = st.b1_b2();
  c1.mid = W(st.I_strong) * s_I + st.I_weak_mass;
  c1.rhs = st.I_total;
  // With s_I = 0 strongly explored items contribute nothing to the middle
  // term, so the right-hand link only makes sense for s_I >= 1.
  c1.pass = c1.lhs >= c1.mid && (s_I == 0 || c1.mid >= c1.rhs);

  auto& c2 = r.checks[1];
  c2.id = 2;
  c2.lhs = st.b1_b3();
  c2.rhs = (W(N) - weak) * s_U;
  c2.pass = c2.lhs >= c2.rhs;

  auto& c3 = r.checks[2];
  c3.id = 3;
  c3.lhs = st.b1_b3();
  c3.rhs = weak * st.gamma_star;
  c3.pass = c3.lhs >= c3.rhs;

  // bad >= gamma* N / pi*, cross-multiplied to stay in integers.
  auto& c4 = r.checks[3];
  c4.id = 4;
  c4.lhs = bad * st.pi_star;
  c4.rhs = W(st.gamma_star) * N;
  c4.pass = c4.lhs >= c4.rhs;

  auto& c5 = r.checks[4];
  c5.id = 5;
  c5.lhs = bad;
  c5.rhs = W(T) * N - (W(st.I_strong) * (W(N) - s_I) + W(st.I_weak_mass) * (W(st.pi_star) - 1));
  c5.pass = c5.lhs >= c5.rhs;
  return r;
}

void require_constraints(const ConstraintReport& report) {
  for (const auto& c : report.checks) {
    if (!c.pass) throw Error(ErrorCode::kConstraintViolated, "constraint " + std::to_string(c.id));
  }
}

std::array<CategoryRate, 5> empirical_bad_fraction(std::span<const TraceStats> stats, double z) {
  std::array<CategoryRate, 5> out;
  for (const auto& st : stats) {
    for (std::size_t k = 0; k < 5; ++k) {
      out[k].count += st.counts[k];
      out[k].disliked += st.disliked[k];
    }
  }
  for (auto& c : out) {
    c.rate = c.count == 0 ? std::numeric_limits<double>::quiet_NaN() : double(c.disliked) / c.count;
    c.ci = wilson(c.disliked, c.count, z);
  }
  return out;
}

ClusteringAudit audit_clustering(const RunDiagnostics& d, const Environment& env, std::uint32_t horizon) {
  const LatentWorld& world = env.world();
  ClusteringAudit a;
  a.clustered = !d.I_usr.empty() && d.I_usr.size() >= d.params.r_U && d.explore_end - d.start_t >= d.I_usr.size();

  for (const auto& members : d.partition.clusters) {
    for (UserId u : members) {
      if (world.user_type(u) != world.user_type(members.front())) a.partition_pure = false;
    }
  }
  std::unordered_map<TypeId, std::uint32_t> cluster_of_type;
  for (UserId u = 0; u < d.partition.cluster_of.size(); ++u) {
    auto [it, inserted] = cluster_of_type.try_emplace(world.user_type(u), d.partition.cluster_of[u]);
    if (!inserted && it->second != d.partition.cluster_of[u]) a.type_split = true;
  }

  std::vector<TypeId> rep_type(d.I_rep.size());
  for (std::size_t k = 0; k < d.I_rep.size(); ++k) rep_type[k] = world.peek_item_type(d.I_rep[k]);

  std::unordered_map<ItemId, std::size_t> exp_index;
  for (std::size_t e = 0; e < d.I_exp.size(); ++e) {
    if (d.item_clusters.item_prefs[e].empty()) continue;
    exp_index.emplace(d.I_exp[e], e);
    ++a.items_classified;
    const TypeId j = world.peek_item_type(d.I_exp[e]);
    const auto& m = d.item_clusters.matches[e];
    if (std::any_of(m.begin(), m.end(), [&](std::uint32_t k) { return rep_type[k] != j; })) {
      ++a.items_misclassified;
    }
  }

  for (UserId u = 0; u < env.n_users(); ++u) {
    if (!d.sets.sets.empty() && d.sets.items(u).size() < horizon) ++a.users_short;
    const std::uint32_t w = d.partition.cluster_of[u];
    for (const Recommendation& rec : env.history().recs(u)) {
      if (rec.t <= d.explore_end || rec.phase != Phase::kExploit) continue;
      if (rec.t > d.start_t + horizon) continue;
      ++a.exploit_recs;
      const bool disliked = rec.rating < 0;
      a.exploit_dislikes += disliked;
      bool consumed_bad = false;
      auto it = exp_index.find(rec.item);
      if (it != exp_index.end()) {
        const TypeId j = world.peek_item_type(rec.item);
        for (std::uint32_t k : d.item_clusters.matches[it->second]) {
          if (d.prefs(w, k) > 0 && rep_type[k] != j) consumed_bad = true;
        }
      }
      a.consumed_misclassified += consumed_bad;
      if (!consumed_bad) a.exploit_dislikes_clean += disliked;
    }
  }
  return a;
}

}  // namespace latrec
