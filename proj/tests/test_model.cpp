#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "latrec/model.hpp"

using namespace latrec;

namespace {

// log P(X = k) for X ~ Binomial(n, 1/2).
double log_binom_half(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1) -
         double(n) * std::log(2.0);
}

// P(|X - n/2| > dev) summed term by term.
double binomial_two_sided_tail(std::uint64_t n, double dev) {
  double p = 0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (std::abs(double(k) - double(n) / 2) > dev) p += std::exp(log_binom_half(n, k));
  }
  return p;
}

}  // namespace

TEST_CASE("smallest world") {
  const LatentWorld w = LatentWorld::generate({1, 1, 1, 42});
  CHECK(w.user_types().size() == 1);
  CHECK(w.user_type(0) == 0);
  CHECK(w.pref_matrix().size() == 1);
  CHECK(std::abs(int(w.pref_matrix()(0, 0))) == 1);
}

TEST_CASE("generation is deterministic") {
  const ModelConfig c{4, 2, 2, 7};
  CHECK(LatentWorld::generate(c) == LatentWorld::generate(c));
  CHECK(write_world_snapshot(LatentWorld::generate(c)) == write_world_snapshot(LatentWorld::generate(c)));
}

TEST_CASE("user types concentrate around one half") {
  constexpr std::uint32_t n = 100000;
  // The band [0.49, 0.51] holds with overwhelming probability, so a seed that
  // lands outside it would indicate a biased sampler.
  CHECK(binomial_two_sided_tail(n, 0.01 * n) < 1e-9);
  const LatentWorld w = LatentWorld::generate({n, 2, 2, 2024});
  std::uint64_t zeros = 0;
  for (TypeId t : w.user_types()) zeros += t == 0;
  const double frac = double(zeros) / n;
  CHECK(frac >= 0.49);
  CHECK(frac <= 0.51);
}

TEST_CASE("ratings follow types") {
  LatentWorld w = LatentWorld::generate({50, 3, 5, 11});
  for (UserId u = 0; u < 50; ++u) {
    for (UserId v = 0; v < 50; ++v) {
      if (w.user_type(u) != w.user_type(v)) continue;
      for (ItemId i = 0; i < 20; ++i) CHECK(w.rating(u, i) == w.rating(v, i));
    }
  }
  for (ItemId i = 0; i < 40; ++i) {
    for (ItemId k = 0; k < 40; ++k) {
      if (w.item_type(i) != w.item_type(k)) continue;
      for (UserId u = 0; u < 50; u += 7) CHECK(w.rating(u, i) == w.rating(u, k));
    }
  }
  for (ItemId i = 0; i < 40; ++i) {
    const TypeId first = w.item_type(i);
    CHECK(w.item_type(i) == first);
    CHECK(w.peek_item_type(i) == first);
    CHECK(w.rating(3, i) == w.preference(w.user_type(3), first));
  }
}

TEST_CASE("all-like world") {
  PrefMatrix p(1, 1);
  p(0, 0) = 1;
  LatentWorld w({5, 1, 1, 0}, {0, 0, 0, 0, 0}, p);
  for (UserId u = 0; u < 5; ++u) {
    for (ItemId i = 0; i < 10; ++i) CHECK(rating(w, u, i) == 1);
  }
  CHECK_THROWS_AS(w.rating(5, 0), Error);
}

TEST_CASE("world constructor validates") {
  PrefMatrix p(2, 2);
  p << 1, -1, -1, 1;
  CHECK_THROWS_AS(LatentWorld({3, 2, 2, 0}, {0, 1}, p), Error);
  CHECK_THROWS_AS(LatentWorld({2, 2, 2, 0}, {0, 2}, p), Error);
  PrefMatrix bad(2, 2);
  bad << 1, 0, -1, 1;
  CHECK_THROWS_AS(LatentWorld({2, 2, 2, 0}, {0, 1}, bad), Error);
  CHECK_THROWS_AS(ModelConfig({0, 1, 1, 0}).validate(), Error);
}

TEST_CASE("fresh items") {
  Environment env(LatentWorld::generate({2, 1, 16, 3}));
  CHECK(env.fresh_items(0).empty());
  auto a = env.fresh_items(3);
  auto b = fresh_items(env, 3);
  std::set<ItemId> all(a.begin(), a.end());
  all.insert(b.begin(), b.end());
  CHECK(all.size() == 6);
}

TEST_CASE("ten thousand fresh items cover sixteen types") {
  // Union bound on a missing type: 16 (15/16)^10000.
  const double log10_missing = std::log10(16.0) + 10000 * std::log10(15.0 / 16.0);
  CHECK(log10_missing < -100);
  Environment env(LatentWorld::generate({1, 1, 16, 5}));
  std::set<TypeId> seen;
  for (ItemId i : env.fresh_items(10000)) seen.insert(env.world().peek_item_type(i));
  CHECK(seen.size() == 16);
}

TEST_CASE("step") {
  SUBCASE("single user") {
    Environment env(LatentWorld::generate({1, 1, 1, 9}));
    const ItemId i = env.fresh_item();
    const auto r = env.step(std::vector<ItemId>{i});
    CHECK(r.size() == 1);
    CHECK(env.t() == 1);
    CHECK(env.history().recs(0).size() == 1);
    CHECK(env.history().recs(0)[0].t == 1);
  }
  SUBCASE("repeat is rejected") {
    Environment env(LatentWorld::generate({1, 1, 1, 9}));
    const std::vector<ItemId> recs{env.fresh_item()};
    env.step(recs);
    try {
      env.step(recs);
      FAIL("expected a repeat violation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRepeatViolation);
    }
    CHECK(env.t() == 1);
  }
  SUBCASE("partial recommendations are rejected") {
    Environment env(LatentWorld::generate({3, 1, 1, 9}));
    try {
      env.step(std::vector<ItemId>{0, 1});
      FAIL("expected a missing user");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingUser);
    }
    CHECK_THROWS_AS(env.step(std::vector<ItemId>{0, kNoItem, 1}), Error);
  }
  SUBCASE("one type, one item") {
    Environment env(LatentWorld::generate({3, 1, 4, 9}));
    const ItemId i = env.fresh_item();
    const auto r = env.step(std::vector<ItemId>{i, i, i});
    CHECK(r[0] == r[1]);
    CHECK(r[1] == r[2]);
    CHECK(env.history().rated_by(i).size() == 3);
  }
}

TEST_CASE("history invariants hold after many steps") {
  Environment env(LatentWorld::generate({6, 2, 3, 17}));
  for (int s = 0; s < 30; ++s) {
    std::vector<ItemId> recs(6);
    for (UserId u = 0; u < 6; ++u) recs[u] = (s % 3 == 0) ? env.fresh_item() : ItemId(s * 6 + u);
    // Reused ids must still be unseen by their user.
    for (UserId u = 0; u < 6; ++u) {
      if (env.has_rated(u, recs[u])) recs[u] = env.fresh_item();
    }
    env.step(recs);
  }
  for (UserId u = 0; u < 6; ++u) {
    const auto recs = env.history().recs(u);
    CHECK(recs.size() == env.t());
    std::set<ItemId> seen;
    for (const auto& r : recs) {
      CHECK(seen.insert(r.item).second);
      CHECK(r.item < env.next_fresh_item());
      const auto by = env.history().rated_by(r.item);
      CHECK(std::find(by.begin(), by.end(), u) != by.end());
    }
  }
  std::size_t inverse = 0;
  for (const auto& [item, users] : env.history().rated_by_index()) inverse += users.size();
  CHECK(inverse == 6u * env.t());
}

TEST_CASE("world snapshot round-trips") {
  LatentWorld w = LatentWorld::generate({7, 3, 5, 123});
  for (ItemId i : {0, 4, 9, 2}) w.item_type(i);
  const std::string text = write_world_snapshot(w);
  const LatentWorld back = read_world_snapshot(text);
  CHECK(back == w);
  CHECK(write_world_snapshot(back) == text);
  CHECK(back.typed_items() == w.typed_items());
  CHECK_THROWS_AS(read_world_snapshot("{not json"), Error);
  CHECK_THROWS_AS(read_world_snapshot(R"({"config":{"N":1,"q_U":1,"q_I":1,"seed":0},"user_type":[0],
      "item_type":[],"pref_matrix":[[1]],"extra":1})"),
                  Error);
}

TEST_CASE("trace export") {
  Environment env(LatentWorld::generate({2, 1, 2, 1}));
  env.step(std::vector<ItemId>{0, 1}, std::vector<Phase>{Phase::kUserClustering, Phase::kFiller});
  const Trace tr = make_trace(env);
  CHECK(tr.horizon == 1);
  CHECK(tr.item(0, 1) == 1);
  std::ostringstream out;
  write_trace_csv(out, tr);
  const std::string csv = out.str();
  CHECK(csv.rfind("t,u,item,rating,phase\n", 0) == 0);
  CHECK(csv.find("1,0,0,") != std::string::npos);
  CHECK(csv.find(",usr-clust\n") != std::string::npos);
  CHECK(csv.find(",filler\n") != std::string::npos);
}
