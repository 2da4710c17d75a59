#include "latrec/model.hpp"

#include <algorithm>
#include <ostream>

#include "json.hpp"

namespace latrec {

namespace {

constexpr std::uint64_t kUserTypeStream = 1;
constexpr std::uint64_t kPrefStream = 2;
constexpr std::uint64_t kItemTypeStream = 3;

}  // namespace

void ModelConfig::validate() const {
  if (n_users < 1 || n_user_types < 1 || n_item_types < 1) {
    throw Error(ErrorCode::kInvalidArgument, "N, q_U and q_I must all be at least 1");
  }
}

LatentWorld LatentWorld::generate(const ModelConfig& config) {
  config.validate();
  CounterRng root(config.seed);
  CounterRng users = root.split(kUserTypeStream);
  CounterRng prefs = root.split(kPrefStream);

  std::vector<TypeId> user_type(config.n_users);
  for (auto& w : user_type) w = static_cast<TypeId>(users.below(config.n_user_types));

  PrefMatrix pref(config.n_user_types, config.n_item_types);
  for (Eigen::Index w = 0; w < pref.rows(); ++w) {
    for (Eigen::Index j = 0; j < pref.cols(); ++j) pref(w, j) = static_cast<std::int8_t>(prefs.sign());
  }
  return LatentWorld(config, std::move(user_type), std::move(pref));
}

LatentWorld::LatentWorld(const ModelConfig& config, std::vector<TypeId> user_type, PrefMatrix pref)
    : config_(config),
      user_type_(std::move(user_type)),
      pref_(std::move(pref)),
      item_stream_(CounterRng(config.seed).split(kItemTypeStream)) {
  config_.validate();
  if (user_type_.size() != config_.n_users) {
    throw Error(ErrorCode::kLengthMismatch, "user_type length differs from N");
  }
  if (pref_.rows() != config_.n_user_types || pref_.cols() != config_.n_item_types) {
    throw Error(ErrorCode::kLengthMismatch, "preference matrix shape differs from q_U x q_I");
  }
  for (TypeId w : user_type_) {
    if (w >= config_.n_user_types) throw Error(ErrorCode::kInvalidArgument, "user type out of range");
  }
  for (Eigen::Index k = 0; k < pref_.size(); ++k) {
    std::int8_t v = pref_.data()[k];
    if (v != 1 && v != -1) throw Error(ErrorCode::kInvalidArgument, "preference entries must be +1 or -1");
  }
}

TypeId LatentWorld::user_type(UserId u) const {
  if (u >= user_type_.size()) {
    throw Error(ErrorCode::kUnknownUser, "user " + std::to_string(u));
  }
  return user_type_[u];
}

TypeId LatentWorld::sample_item_type(ItemId i) const noexcept {
  return static_cast<TypeId>(item_stream_.below_at(i, config_.n_item_types));
}

bool LatentWorld::item_typed(ItemId i) const noexcept {
  return i < item_type_.size() && item_type_[i] >= 0;
}

TypeId LatentWorld::peek_item_type(ItemId i) const {
  if (item_typed(i)) return static_cast<TypeId>(item_type_[i]);
  return sample_item_type(i);
}

TypeId LatentWorld::item_type(ItemId i) {
  if (i >= item_type_.size()) {
    if (i >= (ItemId{1} << 40)) throw Error(ErrorCode::kResourceCap, "item id too large to type");
    item_type_.resize(std::max<std::size_t>(i + 1, item_type_.size() * 2), -1);
  }
  if (item_type_[i] < 0) item_type_[i] = static_cast<std::int32_t>(sample_item_type(i));
  return static_cast<TypeId>(item_type_[i]);
}

void LatentWorld::assign_item_type(ItemId i, TypeId type) {
  if (type >= config_.n_item_types) throw Error(ErrorCode::kInvalidArgument, "item type out of range");
  if (item_typed(i)) throw Error(ErrorCode::kInvalidArgument, "item " + std::to_string(i) + " already typed");
  if (i >= item_type_.size()) {
    if (i >= (ItemId{1} << 40)) throw Error(ErrorCode::kResourceCap, "item id too large to type");
    item_type_.resize(i + 1, -1);
  }
  item_type_[i] = static_cast<std::int32_t>(type);
}

std::vector<std::pair<ItemId, TypeId>> LatentWorld::typed_items() const {
  std::vector<std::pair<ItemId, TypeId>> out;
  for (ItemId i = 0; i < item_type_.size(); ++i) {
    if (item_type_[i] >= 0) out.emplace_back(i, static_cast<TypeId>(item_type_[i]));
  }
  return out;
}

Rating LatentWorld::rating(UserId u, ItemId i) {
  TypeId w = user_type(u);
  return pref_(w, item_type(i));
}

std::uint32_t LatentWorld::max_type_multiplicity() const {
  std::vector<std::uint32_t> counts(config_.n_user_types, 0);
  for (TypeId w : user_type_) ++counts[w];
  return *std::max_element(counts.begin(), counts.end());
}

bool operator==(const LatentWorld& a, const LatentWorld& b) {
  return a.config_ == b.config_ && a.user_type_ == b.user_type_ && a.pref_ == b.pref_ &&
         a.typed_items() == b.typed_items();
}

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::kUserClustering: return "usr-clust";
    case Phase::kFindPrefs: return "find-prefs";
    case Phase::kItemClustering: return "item-clust";
    case Phase::kExploit: return "exploit";
    case Phase::kFiller: return "filler";
  }
  return "?";
}

HistoryLog::HistoryLog(std::uint32_t n_users) : recs_(n_users), seen_(n_users) {}

std::span<const UserId> HistoryLog::rated_by(ItemId i) const {
  auto it = rated_by_.find(i);
  if (it == rated_by_.end()) return {};
  return it->second;
}

void HistoryLog::append(UserId u, const Recommendation& rec) {
  recs_.at(u).push_back(rec);
  seen_[u].insert(rec.item);
  rated_by_[rec.item].push_back(u);
}

Environment::Environment(LatentWorld world) : world_(std::move(world)), history_(world_.n_users()) {}

std::vector<ItemId> Environment::fresh_items(std::size_t k) {
  std::vector<ItemId> out(k);
  for (auto& i : out) i = next_fresh_++;
  return out;
}

std::vector<Rating> Environment::step(std::span<const ItemId> recs, std::span<const Phase> phases) {
  const std::uint32_t n = n_users();
  if (recs.size() != n) {
    throw Error(ErrorCode::kMissingUser,
                "step covers " + std::to_string(recs.size()) + " of " + std::to_string(n) + " users");
  }
  if (!phases.empty() && phases.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "phase labels do not cover every user");
  }
  for (UserId u = 0; u < n; ++u) {
    if (recs[u] == kNoItem) throw Error(ErrorCode::kMissingUser, "no item for user " + std::to_string(u));
    if (history_.has_rated(u, recs[u])) {
      throw Error(ErrorCode::kRepeatViolation,
                  "user " + std::to_string(u) + " already rated item " + std::to_string(recs[u]));
    }
  }
  ++t_;
  std::vector<Rating> out(n);
  for (UserId u = 0; u < n; ++u) {
    ItemId i = recs[u];
    out[u] = world_.rating(u, i);
    Phase phase = phases.empty() ? Phase::kFiller : phases[u];
    history_.append(u, Recommendation{t_, i, out[u], phase});
    if (i >= next_fresh_) next_fresh_ = i + 1;
  }
  return out;
}

Trace make_trace(const Environment& env) {
  Trace trace;
  trace.config = env.world().config();
  trace.horizon = env.t();
  const std::uint32_t n = env.n_users();
  const std::size_t cells = static_cast<std::size_t>(trace.horizon) * n;
  trace.items.resize(cells);
  trace.ratings.resize(cells);
  trace.phases.resize(cells);
  for (UserId u = 0; u < n; ++u) {
    auto recs = env.history().recs(u);
    for (std::uint32_t t = 0; t < trace.horizon; ++t) {
      std::size_t k = trace.index(t, u);
      trace.items[k] = recs[t].item;
      trace.ratings[k] = recs[t].rating;
      trace.phases[k] = recs[t].phase;
    }
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "t,u,item,rating,phase\n";
  for (std::uint32_t t = 0; t < trace.horizon; ++t) {
    for (UserId u = 0; u < trace.n_users(); ++u) {
      out << (t + 1) << ',' << u << ',' << trace.item(t, u) << ',' << int(trace.rating(t, u)) << ','
          << to_string(trace.phase(t, u)) << '\n';
    }
  }
}

std::string write_world_snapshot(const LatentWorld& world) {
  using nlohmann::ordered_json;
  ordered_json doc;
  const auto& c = world.config();
  doc["config"] = {{"N", c.n_users}, {"q_U", c.n_user_types}, {"q_I", c.n_item_types}, {"seed", c.seed}};
  doc["user_type"] = std::vector<TypeId>(world.user_types().begin(), world.user_types().end());
  ordered_json items = ordered_json::array();
  for (auto [i, w] : world.typed_items()) items.push_back({i, w});
  doc["item_type"] = std::move(items);
  ordered_json rows = ordered_json::array();
  const auto& pref = world.pref_matrix();
  for (Eigen::Index w = 0; w < pref.rows(); ++w) {
    std::vector<int> row(pref.cols());
    for (Eigen::Index j = 0; j < pref.cols(); ++j) row[j] = pref(w, j);
    rows.push_back(row);
  }
  doc["pref_matrix"] = std::move(rows);
  return doc.dump(1);
}

namespace {

void require_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw Error(ErrorCode::kParse, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kParse, "unknown key '" + key + "'");
    }
  }
}

}  // namespace

LatentWorld read_world_snapshot(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    require_keys(doc, {"config", "user_type", "item_type", "pref_matrix"});
    ModelConfig config;
    const auto& c = doc.at("config");
    require_keys(c, {"N", "q_U", "q_I", "seed"});
    config.n_users = c.at("N").get<std::uint32_t>();
    config.n_user_types = c.at("q_U").get<std::uint32_t>();
    config.n_item_types = c.at("q_I").get<std::uint32_t>();
    config.seed = c.at("seed").get<std::uint64_t>();
    config.validate();

    auto user_type = doc.at("user_type").get<std::vector<TypeId>>();
    const auto& rows = doc.at("pref_matrix");
    if (rows.size() != config.n_user_types) throw Error(ErrorCode::kParse, "pref_matrix row count");
    PrefMatrix pref(config.n_user_types, config.n_item_types);
    for (std::size_t w = 0; w < rows.size(); ++w) {
      auto row = rows[w].get<std::vector<int>>();
      if (row.size() != config.n_item_types) throw Error(ErrorCode::kParse, "pref_matrix column count");
      for (std::size_t j = 0; j < row.size(); ++j) pref(w, j) = static_cast<std::int8_t>(row[j]);
    }
    LatentWorld world(config, std::move(user_type), std::move(pref));
    for (const auto& entry : doc.at("item_type")) {
      world.assign_item_type(entry.at(0).get<ItemId>(), entry.at(1).get<TypeId>());
    }
    return world;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

}  // namespace latrec
