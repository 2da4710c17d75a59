#include "latrec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "latrec/stats.hpp"
#include "latrec/theory.hpp"

namespace latrec {

namespace {

constexpr double kMaxCellsPerTrace = 2e8;
constexpr double kMaxTotalCells = 2e10;

using nlohmann::json;

std::uint64_t as_count(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw Error(ErrorCode::kParse, "'" + key + "' must be a non-negative integer");
}

std::vector<std::uint32_t> as_count_list(const json& v, const std::string& key) {
  std::vector<std::uint32_t> out;
  auto push = [&](const json& x) {
    const std::uint64_t c = as_count(x, key);
    if (c > UINT32_MAX) throw Error(ErrorCode::kParse, "'" + key + "' is too large");
    out.push_back(static_cast<std::uint32_t>(c));
  };
  if (v.is_array()) {
    for (const auto& x : v) push(x);
  } else {
    push(v);
  }
  if (out.empty()) throw Error(ErrorCode::kParse, "'" + key + "' must not be empty");
  return out;
}

struct TrialOutput {
  // [strategy][checkpoint] regret at that checkpoint
  std::vector<std::vector<double>> regret;
  std::uint64_t audited = 0;
  std::uint64_t failures = 0;
  std::string first_failure;
};

struct GridPoint {
  std::uint32_t N, q_U, q_I;
};

TrialOutput run_trial(const ExperimentSpec& spec, const GridPoint& g, std::uint32_t trial, std::uint32_t s_I,
                      std::uint32_t s_U) {
  TrialOutput out;
  const ModelConfig config{g.N, g.q_U, g.q_I, world_seed(spec.base_seed, trial)};
  const LatentWorld world = LatentWorld::generate(config);
  const CounterRng rng(alg_seed(config.seed));

  auto check = [&](const Environment& env, Strategy s, std::uint32_t T) {
    if (!spec.audit) return;
    const TraceStats st = audit(make_trace(env), env.world(), s_I, s_U);
    const ConstraintReport report = verify_constraints(st, T, g.N, s_I, s_U);
    ++out.audited;
    if (!report.all_pass()) {
      ++out.failures;
      if (out.first_failure.empty()) {
        std::ostringstream msg;
        msg << "constraint";
        for (int id : report.failures()) msg << ' ' << id;
        msg << " failed for strategy " << to_string(s) << " N=" << g.N << " q_U=" << g.q_U << " q_I=" << g.q_I
            << " T=" << T << " seed=" << config.seed;
        out.first_failure = msg.str();
      }
    }
  };

  for (Strategy s : spec.strategies) {
    std::vector<double> at(spec.checkpoints.size());
    if (spec.params_mode == ParamsMode::kMaxT) {
      Environment env(world);
      run_strategy(env, s, spec.horizon(), spec.horizon(), rng);
      const std::vector<double> curve = regret_of(make_trace(env));
      for (std::size_t k = 0; k < at.size(); ++k) at[k] = curve[spec.checkpoints[k] - 1];
      check(env, s, spec.horizon());
    } else {
      for (std::size_t k = 0; k < at.size(); ++k) {
        const std::uint32_t T = spec.checkpoints[k];
        Environment env(world);
        run_strategy(env, s, T, T, rng);
        at[k] = regret_of(make_trace(env)).back();
        check(env, s, T);
      }
    }
    out.regret.push_back(std::move(at));
  }
  return out;
}

void run_grid_point(const ExperimentSpec& spec, const GridPoint& g, ExperimentResult& result) {
  const Thresholds th = thresholds(g.N, g.q_U, g.q_I);
  const std::uint32_t s_I = spec.s_I.value_or(th.s_I);
  const std::uint32_t s_U = spec.s_U.value_or(th.s_U);

  std::vector<TrialOutput> trials(spec.trials);
  unsigned workers = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, spec.trials);
  std::atomic<std::uint32_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned id) {
    try {
      for (std::uint32_t k = next++; k < spec.trials; k = next++) trials[k] = run_trial(spec, g, k, s_I, s_U);
    } catch (...) {
      errors[id] = std::current_exception();
      next = spec.trials;
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Reduction runs in trial order so the output does not depend on scheduling.
  for (const auto& t : trials) {
    result.traces_audited += t.audited;
    result.constraint_failures += t.failures;
    if (result.first_failure.empty()) result.first_failure = t.first_failure;
  }
  const std::string violations = join_violations(check_assumptions(g.N, g.q_U, g.q_I));
  for (std::size_t si = 0; si < spec.strategies.size(); ++si) {
    for (std::size_t k = 0; k < spec.checkpoints.size(); ++k) {
      std::vector<double> xs(spec.trials);
      for (std::uint32_t r = 0; r < spec.trials; ++r) xs[r] = trials[r].regret[si][k];
      const Summary s = summarize(xs);
      const std::uint32_t T = spec.checkpoints[k];
      const TheoryPoint tp = theory_point(g.N, g.q_U, g.q_I, T);
      CurvePoint p;
      p.N = g.N;
      p.q_U = g.q_U;
      p.q_I = g.q_I;
      p.strategy = spec.strategies[si];
      p.T = T;
      p.regret_mean = s.mean;
      p.regret_stderr = s.stderr_;
      p.R_theory = tp.R;
      p.regime = tp.regime;
      p.R_U = tp.R_U;
      p.R_I = tp.R_I;
      p.lower = tp.lower;
      p.violations = violations;
      p.n_trials = spec.trials;
      result.rows.push_back(std::move(p));
    }
  }
}

void check_resources(const ExperimentSpec& spec) {
  const double H = spec.horizon();
  const double runs_per_trial =
      spec.strategies.size() * (spec.params_mode == ParamsMode::kPerT ? spec.checkpoints.size() : 1.0);
  double total = 0;
  for (double N : spec.N) {
    if (N * H > kMaxCellsPerTrace) throw Error(ErrorCode::kResourceCap, "N*T exceeds the per-trace cap");
    total += N * H * runs_per_trial * spec.trials * spec.q_U.size() * spec.q_I.size();
  }
  if (total > kMaxTotalCells) throw Error(ErrorCode::kResourceCap, "experiment exceeds the total work cap");
}

}  // namespace

const char* to_string(ParamsMode mode) { return mode == ParamsMode::kMaxT ? "max-T" : "per-T"; }

ParamsMode parse_params_mode(const std::string& name) {
  if (name == "max-T") return ParamsMode::kMaxT;
  if (name == "per-T") return ParamsMode::kPerT;
  throw Error(ErrorCode::kInvalidArgument, "params mode must be max-T or per-T, got '" + name + "'");
}

void ExperimentSpec::validate() const {
  auto positive = [](const std::vector<std::uint32_t>& v, const char* name) {
    if (v.empty() || std::any_of(v.begin(), v.end(), [](std::uint32_t x) { return x == 0; })) {
      throw Error(ErrorCode::kInvalidArgument, std::string(name) + " values must be positive");
    }
  };
  positive(N, "N");
  positive(q_U, "q_U");
  positive(q_I, "q_I");
  positive(checkpoints, "T");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end()) {
    throw Error(ErrorCode::kInvalidArgument, "checkpoints must be strictly increasing");
  }
  if (strategies.empty()) throw Error(ErrorCode::kInvalidArgument, "no strategies");
  if (trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
}

ExperimentSpec parse_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "config must be a JSON object");

  ExperimentSpec spec;
  for (const auto& [key, v] : doc.items()) {
    if (key == "N") {
      spec.N = as_count_list(v, key);
    } else if (key == "q_U") {
      spec.q_U = as_count_list(v, key);
    } else if (key == "q_I") {
      spec.q_I = as_count_list(v, key);
    } else if (key == "T") {
      spec.checkpoints = as_count_list(v, key);
      std::sort(spec.checkpoints.begin(), spec.checkpoints.end());
      spec.checkpoints.erase(std::unique(spec.checkpoints.begin(), spec.checkpoints.end()), spec.checkpoints.end());
    } else if (key == "strategies") {
      spec.strategies.clear();
      if (v.is_string()) {
        spec.strategies.push_back(parse_strategy(v.get<std::string>()));
      } else if (v.is_array()) {
        for (const auto& s : v) {
          if (!s.is_string()) throw Error(ErrorCode::kParse, "strategies must be strings");
          spec.strategies.push_back(parse_strategy(s.get<std::string>()));
        }
      } else {
        throw Error(ErrorCode::kParse, "strategies must be a string or an array of strings");
      }
    } else if (key == "trials") {
      spec.trials = static_cast<std::uint32_t>(as_count(v, key));
    } else if (key == "seed") {
      spec.base_seed = as_count(v, key);
    } else if (key == "gamma") {
      if (!v.is_number()) throw Error(ErrorCode::kParse, "gamma must be a number");
      spec.gamma = v.get<double>();
    } else if (key == "audit") {
      if (v.is_boolean()) {
        spec.audit = v.get<bool>();
      } else if (v.is_string() && (v == "on" || v == "off")) {
        spec.audit = v == "on";
      } else {
        throw Error(ErrorCode::kParse, "audit must be true/false or \"on\"/\"off\"");
      }
    } else if (key == "params_mode") {
      if (!v.is_string()) throw Error(ErrorCode::kParse, "params_mode must be a string");
      spec.params_mode = parse_params_mode(v.get<std::string>());
    } else if (key == "s_I") {
      spec.s_I = static_cast<std::uint32_t>(as_count(v, key));
    } else if (key == "s_U") {
      spec.s_U = static_cast<std::uint32_t>(as_count(v, key));
    } else if (key == "threads") {
      spec.threads = static_cast<unsigned>(as_count(v, key));
    } else {
      throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

std::uint64_t world_seed(std::uint64_t base_seed, std::uint32_t trial) { return base_seed + trial; }

std::uint64_t alg_seed(std::uint64_t world_seed) { return mix64(world_seed ^ 0x5f3759df2b7e1516ULL); }

ExperimentResult monte_carlo(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.N.size() != 1 || spec.q_U.size() != 1 || spec.q_I.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "monte_carlo takes a single (N, q_U, q_I)");
  }
  return sweep(spec);
}

ExperimentResult sweep(const ExperimentSpec& spec) {
  spec.validate();
  check_resources(spec);
  ExperimentResult result;
  for (std::uint32_t N : spec.N) {
    for (std::uint32_t q_U : spec.q_U) {
      for (std::uint32_t q_I : spec.q_I) run_grid_point(spec, {N, q_U, q_I}, result);
    }
  }
  return result;
}

std::optional<std::uint32_t> estimate_coldstart(const std::vector<CurvePoint>& curve, double gamma,
                                                std::uint32_t N) {
  for (const CurvePoint& p : curve) {
    if (p.T == 0) continue;
    if (p.regret_mean / p.T <= gamma / lg(double(N) * p.T)) return p.T;
  }
  return std::nullopt;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& rows) {
  out << "N,q_U,q_I,strategy,T,regret_mean,regret_stderr,R_theory,regime,R_U,R_I,lower,violations\n";
  for (const CurvePoint& p : rows) {
    out << p.N << ',' << p.q_U << ',' << p.q_I << ',' << to_string(p.strategy) << ',' << p.T << ','
        << format_double(p.regret_mean) << ',' << format_double(p.regret_stderr) << ','
        << format_double(p.R_theory) << ',' << to_string(p.regime) << ',' << format_double(p.R_U) << ','
        << format_double(p.R_I) << ',' << format_double(p.lower) << ',' << p.violations << '\n';
  }
}

}  // namespace latrec
