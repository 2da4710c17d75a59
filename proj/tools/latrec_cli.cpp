#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "latrec/algorithm.hpp"
#include "latrec/harness.hpp"
#include "latrec/instrumentation.hpp"
#include "latrec/regularity.hpp"
#include "latrec/theory.hpp"

using namespace latrec;

namespace {

constexpr int kExitConstraint = 3;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> trials;
  std::string audit;
  std::string params_mode;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "flat JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output CSV path (stdout when omitted)");
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--trials", c.trials, "trials per configuration");
  cmd->add_option("--audit", c.audit, "audit every trace against the counting constraints")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--params-mode", c.params_mode, "budget choice for checkpoints")
      ->check(CLI::IsMember({"max-T", "per-T"}));
}

ExperimentSpec make_spec(const Common& c) {
  ExperimentSpec spec = c.config.empty() ? ExperimentSpec{} : load_spec(c.config);
  if (c.seed) spec.base_seed = *c.seed;
  if (c.trials) spec.trials = *c.trials;
  if (!c.audit.empty()) spec.audit = c.audit == "on";
  if (!c.params_mode.empty()) spec.params_mode = parse_params_mode(c.params_mode);
  spec.validate();
  return spec;
}

// Returns the file stream when a path is given, else std::cout.
std::ostream& open_out(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty()) return std::cout;
  holder = std::make_unique<std::ofstream>(path);
  if (!*holder) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  return *holder;
}

int run_experiment(const Common& c, bool single) {
  const ExperimentSpec spec = make_spec(c);
  const ExperimentResult result = single ? monte_carlo(spec) : sweep(spec);
  std::unique_ptr<std::ofstream> holder;
  write_curve_csv(open_out(c.out, holder), result.rows);
  if (result.constraint_failures > 0) {
    std::cerr << "CONSTRAINT_VIOLATED: " << result.constraint_failures << " of " << result.traces_audited
              << " traces; " << result.first_failure << '\n';
    return kExitConstraint;
  }
  return 0;
}

int run_theory(const Common& c) {
  const ExperimentSpec spec = make_spec(c);
  std::unique_ptr<std::ofstream> holder;
  std::ostream& out = open_out(c.out, holder);
  out << "N,q_U,q_I,T,R,regime,R_U,R_I,lower,violations\n";
  for (std::uint32_t N : spec.N) {
    for (std::uint32_t q_U : spec.q_U) {
      for (std::uint32_t q_I : spec.q_I) {
        for (std::uint32_t T : spec.checkpoints) {
          const TheoryPoint p = theory_point(N, q_U, q_I, T);
          out << N << ',' << q_U << ',' << q_I << ',' << T << ',' << format_double(p.R) << ','
              << to_string(p.regime) << ',' << format_double(p.R_U) << ',' << format_double(p.R_I) << ','
              << format_double(p.lower) << ',' << join_violations(p.violations) << '\n';
        }
      }
    }
  }
  return 0;
}

int run_verify(const Common& c, const std::string& rates_path) {
  const ExperimentSpec spec = make_spec(c);
  std::unique_ptr<std::ofstream> holder, rates_holder;
  std::ostream& out = open_out(c.out, holder);
  out << "seed,strategy,N,q_U,q_I,T,s_I,s_U,bad,c1,c2,c3,c4,c5\n";
  std::vector<TraceStats> all;
  std::uint64_t failures = 0;
  const std::uint32_t T = spec.horizon();
  for (std::uint32_t N : spec.N) {
    for (std::uint32_t q_U : spec.q_U) {
      for (std::uint32_t q_I : spec.q_I) {
        const Thresholds th = thresholds(N, q_U, q_I);
        const std::uint32_t s_I = spec.s_I.value_or(th.s_I), s_U = spec.s_U.value_or(th.s_U);
        for (std::uint32_t k = 0; k < spec.trials; ++k) {
          const std::uint64_t seed = world_seed(spec.base_seed, k);
          for (Strategy s : spec.strategies) {
            Environment env(LatentWorld::generate({N, q_U, q_I, seed}));
            run_strategy(env, s, T, T, CounterRng(alg_seed(seed)));
            TraceStats st = audit(make_trace(env), env.world(), s_I, s_U);
            const ConstraintReport report = verify_constraints(st, T, N, s_I, s_U);
            failures += !report.all_pass();
            out << seed << ',' << to_string(s) << ',' << N << ',' << q_U << ',' << q_I << ',' << T << ',' << s_I
                << ',' << s_U << ',' << st.bad;
            for (const auto& chk : report.checks) out << ',' << (chk.pass ? "pass" : "fail");
            out << '\n';
            st.events.clear();
            st.d_final.clear();
            all.push_back(std::move(st));
          }
        }
      }
    }
  }
  std::ostream& rates = rates_path.empty() ? std::cout : open_out(rates_path, rates_holder);
  // Both tables on stdout get a blank line between them.
  if (rates_path.empty() && c.out.empty()) rates << '\n';
  rates << "category,count,disliked,rate,ci_lo,ci_hi\n";
  const auto cats = empirical_bad_fraction(all);
  const char* names[] = {"none", "B1", "B2", "B3", "B4"};
  for (std::size_t k = 0; k < cats.size(); ++k) {
    rates << names[k] << ',' << cats[k].count << ',' << cats[k].disliked << ',' << format_double(cats[k].rate)
          << ',' << format_double(cats[k].ci.lo) << ',' << format_double(cats[k].ci.hi) << '\n';
  }
  if (failures > 0) {
    std::cerr << "CONSTRAINT_VIOLATED: " << failures << " traces failed at least one constraint\n";
    return kExitConstraint;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-type recommendation simulator"};
  app.require_subcommand(1);

  Common sim_opts, sweep_opts, theory_opts, verify_opts;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo regret curves for one configuration");
  add_common(sim, sim_opts);
  auto* swp = app.add_subcommand("sweep", "Monte Carlo regret curves over a parameter grid");
  add_common(swp, sweep_opts);
  auto* th = app.add_subcommand("theory", "Theoretical curves over the configured T grid");
  add_common(th, theory_opts);
  std::string rates_path;
  auto* ver = app.add_subcommand("verify", "Audit traces against the counting constraints");
  add_common(ver, verify_opts);
  ver->add_option("--rates", rates_path, "CSV path for per-category dislike rates");

  std::int64_t reg_m = 1 << 14, reg_n = 8;
  int reg_s = 2;
  double reg_eta = 1.0 / 3.0;
  std::uint64_t reg_trials = 200, reg_seed = 1;
  std::string reg_out;
  auto* reg = app.add_subcommand("regularity", "Empirical column-regularity rate of random sign matrices");
  reg->add_option("--m", reg_m, "rows")->check(CLI::PositiveNumber);
  reg->add_option("--n", reg_n, "columns")->check(CLI::PositiveNumber);
  reg->add_option("--s", reg_s, "tuple size")->check(CLI::NonNegativeNumber);
  reg->add_option("--eta", reg_eta, "relative tolerance")->check(CLI::PositiveNumber);
  reg->add_option("--trials", reg_trials, "matrices sampled")->check(CLI::PositiveNumber);
  reg->add_option("--seed", reg_seed, "seed");
  reg->add_option("--out", reg_out, "output CSV path");

  std::string trace_config, trace_out, trace_strategy = "recsys";
  std::uint32_t trace_N = 8, trace_qU = 2, trace_qI = 4, trace_T = 20;
  std::uint64_t trace_seed = 1;
  bool trace_anytime = false;
  auto* trc = app.add_subcommand("trace", "Export one trace as t,u,item,rating,phase rows");
  trc->add_option("--N", trace_N, "users")->check(CLI::PositiveNumber);
  trc->add_option("--qU", trace_qU, "user types")->check(CLI::PositiveNumber);
  trc->add_option("--qI", trace_qI, "item types")->check(CLI::PositiveNumber);
  trc->add_option("--T", trace_T, "horizon");
  trc->add_option("--strategy", trace_strategy, "recsys, random, useruser, itemitem or heuristic");
  trc->add_option("--seed", trace_seed, "world seed");
  trc->add_flag("--anytime", trace_anytime, "restart on doubling intervals");
  trc->add_option("--out", trace_out, "output CSV path");

  std::uint32_t world_N = 8, world_qU = 2, world_qI = 4;
  std::uint64_t world_seed_opt = 1;
  std::string world_out;
  auto* wld = app.add_subcommand("world", "Write a world snapshot as JSON");
  wld->add_option("--N", world_N, "users")->check(CLI::PositiveNumber);
  wld->add_option("--qU", world_qU, "user types")->check(CLI::PositiveNumber);
  wld->add_option("--qI", world_qI, "item types")->check(CLI::PositiveNumber);
  wld->add_option("--seed", world_seed_opt, "world seed");
  wld->add_option("--out", world_out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; every usage error maps to 2.
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (*sim) return run_experiment(sim_opts, true);
    if (*swp) return run_experiment(sweep_opts, false);
    if (*th) return run_theory(theory_opts);
    if (*ver) return run_verify(verify_opts, rates_path);
    if (*reg) {
      const RegularityEstimate e = estimate_regularity_prob(reg_m, reg_n, reg_s, reg_eta, reg_trials, reg_seed);
      std::unique_ptr<std::ofstream> holder;
      std::ostream& out = open_out(reg_out, holder);
      out << "m,n,s,eta,trials,regular,rate,ci_lo,ci_hi,bound\n";
      out << reg_m << ',' << reg_n << ',' << reg_s << ',' << format_double(reg_eta) << ',' << e.trials << ','
          << e.regular << ',' << format_double(e.rate) << ',' << format_double(e.ci.lo) << ','
          << format_double(e.ci.hi) << ',' << format_double(e.bound) << '\n';
      return 0;
    }
    if (*trc) {
      const ModelConfig config{trace_N, trace_qU, trace_qI, trace_seed};
      const Strategy s = parse_strategy(trace_strategy);
      const Trace trace = trace_anytime ? run_anytime(config, trace_T, s, alg_seed(trace_seed))
                                        : run(config, trace_T, s, alg_seed(trace_seed));
      std::unique_ptr<std::ofstream> holder;
      write_trace_csv(open_out(trace_out, holder), trace);
      return 0;
    }
    if (*wld) {
      const LatentWorld w = LatentWorld::generate({world_N, world_qU, world_qI, world_seed_opt});
      std::unique_ptr<std::ofstream> holder;
      open_out(world_out, holder) << write_world_snapshot(w) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == ErrorCode::kConstraintViolated ? kExitConstraint : 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
