#pragma once

// Monte Carlo experiments over strategies, parameter grids and horizons.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "latrec/algorithm.hpp"
#include "latrec/instrumentation.hpp"
#include "latrec/theory.hpp"

namespace latrec {

enum class ParamsMode { kMaxT, kPerT };
const char* to_string(ParamsMode mode);
ParamsMode parse_params_mode(const std::string& name);

struct ExperimentSpec {
  std::vector<std::uint32_t> N{200};
  std::vector<std::uint32_t> q_U{4};
  std::vector<std::uint32_t> q_I{32};
  std::vector<std::uint32_t> checkpoints{64};  // sorted, distinct; the last is the horizon
  std::vector<Strategy> strategies{Strategy::kRecsys, Strategy::kRandom};
  std::uint32_t trials = 20;
  std::uint64_t base_seed = 1;
  double gamma = 1.0;
  bool audit = false;
  ParamsMode params_mode = ParamsMode::kMaxT;
  // Bad-event thresholds for audits; the model's own values when unset.
  std::optional<std::uint32_t> s_I;
  std::optional<std::uint32_t> s_U;
  unsigned threads = 0;  // 0 picks the hardware concurrency

  void validate() const;
  std::uint32_t horizon() const { return checkpoints.back(); }
};

/// Parses a flat JSON object. Scalar or array values for N, q_U, q_I, T and
/// strategies; unknown keys are rejected.
ExperimentSpec parse_spec(const std::string& json_text);
ExperimentSpec load_spec(const std::string& path);

struct CurvePoint {
  std::uint32_t N = 0, q_U = 0, q_I = 0;
  Strategy strategy = Strategy::kRandom;
  std::uint32_t T = 0;
  double regret_mean = 0;
  double regret_stderr = 0;
  double R_theory = 0;
  Regime regime = Regime::kCold;
  double R_U = 0, R_I = 0, lower = 0;
  std::string violations;
  std::uint32_t n_trials = 0;
};

struct ExperimentResult {
  std::vector<CurvePoint> rows;
  std::uint64_t traces_audited = 0;
  std::uint64_t constraint_failures = 0;  // traces with any failing constraint
  std::string first_failure;
};

/// World seed of trial k; the algorithm seed is derived from it, so every
/// strategy in a trial sees the same world.
std::uint64_t world_seed(std::uint64_t base_seed, std::uint32_t trial);
std::uint64_t alg_seed(std::uint64_t world_seed);

/// Curves for one (N, q_U, q_I); the spec's grids must be singletons.
ExperimentResult monte_carlo(const ExperimentSpec& spec);
/// Cartesian product over the spec's N, q_U and q_I lists.
ExperimentResult sweep(const ExperimentSpec& spec);

/// First checkpoint where mean_regret(T) / T <= gamma / log2(N T).
std::optional<std::uint32_t> estimate_coldstart(const std::vector<CurvePoint>& curve, double gamma, std::uint32_t N);

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& rows);
std::string format_double(double x);

}  // namespace latrec
