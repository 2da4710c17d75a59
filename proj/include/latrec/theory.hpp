#pragma once

// Closed-form regret curves, thresholds, lower bounds and the heuristic cost
// model. Everything here is a pure function of (N, q_U, q_I, T); all logs are
// base 2.

#include <cstdint>
#include <string>
#include <vector>

namespace latrec {

double lg(double x);
/// log2(log2(x)), taken as 0 when x <= 2.
double loglog(double x);

std::uint32_t r_user(double N, double q_U);
std::uint32_t r_item(double N, double q_I);

double k_item(double N, double q_I, double r_I, double T);
double k_hybrid(double q_U, double q_I, double r_U, double r_I, double T);

struct Thresholds {
  double T1 = 0, T2 = 0, T3 = 0, T4 = 0, T5 = 0;
  std::uint32_t s_U = 0, s_I = 0;
  double eta = 1.0 / 13.0;
  std::uint32_t r_U = 0, r_I = 0;
  // 0 when no T >= 1 satisfies the defining inequality.
  std::uint64_t T_Item = 0, T_Hybrid = 0;
};

Thresholds thresholds(double N, double q_U, double q_I);

enum class Regime { kCold, kItem, kUser, kHybrid, kAsymptotic };
const char* to_string(Regime regime);

/// One row of the optimal-regret table: a T range plus a parameter condition.
struct RegimeRow {
  Regime regime;
  double lo;        // range is (lo, hi], except the cold row which is [1, hi]
  double hi;
  bool closed_lo;
  bool active;      // parameter condition holds
};

/// Indices (into regime_rows()) of every table row whose range and condition
/// contain T. Usually exactly one.
std::vector<int> matching_rows(double N, double q_U, double q_I, double T);
/// All eight table rows in table order, with their condition evaluated.
std::vector<RegimeRow> regime_rows(double N, double q_U, double q_I);

struct RegretValue {
  double R;
  Regime regime;
};

/// Unscaled optimal regret R(T). When table rows overlap, the row with the
/// larger T range wins; throws kAmbiguousRegime when no row matches.
RegretValue regret_curve_R(double N, double q_U, double q_I, double T);

struct UpperCurves {
  double R_U;
  double R_I;
};
UpperCurves upper_curves(double N, double q_U, double q_I, double T);

/// Closed-form regret lower bound (per user, constant omitted).
double lower_bound(double N, double q_U, double q_I, double T);

/// Pieces of the minimax over gamma; values are bad-recommendation counts.
double minimax_f1(double T, double q_I, double gamma);
double minimax_f2(double N, double q_U, double s_U, double gamma);
double minimax_f3(double T, double q_U, double s_I);

struct Minimax {
  double value;
  double gamma;
};
/// min over gamma >= 1 of max{f1, f2, f3}, by a log grid refined at the
/// breakpoints and crossing points of the pieces.
Minimax lower_bound_minimax(double N, double q_U, double q_I, double T);

enum class HeuristicRegime { kS1, kS2, kS3, kS4, kS5 };
const char* to_string(HeuristicRegime regime);

struct HeuristicParams {
  double I_usr;
  double I_rep;
  double I_exp;
  HeuristicRegime regime;
  double cost;  // per-user regret
  double f;
  double g;
};
HeuristicParams heuristic_params(double N, double T, double q_U, double q_I);

struct ColdStartBounds {
  double upper;
  double lower;
};
ColdStartBounds coldstart_bounds(double N, double q_U, double q_I);

/// Names of violated model assumptions, in a fixed order.
std::vector<std::string> check_assumptions(double N, double q_U, double q_I);

struct TheoryPoint {
  double T;
  double R;
  Regime regime;
  double R_U;
  double R_I;
  double lower;
  std::vector<std::string> violations;
};
TheoryPoint theory_point(double N, double q_U, double q_I, double T);

std::string join_violations(const std::vector<std::string>& v);

}  // namespace latrec
