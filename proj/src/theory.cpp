#include "latrec/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latrec/error.hpp"

namespace latrec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSearchCap = std::uint64_t{1} << 62;

double floor_plus(double x) { return x > 0 ? std::floor(x) : 0.0; }

// x / y with x / 0 treated as +inf, for terms like NT / log q_I when q_I = 1.
double div_or_inf(double x, double y) { return y > 0 ? x / y : kInf; }

// Largest integer T >= 1 with pred(T); 0 if pred(1) fails. pred must be
// monotone (true then false).
template <typename Pred>
std::uint64_t last_true(Pred pred) {
  if (!pred(1.0)) return 0;
  std::uint64_t lo = 1, hi = 2;
  while (pred(static_cast<double>(hi))) {
    lo = hi;
    if (hi >= kSearchCap) return hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (pred(static_cast<double>(mid))) lo = mid; else hi = mid;
  }
  return lo;
}

}  // namespace

double lg(double x) { return std::log2(x); }

double loglog(double x) { return x > 2 ? std::log2(std::log2(x)) : 0.0; }

std::uint32_t r_user(double N, double q_U) {
  return static_cast<std::uint32_t>(std::ceil(2 * lg(N * q_U * q_U)));
}

std::uint32_t r_item(double N, double q_I) {
  return static_cast<std::uint32_t>(std::ceil(2 * lg(N * q_I)));
}

double k_item(double N, double q_I, double r_I, double T) {
  return 16 * lg(T) + 2 * std::sqrt(q_I * r_I * T / N);
}

double k_hybrid(double q_U, double q_I, double r_U, double r_I, double T) {
  return 8 * r_U + 2 * std::sqrt(r_I * q_I * T / q_U);
}

Thresholds thresholds(double N, double q_U, double q_I) {
  Thresholds th;
  th.T1 = lg(q_U);
  th.T2 = q_I / N;
  th.T3 = q_I / q_U;
  th.T4 = N * lg(q_U) * lg(q_U) / q_I;
  th.T5 = q_I * q_U;
  th.s_U = static_cast<std::uint32_t>(floor_plus(lg(q_U) - loglog(q_I) - loglog(N) - 12));
  th.s_I = static_cast<std::uint32_t>(floor_plus(0.99 * lg(q_I) - 4 * loglog(N) - 12));
  th.r_U = r_user(N, q_U);
  th.r_I = r_item(N, q_I);
  const double r_U = th.r_U, r_I = th.r_I;
  th.T_Item = last_true([&](double T) { return k_item(N, q_I, r_I, T) <= r_U; });
  th.T_Hybrid = last_true([&](double T) { return k_hybrid(q_U, q_I, r_U, r_I, T) <= q_I / 3; });
  return th;
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::kCold: return "Cold";
    case Regime::kItem: return "Item";
    case Regime::kUser: return "User";
    case Regime::kHybrid: return "Hybrid";
    case Regime::kAsymptotic: return "Asymptotic";
  }
  return "?";
}

std::vector<RegimeRow> regime_rows(double N, double q_U, double q_I) {
  const Thresholds th = thresholds(N, q_U, q_I);
  const bool item_first = th.T2 <= th.T1;
  const bool rich_users = lg(q_I) <= q_U;
  return {
      {Regime::kCold, 1, std::min(th.T1, th.T2), true, true},
      {Regime::kItem, th.T2, th.T4, false, item_first},
      {Regime::kUser, th.T1, th.T3, false, !item_first && rich_users},
      {Regime::kHybrid, th.T3, th.T5, false, !item_first && rich_users},
      {Regime::kHybrid, th.T4, th.T5, false, item_first && rich_users},
      {Regime::kAsymptotic, th.T5, kInf, false, rich_users},
      {Regime::kAsymptotic, th.T1, kInf, false, !item_first && !rich_users},
      {Regime::kAsymptotic, th.T4, kInf, false, item_first && !rich_users},
  };
}

std::vector<int> matching_rows(double N, double q_U, double q_I, double T) {
  std::vector<int> out;
  const auto rows = regime_rows(N, q_U, q_I);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const RegimeRow& row = rows[k];
    if (!row.active) continue;
    const bool above = row.closed_lo ? T >= row.lo : T > row.lo;
    if (above && T <= row.hi) out.push_back(static_cast<int>(k));
  }
  return out;
}

RegretValue regret_curve_R(double N, double q_U, double q_I, double T) {
  const auto rows = matching_rows(N, q_U, q_I, T);
  if (rows.empty()) {
    throw Error(ErrorCode::kAmbiguousRegime, "no regret-table row covers T=" + std::to_string(T));
  }
  switch (rows.back()) {
    case 0: return {T, Regime::kCold};
    case 1: return {1 + std::sqrt(q_I * T / N), Regime::kItem};
    case 2: return {lg(q_U) + q_U * T / N, Regime::kUser};
    case 3:
    case 4: return {lg(q_U) + std::sqrt(q_I * q_U * T) / N, Regime::kHybrid};
    case 5: return {lg(q_U) + q_I * q_U / N + lg(q_I) * T / N, Regime::kAsymptotic};
    default: return {lg(q_U) + q_U * T / N, Regime::kAsymptotic};
  }
}

UpperCurves upper_curves(double N, double q_U, double q_I, double T) {
  const Thresholds th = thresholds(N, q_U, q_I);
  const double r_U = th.r_U, r_I = th.r_I;
  UpperCurves c;
  c.R_U = r_U + q_U * T / N;
  if (T < static_cast<double>(th.T_Item)) {
    c.R_I = lg(T) + std::sqrt(q_I * r_I * T / N);
  } else if (T < static_cast<double>(th.T_Hybrid)) {
    c.R_I = r_U + std::sqrt(q_I * q_U * r_I * T) / N;
  } else {
    c.R_I = r_U + q_U / N * q_I * lg(N * q_I) + r_I * T / N;
  }
  return c;
}

double lower_bound(double N, double q_U, double q_I, double T) {
  const Thresholds th = thresholds(N, q_U, q_I);
  const double s_U = th.s_U, s_I = th.s_I;
  const double root_qI = std::sqrt(q_I);
  const double terms[] = {
      N,
      std::min({N * T, N * s_U, root_qI}),
      std::min(q_U * T, root_qI),
      std::min({div_or_inf(N * T, lg(q_I)), std::sqrt(T * q_I * N), N * s_U}),
      std::min(div_or_inf(q_U * T, lg(q_I)), std::sqrt(T * q_I * q_U)),
      std::min(T * s_I, T * q_U),
  };
  return *std::max_element(std::begin(terms), std::end(terms)) / N;
}

double minimax_f1(double T, double q_I, double gamma) {
  if (gamma < div_or_inf(T, 8 * lg(q_I))) return T * q_I / gamma;
  if (gamma < T / 2) return std::sqrt(q_I);
  return T;
}

double minimax_f2(double N, double q_U, double s_U, double gamma) {
  return std::max(q_U * gamma, N * std::min(s_U, gamma));
}

double minimax_f3(double T, double q_U, double s_I) { return T * std::min(s_I, q_U); }

Minimax lower_bound_minimax(double N, double q_U, double q_I, double T) {
  const Thresholds th = thresholds(N, q_U, q_I);
  const double s_U = th.s_U, s_I = th.s_I;
  auto objective = [&](double g) {
    return std::max({minimax_f1(T, q_I, g), minimax_f2(N, q_U, s_U, g), minimax_f3(T, q_U, s_I)});
  };

  // Past T/2, f1 is flat and f2 only grows, so the search can stop at T.
  const double hi = std::max(1.0, T);
  std::vector<double> cand{1.0, hi};
  const int steps = 4000;
  for (int k = 0; k <= steps; ++k) cand.push_back(std::pow(hi, static_cast<double>(k) / steps));
  const double breaks[] = {div_or_inf(T, 8 * lg(q_I)), T / 2, s_U, std::sqrt(T * q_I / q_U),
                           std::sqrt(T * q_I / N), div_or_inf(T * q_I, N * s_U)};
  for (double b : breaks) {
    if (!std::isfinite(b)) continue;
    for (double x : {b, std::nextafter(b, 0.0), std::nextafter(b, kInf)}) cand.push_back(x);
  }

  Minimax best{kInf, 1.0};
  for (double g : cand) {
    if (!(g >= 1.0) || !std::isfinite(g)) continue;
    const double v = objective(g);
    if (v < best.value) best = {v, g};
  }
  return best;
}

const char* to_string(HeuristicRegime regime) {
  switch (regime) {
    case HeuristicRegime::kS1: return "S1";
    case HeuristicRegime::kS2: return "S2";
    case HeuristicRegime::kS3: return "S3";
    case HeuristicRegime::kS4: return "S4";
    case HeuristicRegime::kS5: return "S5";
  }
  return "?";
}

HeuristicParams heuristic_params(double N, double T, double q_U, double q_I) {
  const double r_U = r_user(N, q_U);
  const double r_I = r_item(N, q_I);

  HeuristicParams f_side;
  if (T <= q_I * r_I / q_U || q_U <= r_I) {
    f_side = {r_U, 2 * T, 0, HeuristicRegime::kS1, r_U / 2 + q_U * T / N, 0, 0};
  } else if (T <= q_I * q_U / r_I) {
    f_side = {r_U, 2 * std::sqrt(T * q_I * r_I / q_U), 2 * std::sqrt(T * q_I * q_U / r_I) - 2 * q_I,
              HeuristicRegime::kS2, r_U / 2 + 2 * std::sqrt(q_U * q_I * r_I * T) / N - q_I * r_I / N, 0, 0};
  } else {
    f_side = {r_U, 2 * q_I, 2 * T - 2 * q_I, HeuristicRegime::kS3,
              r_U / 2 + q_I * (q_U - r_I) / N + r_I * T / N, 0, 0};
  }

  HeuristicParams g_side;
  if (T <= q_I * N / r_I) {
    g_side = {0, 2 * std::sqrt(q_I * r_I * T / N), 2 * std::sqrt(q_I * T * N / r_I), HeuristicRegime::kS4,
              2 * std::sqrt(q_I * r_I * T / N), 0, 0};
  } else {
    g_side = {0, 2 * q_I, 2 * T, HeuristicRegime::kS5, q_I + r_I * T / N, 0, 0};
  }

  HeuristicParams out = f_side.cost <= g_side.cost ? f_side : g_side;
  out.f = f_side.cost;
  out.g = g_side.cost;
  return out;
}

ColdStartBounds coldstart_bounds(double N, double q_U, double q_I) {
  const double lN = lg(N), lqI = lg(q_I), lNq = lg(N * q_I);
  ColdStartBounds b;
  b.upper = std::min(lN * lN, std::max(q_I * lqI / N * lNq * lNq, 16.0));
  b.lower = std::min(lN * lg(q_U), std::max(q_I * lqI * lqI / N, 16.0));
  return b;
}

std::vector<std::string> check_assumptions(double N, double q_U, double q_I) {
  std::vector<std::string> v;
  const double lN = lg(N), lqU = lg(q_U), lqI = lg(q_I);
  if (!(N > 100)) v.emplace_back("N>100");
  if (!(N > 20 * q_U * lqU * lqU)) v.emplace_back("N>20qU*log2(qU)^2");
  if (!(q_U > 100 * lN)) v.emplace_back("qU>100*log2(N)");
  if (!(q_I > 100 * lN)) v.emplace_back("qI>100*log2(N)");
  if (!(q_U > lqI * lqI)) v.emplace_back("qU>log2(qI)^2");
  if (!(q_I > std::pow(lN, 5))) v.emplace_back("qI>log2(N)^5");
  return v;
}

TheoryPoint theory_point(double N, double q_U, double q_I, double T) {
  TheoryPoint p;
  p.T = T;
  const RegretValue r = regret_curve_R(N, q_U, q_I, T);
  p.R = r.R;
  p.regime = r.regime;
  const UpperCurves c = upper_curves(N, q_U, q_I, T);
  p.R_U = c.R_U;
  p.R_I = c.R_I;
  p.lower = lower_bound(N, q_U, q_I, T);
  p.violations = check_assumptions(N, q_U, q_I);
  return p;
}

std::string join_violations(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& name : v) {
    if (!out.empty()) out += ';';
    out += name;
  }
  return out;
}

}  // namespace latrec
