#pragma once

// Exact (s, eta)-regularity checks for sign matrices. The checks take any
// Eigen expression, so a transpose or a block can be passed without a copy.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "latrec/error.hpp"
#include "latrec/rng.hpp"
#include "latrec/stats.hpp"

namespace latrec {

using SignMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kDefaultEnumerationCap = 5e8;

/// m x n matrix of independent fair signs.
SignMatrix random_sign_matrix(Eigen::Index m, Eigen::Index n, CounterRng& rng);

/// Rows of A restricted to `cols` that equal `pattern`.
template <typename Derived>
Eigen::Index lambda_count(const Eigen::MatrixBase<Derived>& A, std::span<const Eigen::Index> cols,
                          std::span<const int> pattern) {
  if (cols.size() != pattern.size()) throw Error(ErrorCode::kLengthMismatch, "cols and pattern differ in length");
  for (std::size_t a = 0; a < cols.size(); ++a) {
    if (cols[a] < 0 || cols[a] >= A.cols()) throw Error(ErrorCode::kIndexOutOfRange, "column index");
    if (pattern[a] != 1 && pattern[a] != -1) throw Error(ErrorCode::kInvalidArgument, "pattern entries must be +1 or -1");
    for (std::size_t b = 0; b < a; ++b) {
      if (cols[a] == cols[b]) throw Error(ErrorCode::kInvalidArgument, "column indices must be distinct");
    }
  }
  Eigen::Index count = 0;
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    bool match = true;
    for (std::size_t a = 0; a < cols.size() && match; ++a) match = A(r, cols[a]) == pattern[a];
    count += match;
  }
  return count;
}

struct RegularityResult {
  bool regular = true;
  double max_deviation = 0;  // max | Lambda - m / 2^s |
  double tolerance = 0;      // eta * m / 2^s
  std::vector<Eigen::Index> cols;  // worst witness
  std::vector<int> pattern;
  Eigen::Index count = 0;
};

/// Work of the exhaustive check: C(n, s) * 2^s.
double regularity_work(Eigen::Index n, int s);

/// Exhaustive check over unordered column s-tuples and all 2^s patterns.
template <typename Derived>
RegularityResult is_column_regular(const Eigen::MatrixBase<Derived>& A, int s, double eta,
                                   double cap = kDefaultEnumerationCap) {
  const Eigen::Index m = A.rows(), n = A.cols();
  if (s < 0 || s > n) throw Error(ErrorCode::kInvalidArgument, "s must lie in [0, n]");
  if (!(eta > 0)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  if (s > 30 || regularity_work(n, s) > cap) {
    throw Error(ErrorCode::kCombinatorialBlowup, "C(n,s)*2^s exceeds the enumeration cap");
  }
  RegularityResult res;
  const double target = static_cast<double>(m) / std::ldexp(1.0, s);
  res.tolerance = eta * target;
  res.count = m;
  if (s == 0) return res;

  std::vector<Eigen::Index> cols(s);
  for (int a = 0; a < s; ++a) cols[a] = a;
  std::vector<Eigen::Index> counts(std::size_t{1} << s);
  bool first = true;
  while (true) {
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index r = 0; r < m; ++r) {
      std::size_t code = 0;
      for (int a = 0; a < s; ++a) code |= std::size_t{A(r, cols[a]) > 0} << a;
      ++counts[code];
    }
    for (std::size_t code = 0; code < counts.size(); ++code) {
      const double dev = std::abs(static_cast<double>(counts[code]) - target);
      if (first || dev > res.max_deviation) {
        first = false;
        res.max_deviation = dev;
        res.cols = cols;
        res.count = counts[code];
        res.pattern.assign(s, -1);
        for (int a = 0; a < s; ++a) {
          if (code >> a & 1) res.pattern[a] = 1;
        }
      }
    }
    // Next combination in lexicographic order.
    int a = s - 1;
    while (a >= 0 && cols[a] == n - s + a) --a;
    if (a < 0) break;
    ++cols[a];
    for (int b = a + 1; b < s; ++b) cols[b] = cols[b - 1] + 1;
  }
  res.regular = res.max_deviation <= res.tolerance;
  return res;
}

template <typename Derived>
RegularityResult is_row_regular(const Eigen::MatrixBase<Derived>& A, int s, double eta,
                                double cap = kDefaultEnumerationCap) {
  return is_column_regular(A.transpose(), s, eta, cap);
}

/// Analytic lower bound on the probability that a uniform m x n sign matrix
/// is (s, eta)-column regular, clamped to [0, 1].
double regularity_prob_bound(double m, double n, int s, double eta);

struct RegularityEstimate {
  std::uint64_t trials = 0;
  std::uint64_t regular = 0;
  double rate = 0;
  Interval ci{0, 1};
  double bound = 0;
};

RegularityEstimate estimate_regularity_prob(Eigen::Index m, Eigen::Index n, int s, double eta, std::uint64_t trials,
                                            std::uint64_t seed, double z = 3.0);

}  // namespace latrec
