#include "latrec/regularity.hpp"

#include <algorithm>

namespace latrec {

SignMatrix random_sign_matrix(Eigen::Index m, Eigen::Index n, CounterRng& rng) {
  SignMatrix A(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) A(i, j) = static_cast<std::int8_t>(rng.sign());
  }
  return A;
}

double regularity_work(Eigen::Index n, int s) {
  double choose = 1;
  for (int k = 0; k < s; ++k) choose = choose * static_cast<double>(n - k) / (k + 1);
  return choose * std::ldexp(1.0, s);
}

double regularity_prob_bound(double m, double n, int s, double eta) {
  const double b = 1 - 2 * std::pow(2 * n, s) * std::exp(-(eta * eta / 3) * m / std::ldexp(1.0, s));
  return std::clamp(b, 0.0, 1.0);
}

RegularityEstimate estimate_regularity_prob(Eigen::Index m, Eigen::Index n, int s, double eta, std::uint64_t trials,
                                            std::uint64_t seed, double z) {
  if (trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
  RegularityEstimate est;
  est.trials = trials;
  est.bound = regularity_prob_bound(static_cast<double>(m), static_cast<double>(n), s, eta);
  CounterRng root(seed);
  for (std::uint64_t k = 0; k < trials; ++k) {
    CounterRng rng = root.split(k);
    est.regular += is_column_regular(random_sign_matrix(m, n, rng), s, eta).regular;
  }
  est.rate = static_cast<double>(est.regular) / static_cast<double>(trials);
  est.ci = wilson(est.regular, trials, z);
  return est;
}

}  // namespace latrec
