#pragma once

#include <cstdint>
#include <span>

namespace latrec {

struct Summary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation (n - 1)
  double stderr_ = 0;
  std::size_t n = 0;
};

Summary summarize(std::span<const double> xs);

struct Interval {
  double lo;
  double hi;
};

/// Wilson score interval for k successes in n trials at z standard errors.
Interval wilson(std::uint64_t k, std::uint64_t n, double z = 3.0);

/// Binomial standard error of a rate p over n trials.
double binomial_stderr(double p, std::uint64_t n);

}  // namespace latrec
