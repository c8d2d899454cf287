#pragma once

#include <cstddef>
#include <span>

namespace chemdist {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Mean, unbiased variance and standard error of a sample.
struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; 0 when n < 2
  double se = 0.0;        // sqrt(variance / n)
};

Summary summarize(std::span<const double> xs);

/// Normal-approximation interval mean +- z * se at the given two-sided level.
Interval normal_interval(double mean, double se, double level = 0.95);

/// Exact (Clopper-Pearson) binomial interval for `successes` out of `trials`.
Interval clopper_pearson(std::size_t successes, std::size_t trials, double level = 0.95);

/// Quantile by linear interpolation between order statistics (R type 7). Sorts a copy.
double quantile(std::span<const double> xs, double q);

/// Standard error of the mean of paired differences a[i] - b[i].
double paired_difference_se(std::span<const double> a, std::span<const double> b);

}  // namespace chemdist
