#include "chemdist/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include "chemdist/types.hpp"

namespace chemdist {

Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  // Welford keeps the variance exact (zero) for constant samples.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  s.mean = mean;
  if (s.n >= 2) {
    s.variance = m2 / static_cast<double>(s.n - 1);
    s.se = std::sqrt(s.variance / static_cast<double>(s.n));
  }
  return s;
}

Interval normal_interval(double mean, double se, double level) {
  const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 0.5 + level / 2.0);
  return {mean - z * se, mean + z * se};
}

Interval clopper_pearson(std::size_t successes, std::size_t trials, double level) {
  if (trials == 0) throw InvalidArgument("binomial interval needs at least one trial");
  if (successes > trials) throw InvalidArgument("more successes than trials");
  const double alpha = 1.0 - level;
  const auto k = static_cast<double>(successes);
  const auto n = static_cast<double>(trials);
  Interval ci{0.0, 1.0};
  if (successes > 0) ci.low = boost::math::quantile(boost::math::beta_distribution<double>(k, n - k + 1), alpha / 2);
  if (successes < trials)
    ci.high = boost::math::quantile(boost::math::beta_distribution<double>(k + 1, n - k), 1 - alpha / 2);
  return ci;
}

double quantile(std::span<const double> xs, double q) {
  if (xs.empty()) throw InvalidArgument("quantile of an empty sample");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double paired_difference_se(std::span<const double> a, std::span<const double> b) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return summarize(diff).se;
}

}  // namespace chemdist
