#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "chemdist/estimators.hpp"
#include "chemdist/norm.hpp"

namespace chemdist {

/// Linear form mu_x(y) = <coefficients, y> supporting the mu-ball of radius mu(x) at x.
struct SupportFunctional {
  Point x;
  std::vector<double> coefficients;
  double mu_x_at_x = 0.0;

  double operator()(std::span<const int> y) const;
  double operator()(std::span<const double> y) const;
};

/// Picks the hull facet(s) of the estimated unit ball hit by the ray through x;
/// when x points at a vertex, the tied facet normals are averaged.
SupportFunctional build_support_functional(const NormEstimate& mu_est, std::span<const int> x);

/// Largest violations of the supporting-functional properties over the fan.
struct SupportCheck {
  double at_x_relative_error = 0.0;  // |mu_x(x) - mu(x)| / mu(x)
  double ball_excess = 0.0;          // max (mu_x(y) - mu(x)) / mu(x) over y on the ball of radius mu(x)
  double dual_excess = 0.0;          // max (|mu_x(y)| - mu(y)) / mu(y) over fan y
};
SupportCheck check_support_functional(const SupportFunctional& f, const NormEstimate& mu_est);

/// Memoized h(y) = E D*(0, y) for |y|_1 <= radius.
class HTable {
 public:
  HTable(int d, int radius, std::vector<double> mean, std::vector<double> se, std::uint64_t master_seed,
         std::size_t replications);

  int dim() const { return d_; }
  int radius() const { return radius_; }
  std::uint64_t master_seed() const { return master_seed_; }
  std::size_t replications() const { return replications_; }
  bool covers(std::span<const int> y) const;
  /// Throws InvalidArgument when y lies outside the table.
  double mean(std::span<const int> y) const;
  double se(std::span<const int> y) const;

 private:
  std::size_t slot(std::span<const int> y) const;

  int d_;
  int radius_;
  std::vector<double> mean_;
  std::vector<double> se_;
  std::uint64_t master_seed_;
  std::size_t replications_;
};

/// Monte Carlo h table from `replications` independent configurations (one BFS each).
HTable estimate_h_table(const ExperimentContext& ctx, int radius, std::size_t replications);

using HOracle = std::function<double(std::span<const int>)>;

/// Q_x(C) = { y : |y|_1 <= (2d+1)|x|_1, mu_x(y) <= mu(x), h(y) <= mu_x(y) + C |x|_1^{1/2} log |x|_1 }.
class QxSet {
 public:
  QxSet(SupportFunctional mu_x, double mu_at_x, double C, HOracle h);

  const SupportFunctional& functional() const { return mu_x_; }
  double mu_at_x() const { return mu_at_x_; }
  double C() const { return C_; }
  int x_norm() const { return x_norm_; }
  int dim() const { return static_cast<int>(mu_x_.x.size()); }
  /// C |x|_1^{1/2} log |x|_1.
  double slack() const;

  bool contains(std::span<const int> y) const;
  /// G_x = { y : mu_x(y) > mu(x) }.
  bool in_G(std::span<const int> y) const;
  double h(std::span<const int> y) const { return h_(y); }

 private:
  SupportFunctional mu_x_;
  double mu_at_x_;
  double C_;
  int x_norm_;
  HOracle h_;
};

bool qx_membership(const QxSet& q, std::span<const int> y);

/// Greedy-maximal waypoints of a path: `indices` are the u_i, `waypoints` the gamma(u_i).
struct Skeleton {
  std::vector<Point> waypoints;
  std::vector<std::size_t> indices;
  /// Number of increments m.
  std::size_t length() const { return waypoints.empty() ? 0 : waypoints.size() - 1; }
};

using Membership = std::function<bool(std::span<const int>)>;

/// u_0 = 0; u_{i+1} is the last index before the first j with gamma(j) - gamma(u_i)
/// outside the set (or the end of the path). Throws InvalidArgument when a single
/// step cannot be taken.
Skeleton extract_skeleton(std::span<const Point> path, const Membership& in_set);
Skeleton extract_skeleton(std::span<const Point> path, const QxSet& q);

struct IncrementCounts {
  std::size_t short_count = 0;  // increments in Delta_x
  std::size_t long_count = 0;   // increments in D_x
};

/// Classifies the m - 1 maximal increments (all but the last).
IncrementCounts increment_classification(const QxSet& q, const Skeleton& skeleton);

/// Smallest C on the grid c0 * ratio^k (k < steps) such that every y with
/// |y|_1 <= |x|_1^{1/2} belongs to Q_x(C).
double calibrate_C(const SupportFunctional& mu_x, double mu_at_x, const HOracle& h, double c0 = 0.05,
                   double ratio = 1.4142135623730951, int steps = 48);

struct IncrementLemmaCheck {
  std::size_t members = 0;
  std::size_t clause1_violations = 0;  // mu(y) > 2 mu(x) + slack or |y|_1 > 2d |x|_1
  std::size_t clause2_violations = 0;  // y in Delta_x with h(y) - mu_x(y) < slack / 2
  std::size_t clause3_violations = 0;  // y in D_x with mu_x(y) < 5/6 mu(x)
  std::size_t clause4_violations = 0;  // |y|_1 <= |x|_1^{1/2} but y outside Q_x
  double max_mu_ratio = 0.0;           // max mu(y) / mu(x) over members
};

/// Scans every y with |y|_1 <= (2d+1)|x|_1 (the table must cover that ball).
/// `mu_slack` is the allowance added to 2 mu(x) in clause 1.
IncrementLemmaCheck check_increment_lemma(const QxSet& q, const NormEstimate& mu_est, double mu_slack = 0.0);

struct ThresholdReport {
  int M_hat = -1;  // smallest tested |x|_1 with all four clauses passing; -1 when none
  std::vector<std::pair<int, bool>> tested;  // (|x|_1, all clauses hold)
};

/// Tries x = m e_1 for each m in `multiples` (ascending), each with its own calibrated C.
ThresholdReport estimate_threshold_M(const NormEstimate& mu_est, const HTable& table, std::span<const int> multiples);

struct SkeletonRow {
  std::size_t replication = 0;
  int n = 0;
  std::size_t m = 0;         // skeleton vertices (0* ... (nx)*)
  std::size_t vertices = 0;  // m + 2 after adding 0 and nx
  std::size_t bound = 0;     // 2n + 1
  bool pass = false;
  std::size_t short_count = 0;
  std::size_t long_count = 0;
};

struct SkeletonExperimentResult {
  std::vector<SkeletonRow> rows;
  double pass_fraction = 0.0;
  std::size_t rejections = 0;
};

/// Skeleton of the canonical geodesic from 0* to (nx)*, padded with 0 and nx.
SkeletonExperimentResult skeleton_length_experiment(const ExperimentContext& ctx, std::span<const int> x, int n,
                                                    const QxSet& q, std::size_t replications);

}  // namespace chemdist
