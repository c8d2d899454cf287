#include "chemdist/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chemdist/clusters.hpp"
#include "chemdist/distance.hpp"
#include "chemdist/sampling.hpp"
#include "chemdist/stats.hpp"

namespace chemdist {

double SupportFunctional::operator()(std::span<const int> y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) s += coefficients[i] * y[i];
  return s;
}

double SupportFunctional::operator()(std::span<const double> y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) s += coefficients[i] * y[i];
  return s;
}

SupportFunctional build_support_functional(const NormEstimate& mu_est, std::span<const int> x) {
  const int d = mu_est.dim();
  if (d != 2 && d != 3) throw InvalidArgument("supporting functionals are implemented for d = 2 and 3 only");
  if (x.size() != static_cast<std::size_t>(d)) throw InvalidArgument("x has the wrong dimension");
  if (l1_norm(x) == 0) throw InvalidArgument("supporting functional of the zero vector is undefined");
  const auto& facets = mu_est.facets();
  const std::vector<double> xd(x.begin(), x.end());
  const double top = mu_est.mu(xd);

  std::vector<double> normal(static_cast<std::size_t>(d), 0.0);
  int tied = 0;
  for (const auto& f : facets) {
    double v = 0.0;
    for (int i = 0; i < d; ++i) v += f.normal[i] * xd[i];
    if (v >= top - 1e-9 * top) {
      for (int i = 0; i < d; ++i) normal[i] += f.normal[i];
      ++tied;
    }
  }
  if (tied == 0) throw InvalidArgument("x is not in the positive hull of the fan; refine the fan");
  double at_x = 0.0;
  for (int i = 0; i < d; ++i) at_x += normal[i] * xd[i];
  if (!(at_x > 0.0)) throw InvalidArgument("degenerate hull: supporting facet does not face x");
  // Rescale so that mu_x(x) = mu(x).
  for (double& c : normal) c *= top / at_x;

  SupportFunctional f;
  f.x.assign(x.begin(), x.end());
  f.coefficients = std::move(normal);
  f.mu_x_at_x = top;
  return f;
}

SupportCheck check_support_functional(const SupportFunctional& f, const NormEstimate& mu_est) {
  SupportCheck check;
  const double mx = mu_est.mu(f.x);
  check.at_x_relative_error = std::abs(f(f.x) - mx) / mx;
  check.ball_excess = -std::numeric_limits<double>::infinity();
  check.dual_excess = -std::numeric_limits<double>::infinity();
  for (const auto& e : mu_est.fan()) {
    const double my = mu_est.mu(e.direction);
    std::vector<double> on_ball(e.direction.begin(), e.direction.end());
    for (double& c : on_ball) c *= mx / my;
    check.ball_excess = std::max(check.ball_excess, (f(on_ball) - mx) / mx);
    check.dual_excess = std::max(check.dual_excess, (std::abs(f(e.direction)) - my) / my);
  }
  return check;
}

HTable::HTable(int d, int radius, std::vector<double> mean, std::vector<double> se, std::uint64_t master_seed,
               std::size_t replications)
    : d_(d), radius_(radius), mean_(std::move(mean)), se_(std::move(se)), master_seed_(master_seed),
      replications_(replications) {
  std::size_t cells = 1;
  for (int a = 0; a < d; ++a) cells *= static_cast<std::size_t>(2 * radius + 1);
  if (mean_.size() != cells || se_.size() != cells) throw InvalidArgument("h table storage has the wrong size");
}

bool HTable::covers(std::span<const int> y) const {
  return y.size() == static_cast<std::size_t>(d_) && l1_norm(y) <= radius_;
}

std::size_t HTable::slot(std::span<const int> y) const {
  if (!covers(y))
    throw InvalidArgument("h estimate unavailable at " + format_point(y) + ": table radius is " +
                          std::to_string(radius_));
  std::size_t s = 0;
  for (int c : y) s = s * static_cast<std::size_t>(2 * radius_ + 1) + static_cast<std::size_t>(c + radius_);
  return s;
}

double HTable::mean(std::span<const int> y) const { return mean_[slot(y)]; }
double HTable::se(std::span<const int> y) const { return se_[slot(y)]; }

HTable estimate_h_table(const ExperimentContext& ctx, int radius, std::size_t replications) {
  if (radius < 1) throw InvalidArgument("h table radius must be >= 1");
  if (replications < 1) throw InvalidArgument("h table needs at least one replication");
  const BoxSpec& spec = ctx.spec;
  const int d = spec.dim();
  require_measurement_point(spec, unit_vector(d, 0, radius));

  // Cube [-radius, radius]^d in lexicographic order; cells outside the l1 ball stay unused.
  std::vector<Point> cells;
  Point y(static_cast<std::size_t>(d), -radius);
  while (true) {
    cells.push_back(y);
    int a = d - 1;
    while (a >= 0 && y[a] == radius) y[a--] = -radius;
    if (a < 0) break;
    ++y[a];
  }
  std::vector<std::vector<std::uint32_t>> values(replications);
  parallel_for(replications, ctx.threads, [&](std::size_t r) {
    auto sample = sample_with_giant(spec, ctx.p, replication_seed(ctx.master_seed, "htable", r), ctx.max_attempts);
    const StarProjection star(sample.labels);
    const DistanceField field = bfs_distance(sample.cfg, star(spec.index(Point(static_cast<std::size_t>(d), 0))));
    values[r].assign(cells.size(), 0);
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (l1_norm(cells[c]) <= radius) values[r][c] = field.raw(star(spec.index(cells[c])));
  });
  std::vector<double> mean(cells.size(), 0.0), se(cells.size(), 0.0);
  std::vector<double> column(replications);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (l1_norm(cells[c]) > radius) continue;
    for (std::size_t r = 0; r < replications; ++r) column[r] = values[r][c];
    const auto sum = summarize(column);
    mean[c] = sum.mean;
    se[c] = sum.se;
  }
  return HTable(d, radius, std::move(mean), std::move(se), ctx.master_seed, replications);
}

QxSet::QxSet(SupportFunctional mu_x, double mu_at_x, double C, HOracle h)
    : mu_x_(std::move(mu_x)), mu_at_x_(mu_at_x), C_(C), x_norm_(l1_norm(mu_x_.x)), h_(std::move(h)) {
  if (!(C >= 0.0)) throw InvalidArgument("Q_x constant C must be >= 0");
  if (x_norm_ < 1) throw InvalidArgument("Q_x needs x != 0");
}

double QxSet::slack() const {
  const double n = x_norm_;
  return C_ * std::sqrt(n) * std::log(n);
}

bool QxSet::in_G(std::span<const int> y) const {
  return mu_x_(y) > mu_at_x_ * (1.0 + 1e-12) + 1e-12;
}

bool QxSet::contains(std::span<const int> y) const {
  if (l1_norm(y) > (2 * dim() + 1) * x_norm_) return false;
  if (in_G(y)) return false;
  return h_(y) <= mu_x_(y) + slack();
}

bool qx_membership(const QxSet& q, std::span<const int> y) { return q.contains(y); }

Skeleton extract_skeleton(std::span<const Point> path, const Membership& in_set) {
  if (path.empty()) throw InvalidArgument("cannot extract the skeleton of an empty path");
  Skeleton s;
  std::size_t u = 0;
  s.indices.push_back(0);
  s.waypoints.push_back(path[0]);
  const std::size_t last = path.size() - 1;
  while (u < last) {
    if (!in_set(subtract(path[u + 1], path[u])))
      throw InvalidArgument("skeleton cannot advance: step " + std::to_string(u) + " -> " + std::to_string(u + 1) +
                            " (increment " + format_point(subtract(path[u + 1], path[u])) +
                            ") is outside the set; C is too small");
    std::size_t j = u + 1;
    while (j < last && in_set(subtract(path[j + 1], path[u]))) ++j;
    u = j;
    s.indices.push_back(u);
    s.waypoints.push_back(path[u]);
  }
  return s;
}

Skeleton extract_skeleton(std::span<const Point> path, const QxSet& q) {
  return extract_skeleton(path, [&q](std::span<const int> y) { return q.contains(y); });
}

namespace {

template <class Pred>
bool any_neighbor(std::span<const int> y, Pred&& pred) {
  Point z(y.begin(), y.end());
  for (std::size_t a = 0; a < z.size(); ++a) {
    for (int sign : {-1, 1}) {
      z[a] += sign;
      const bool hit = pred(z);
      z[a] -= sign;
      if (hit) return true;
    }
  }
  return false;
}

}  // namespace

IncrementCounts increment_classification(const QxSet& q, const Skeleton& skeleton) {
  IncrementCounts counts;
  const std::size_t m = skeleton.length();
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const Point y = subtract(skeleton.waypoints[i + 1], skeleton.waypoints[i]);
    if (any_neighbor(y, [&](const Point& z) { return q.in_G(z); })) {
      ++counts.long_count;
    } else if (any_neighbor(y, [&](const Point& z) { return !q.contains(z); })) {
      ++counts.short_count;
    } else {
      throw InvalidArgument("increment " + format_point(y) + " is neither short nor long; the skeleton is not maximal");
    }
  }
  return counts;
}

namespace {

// Visits every y with |y|_1 <= radius in lexicographic order.
template <class Visit>
void for_each_in_l1_ball(int d, int radius, Visit&& visit) {
  Point y(static_cast<std::size_t>(d), -radius);
  while (true) {
    if (l1_norm(y) <= radius) visit(y);
    int a = d - 1;
    while (a >= 0 && y[a] == radius) y[a--] = -radius;
    if (a < 0) break;
    ++y[a];
  }
}

}  // namespace

double calibrate_C(const SupportFunctional& mu_x, double mu_at_x, const HOracle& h, double c0, double ratio,
                   int steps) {
  const int x_norm = l1_norm(mu_x.x);
  const int small = static_cast<int>(std::floor(std::sqrt(static_cast<double>(x_norm))));
  double C = c0;
  for (int k = 0; k < steps; ++k, C *= ratio) {
    const QxSet q(mu_x, mu_at_x, C, h);
    bool all = true;
    for_each_in_l1_ball(q.dim(), small, [&](const Point& y) { all = all && q.contains(y); });
    if (all) return C;
  }
  throw InvalidArgument("no C on the calibration grid puts the small increments inside Q_x");
}

IncrementLemmaCheck check_increment_lemma(const QxSet& q, const NormEstimate& mu_est, double mu_slack) {
  IncrementLemmaCheck check;
  const int d = q.dim();
  const int xn = q.x_norm();
  const double mx = q.mu_at_x();
  const int small = static_cast<int>(std::floor(std::sqrt(static_cast<double>(xn))));
  for_each_in_l1_ball(d, (2 * d + 1) * xn, [&](const Point& y) {
    const bool member = q.contains(y);
    if (l1_norm(y) <= small && !member) ++check.clause4_violations;
    if (!member) return;
    ++check.members;
    const double my = mu_est.mu(y);
    check.max_mu_ratio = std::max(check.max_mu_ratio, my / mx);
    if (my > 2.0 * mx + mu_slack || l1_norm(y) > 2 * d * xn) ++check.clause1_violations;
    const bool near_G = any_neighbor(y, [&](const Point& z) { return q.in_G(z); });
    const bool near_out = any_neighbor(y, [&](const Point& z) { return !q.contains(z); });
    if (near_G) {
      if (q.functional()(y) < 5.0 / 6.0 * mx) ++check.clause3_violations;
    } else if (near_out) {
      if (q.h(y) - q.functional()(y) < q.slack() / 2.0) ++check.clause2_violations;
    }
  });
  return check;
}

ThresholdReport estimate_threshold_M(const NormEstimate& mu_est, const HTable& table, std::span<const int> multiples) {
  ThresholdReport report;
  const int d = mu_est.dim();
  const HOracle h = [&table](std::span<const int> y) { return table.mean(y); };
  for (int m : multiples) {
    const Point x = unit_vector(d, 0, m);
    if ((2 * d + 1) * m + 1 > table.radius()) break;
    const auto f = build_support_functional(mu_est, x);
    const double mx = mu_est.mu(x);
    const double C = calibrate_C(f, mx, h);
    const QxSet q(f, mx, C, h);
    const auto check = check_increment_lemma(q, mu_est);
    const bool ok = check.clause1_violations + check.clause2_violations + check.clause3_violations +
                        check.clause4_violations ==
                    0;
    report.tested.emplace_back(m, ok);
    if (ok && report.M_hat < 0) report.M_hat = m;
  }
  return report;
}

SkeletonExperimentResult skeleton_length_experiment(const ExperimentContext& ctx, std::span<const int> x, int n,
                                                    const QxSet& q, std::size_t replications) {
  if (n < 1) throw InvalidArgument("skeleton experiment needs n >= 1");
  if (replications < 1) throw InvalidArgument("skeleton experiment needs at least one replication");
  const BoxSpec& spec = ctx.spec;
  const Point target = scale(x, n);
  require_measurement_point(spec, target);
  const Point origin(static_cast<std::size_t>(spec.dim()), 0);

  std::vector<SkeletonRow> rows(replications);
  std::vector<std::size_t> rejections(replications, 0);
  parallel_for(replications, ctx.threads, [&](std::size_t r) {
    auto sample = sample_with_giant(
        spec, ctx.p, replication_seed(ctx.master_seed, "skeleton-n" + std::to_string(n), r), ctx.max_attempts);
    rejections[r] = sample.rejections;
    const StarProjection star(sample.labels);
    const DistanceField field = bfs_distance(sample.cfg, star(spec.index(origin)));
    std::vector<Point> path;
    for (VertexId v : geodesic_vertices(field, star(spec.index(target)))) path.push_back(spec.point(v));
    const Skeleton skeleton = extract_skeleton(path, q);
    const auto counts = increment_classification(q, skeleton);
    SkeletonRow& row = rows[r];
    row.replication = r;
    row.n = n;
    row.m = skeleton.waypoints.size();
    row.vertices = row.m + 2;
    row.bound = static_cast<std::size_t>(2 * n + 1);
    row.pass = row.vertices <= row.bound;
    row.short_count = counts.short_count;
    row.long_count = counts.long_count;
  });
  SkeletonExperimentResult result;
  result.rows = std::move(rows);
  std::size_t passed = 0;
  for (const auto& row : result.rows) passed += row.pass ? 1 : 0;
  result.pass_fraction = static_cast<double>(passed) / static_cast<double>(replications);
  for (auto k : rejections) result.rejections += k;
  return result;
}

}  // namespace chemdist
