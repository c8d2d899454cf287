#include "chemdist/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "chemdist/clusters.hpp"
#include "chemdist/distance.hpp"
#include "chemdist/sampling.hpp"
#include "chemdist/stats.hpp"

namespace chemdist {

void require_measurement_point(const BoxSpec& spec, std::span<const int> target) {
  if (target.size() != static_cast<std::size_t>(spec.dim()))
    throw InvalidArgument("target " + format_point(target) + " has the wrong dimension");
  const int needed = linf_norm(target) + spec.margin();
  if (needed > spec.half_side())
    throw InvalidArgument("target " + format_point(target) + " does not fit: need L >= " + std::to_string(needed) +
                          " (sup-norm " + std::to_string(linf_norm(target)) + " + margin " +
                          std::to_string(spec.margin()) + "), have L = " + std::to_string(spec.half_side()));
}

namespace {

VertexId origin_of(const BoxSpec& spec) { return spec.index(Point(static_cast<std::size_t>(spec.dim()), 0)); }

std::size_t total(const std::vector<std::size_t>& xs) {
  std::size_t s = 0;
  for (auto x : xs) s += x;
  return s;
}

std::vector<DoublingCheck> doubling_checks(std::span<const int> n_grid,
                                           const std::vector<std::vector<double>>& per_unit) {
  std::vector<DoublingCheck> checks;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
      if (n_grid[j] != 2 * n_grid[i]) continue;
      DoublingCheck c;
      c.n = n_grid[i];
      c.h_over_n = summarize(per_unit[i]).mean;
      c.h_over_2n = summarize(per_unit[j]).mean;
      c.se = paired_difference_se(per_unit[j], per_unit[i]);
      c.holds = c.h_over_2n <= c.h_over_n + 2.0 * c.se;
      checks.push_back(c);
    }
  }
  return checks;
}

void require_grid(std::span<const int> n_grid) {
  if (n_grid.empty()) throw InvalidArgument("n grid must not be empty");
  for (int n : n_grid)
    if (n < 1) throw InvalidArgument("n grid entries must be >= 1");
}

}  // namespace

StarDistanceSample collect_star_distances(const ExperimentContext& ctx, const std::string& experiment,
                                          std::span<const Point> targets, std::size_t replications) {
  for (const auto& target : targets) require_measurement_point(ctx.spec, target);
  StarDistanceSample out;
  out.values.assign(targets.size(), std::vector<double>(replications, 0.0));
  std::vector<std::size_t> rejections(replications, 0);
  std::vector<VertexId> target_ids;
  for (const auto& target : targets) target_ids.push_back(ctx.spec.index(target));

  parallel_for(replications, ctx.threads, [&](std::size_t r) {
    auto sample = sample_with_giant(ctx.spec, ctx.p, replication_seed(ctx.master_seed, experiment, r), ctx.max_attempts);
    rejections[r] = sample.rejections;
    const StarProjection star(sample.labels);
    const DistanceField field = bfs_distance(sample.cfg, star(origin_of(ctx.spec)));
    for (std::size_t j = 0; j < target_ids.size(); ++j) out.values[j][r] = field.raw(star(target_ids[j]));
  });
  out.rejections = total(rejections);
  return out;
}

RhoEstimate estimate_rho_hat(const ExperimentContext& ctx, std::size_t configurations, int min_separation,
                             double level, double safety) {
  if (configurations == 0) throw InvalidArgument("rho estimate needs at least one configuration");
  std::vector<std::vector<double>> ratios(configurations);
  std::vector<std::size_t> rejections(configurations, 0);
  parallel_for(configurations, ctx.threads, [&](std::size_t r) {
    auto sample = sample_with_giant(ctx.spec, ctx.p, replication_seed(ctx.master_seed, "rho", r), ctx.max_attempts);
    rejections[r] = sample.rejections;
    const StarProjection star(sample.labels);
    const VertexId source = star(origin_of(ctx.spec));
    const DistanceField field = bfs_distance(sample.cfg, source);
    for (VertexId v = 0; v < ctx.spec.vertex_count(); ++v) {
      if (!ctx.spec.is_measurement_point(v) || !field.reached(v)) continue;
      const int sep = ctx.spec.l1_distance(source, v);
      if (sep >= min_separation) ratios[r].push_back(static_cast<double>(field.raw(v)) / sep);
    }
  });
  std::vector<double> all;
  for (auto& rs : ratios) all.insert(all.end(), rs.begin(), rs.end());
  if (all.empty()) throw InvalidArgument("no connected pairs at the requested separation; enlarge the box");
  RhoEstimate est;
  est.pairs = all.size();
  est.ratio_quantile = quantile(all, level);
  est.rho_hat = safety * est.ratio_quantile;
  est.rejections = total(rejections);
  return est;
}

MuResult estimate_mu(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> n_grid,
                     std::size_t replications) {
  require_grid(n_grid);
  if (replications < 1) throw InvalidArgument("mu estimate needs at least one replication");
  const auto orbit = symmetry_orbit(y);
  std::vector<Point> targets;
  for (int n : n_grid)
    for (const auto& g : orbit) targets.push_back(scale(g, n));
  const auto sample = collect_star_distances(ctx, "mu", targets, replications);

  MuResult result;
  result.direction.assign(y.begin(), y.end());
  result.rejections = sample.rejections;
  std::vector<std::vector<double>> per_unit(n_grid.size(), std::vector<double>(replications, 0.0));
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    for (std::size_t r = 0; r < replications; ++r) {
      double s = 0.0;
      for (std::size_t g = 0; g < orbit.size(); ++g) s += sample.values[i * orbit.size() + g][r];
      per_unit[i][r] = s / static_cast<double>(orbit.size()) / n_grid[i];
    }
    const auto sum = summarize(per_unit[i]);
    const auto ci = normal_interval(sum.mean, sum.se);
    result.rows.push_back(MuRow{n_grid[i], replications, sum.mean, sum.se, ci.low, ci.high});
  }
  result.doubling = doubling_checks(n_grid, per_unit);
  const auto largest = std::max_element(n_grid.begin(), n_grid.end()) - n_grid.begin();
  const auto& top = result.rows[static_cast<std::size_t>(largest)];
  result.estimate = DirectionEstimate{result.direction, top.h_over_n, top.se, top.ci_low, top.ci_high, top.n,
                                      static_cast<int>(replications)};
  return result;
}

NormEstimate estimate_norm(const ExperimentContext& ctx, int n, std::size_t replications, std::size_t* rejections) {
  if (n < 1) throw InvalidArgument("norm scale n must be >= 1");
  if (replications < 1) throw InvalidArgument("norm estimate needs at least one replication");
  const auto fan = direction_fan(ctx.spec.dim());
  std::vector<Point> targets;
  for (const auto& u : fan) targets.push_back(scale(u, n));
  const auto sample = collect_star_distances(ctx, "norm", targets, replications);
  if (rejections) *rejections = sample.rejections;

  std::map<Point, std::vector<std::size_t>> orbits;
  for (std::size_t j = 0; j < fan.size(); ++j) orbits[canonical_direction(fan[j])].push_back(j);
  std::vector<DirectionEstimate> estimates(fan.size());
  for (const auto& [rep, members] : orbits) {
    std::vector<double> pooled(replications, 0.0);
    for (std::size_t r = 0; r < replications; ++r) {
      double s = 0.0;
      for (std::size_t j : members) s += sample.values[j][r];
      pooled[r] = s / static_cast<double>(members.size()) / n;
    }
    const auto sum = summarize(pooled);
    const auto ci = normal_interval(sum.mean, sum.se);
    for (std::size_t j : members)
      estimates[j] = DirectionEstimate{fan[j], sum.mean, sum.se, ci.low, ci.high, n, static_cast<int>(replications)};
  }
  return NormEstimate(ctx.spec.dim(), std::move(estimates), ctx.master_seed);
}

VarianceResult variance_scaling(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> n_grid,
                                std::size_t replications) {
  require_grid(n_grid);
  if (replications < 2) throw InvalidArgument("variance scaling needs at least 2 replications");
  std::vector<Point> targets;
  for (int n : n_grid) targets.push_back(scale(y, n));
  const auto sample = collect_star_distances(ctx, "var", targets, replications);
  VarianceResult result;
  result.rejections = sample.rejections;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const auto sum = summarize(sample.values[i]);
    const double m = l1_norm(targets[i]);
    result.rows.push_back(VarianceRow{n_grid[i], replications, sum.mean, sum.variance,
                                      sum.variance / (m * std::log1p(m))});
  }
  return result;
}

TailsResult moderate_deviation_tails(const ExperimentContext& ctx, std::span<const int> y, int n,
                                     std::span<const double> x_grid, std::size_t replications) {
  if (replications < 2) throw InvalidArgument("tail estimate needs at least 2 replications");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  const std::vector<Point> targets{scale(y, n)};
  const auto sample = collect_star_distances(ctx, "tails", targets, replications);
  const auto& values = sample.values[0];
  const auto sum = summarize(values);
  const double m = l1_norm(targets[0]);
  TailsResult result;
  result.mean = sum.mean;
  result.sd = std::sqrt(sum.variance);
  result.rejections = sample.rejections;
  for (double x : x_grid) {
    std::size_t count = 0;
    for (double v : values) count += std::abs(v - sum.mean) > x * std::sqrt(m) ? 1 : 0;
    const auto ci = clopper_pearson(count, replications);
    result.rows.push_back(TailsRow{x, replications, count, static_cast<double>(count) / replications, ci.low, ci.high,
                                   x >= 1.0 + std::log(m) && x <= std::sqrt(m)});
  }
  return result;
}

GapResult mean_gap(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> n_grid,
                   std::size_t replications, const NormEstimate& mu_est) {
  require_grid(n_grid);
  if (replications < 2) throw InvalidArgument("mean gap needs at least 2 replications");
  if (mu_est.master_seed() == ctx.master_seed)
    throw InvalidArgument("mean gap: the norm estimate shares master seed " + std::to_string(ctx.master_seed) +
                          " with the gap experiment; estimate mu from an independent seed");
  double mu_unit = 0.0;
  double mu_unit_se = 0.0;
  try {
    const auto& raw = mu_est.raw(y);
    int g = l1_norm(y) / l1_norm(raw.direction);
    mu_unit = g * raw.mu;
    mu_unit_se = g * raw.se;
  } catch (const InvalidArgument&) {
    mu_unit = mu_est.mu(y);
  }

  std::vector<Point> targets;
  for (int n : n_grid) targets.push_back(scale(y, n));
  const auto sample = collect_star_distances(ctx, "gap", targets, replications);
  GapResult result;
  result.rejections = sample.rejections;
  std::vector<std::vector<double>> per_unit(n_grid.size());
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const int n = n_grid[i];
    const auto sum = summarize(sample.values[i]);
    GapRow row;
    row.n = n;
    row.replications = replications;
    row.h_hat = sum.mean;
    row.h_se = sum.se;
    row.mu_n = n * mu_unit;
    row.gap = row.h_hat - row.mu_n;
    row.gap_se = std::sqrt(sum.se * sum.se + n * n * mu_unit_se * mu_unit_se);
    const double m = l1_norm(targets[i]);
    row.normalized = m > 1 ? row.gap / (std::sqrt(m) * std::log(m)) : 0.0;
    row.per_unit_gap = row.h_hat / n - mu_unit;
    row.nonnegative = row.gap >= -2.0 * row.gap_se;
    result.rows.push_back(row);
    for (double v : sample.values[i]) per_unit[i].push_back(v / n);
  }
  result.doubling = doubling_checks(n_grid, per_unit);
  return result;
}

ShapeResult shape_experiment(const ExperimentContext& ctx, std::span<const int> t_grid, std::size_t replications,
                             const NormEstimate& mu_est, bool keep_snapshot) {
  if (t_grid.empty()) throw InvalidArgument("t grid must not be empty");
  if (replications < 1) throw InvalidArgument("shape experiment needs at least one replication");
  for (int t : t_grid)
    if (t < 1) throw InvalidArgument("shape radius t must be >= 1");
  const BoxSpec& spec = ctx.spec;
  const auto fan = direction_fan(spec.dim());
  const int reach = spec.half_side() - spec.margin();

  struct PerReplication {
    std::vector<ShapeDirectionRow> rows;
    std::vector<double> max_dev;
    std::vector<double> inner;
    std::vector<double> outer;
    std::vector<std::pair<int, Point>> snapshot;
    std::size_t rejections = 0;
  };
  std::vector<PerReplication> reps(replications);

  parallel_for(replications, ctx.threads, [&](std::size_t r) {
    auto sample = sample_with_giant(spec, ctx.p, replication_seed(ctx.master_seed, "shape", r), ctx.max_attempts);
    PerReplication& out = reps[r];
    out.rejections = sample.rejections;
    const StarProjection star(sample.labels);
    const DistanceField field = bfs_distance(sample.cfg, star(origin_of(spec)));

    for (int t : t_grid) {
      double max_dev = 0.0;
      for (const auto& u : fan) {
        const int steps = reach / linf_norm(u);
        std::vector<std::uint32_t> along;
        for (int s = 0; s <= steps; ++s) along.push_back(field.raw(star(spec.index(scale(u, s)))));
        int last = -1;
        for (int s = 0; s <= steps; ++s)
          if (along[s] <= static_cast<std::uint32_t>(t)) last = s;
        if (last < 0 || last == steps)
          throw InvalidArgument("shape radius t=" + std::to_string(t) + " too large for the box along " +
                                format_point(u) + "; enlarge L");
        const double d1 = along[last];
        const double d2 = along[last + 1];
        const double mu_u = mu_est.raw_mu(u);
        const double radius = last + (t - d1) / (d2 - d1);
        // r mu(u) - t, arranged so that integer-valued inputs cancel exactly.
        const double excess = (last * mu_u - d1) + ((t - d1) * mu_u / (d2 - d1) - (t - d1));
        const double deviation = std::abs(excess) / t;
        max_dev = std::max(max_dev, deviation);
        out.rows.push_back(ShapeDirectionRow{t, r, u, radius, mu_u, deviation});
      }
      out.max_dev.push_back(max_dev);

      double outer = -std::numeric_limits<double>::infinity();
      double inner_min = std::numeric_limits<double>::infinity();
      for (VertexId v = 0; v < spec.vertex_count(); ++v) {
        if (!spec.is_measurement_point(v) || !sample.labels.in_giant(v)) continue;
        const double m = mu_est.mu(spec.point(v));
        if (field.raw(v) <= static_cast<std::uint32_t>(t)) {
          outer = std::max(outer, m);
          if (keep_snapshot && r == 0) out.snapshot.emplace_back(t, spec.point(v));
        } else {
          inner_min = std::min(inner_min, m);
        }
      }
      const double unit = std::sqrt(static_cast<double>(t)) * std::log(static_cast<double>(t));
      const double scale_unit = unit > 0 ? unit : 1.0;
      out.outer.push_back((outer - t) / scale_unit);
      out.inner.push_back((t - inner_min) / scale_unit);
    }
  });

  ShapeResult result;
  result.max_deviation.assign(t_grid.size(), std::vector<double>(replications, 0.0));
  std::vector<std::vector<double>> inner(t_grid.size()), outer(t_grid.size());
  for (std::size_t r = 0; r < replications; ++r) {
    result.rejections += reps[r].rejections;
    result.directions.insert(result.directions.end(), reps[r].rows.begin(), reps[r].rows.end());
    result.snapshot.insert(result.snapshot.end(), reps[r].snapshot.begin(), reps[r].snapshot.end());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      result.max_deviation[i][r] = reps[r].max_dev[i];
      inner[i].push_back(reps[r].inner[i]);
      outer[i].push_back(reps[r].outer[i]);
    }
  }
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const auto dev = summarize(result.max_deviation[i]);
    result.summary.push_back(ShapeSummaryRow{t_grid[i], replications, dev.mean, dev.se, summarize(inner[i]).mean,
                                             summarize(outer[i]).mean});
  }
  return result;
}

CouplingResult coupling_experiment(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> t_grid,
                                   int K, double rho_hat, std::size_t replications) {
  if (t_grid.empty()) throw InvalidArgument("t grid must not be empty");
  if (replications < 1) throw InvalidArgument("coupling experiment needs at least one replication");
  require_measurement_point(ctx.spec, y);
  std::vector<RedParams> params;
  std::vector<MesoPartition> partitions;
  for (int t : t_grid) {
    if (t < 1 || t > ctx.spec.side()) throw InvalidArgument("t must lie in [1, 2L+1]");
    params.push_back(make_red_params(t, K, rho_hat));
    partitions.push_back(build_meso_partition(ctx.spec, t));
  }
  const VertexId origin = origin_of(ctx.spec);
  const VertexId target = ctx.spec.index(y);
  std::vector<std::vector<std::int64_t>> shortfall(t_grid.size(), std::vector<std::int64_t>(replications, 0));
  std::vector<std::size_t> rejections(replications, 0);
  parallel_for(replications, ctx.threads, [&](std::size_t r) {
    auto sample =
        sample_with_giant(ctx.spec, ctx.p, replication_seed(ctx.master_seed, "coupling", r), ctx.max_attempts);
    rejections[r] = sample.rejections;
    const StarProjection star(sample.labels);
    const VertexId a = star(origin);
    const VertexId b = star(target);
    const auto d_star = static_cast<std::int64_t>(bfs_distance(sample.cfg, a).raw(b));
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      const auto field = renormalized_field(sample.cfg, partitions[i], params[i], a, b);
      shortfall[i][r] = d_star - field.at(b);
    }
  });
  CouplingResult result;
  result.rejections = total(rejections);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    CouplingRow row;
    row.t = t_grid[i];
    row.K = K;
    row.replications = replications;
    double sum = 0.0;
    for (auto s : shortfall[i]) {
      if (s != 0) ++row.mismatches;
      if (s < 0) row.contraction_holds = false;
      sum += static_cast<double>(s);
    }
    row.rate = static_cast<double>(row.mismatches) / static_cast<double>(replications);
    const auto ci = clopper_pearson(row.mismatches, replications);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    row.mean_shortfall = sum / static_cast<double>(replications);
    result.rows.push_back(row);
  }
  return result;
}

EfronSteinResult efron_stein_experiment(const ExperimentContext& ctx, const RedParams& params, std::span<const int> y,
                                        int n_draws, std::size_t configurations) {
  if (configurations < 2) throw InvalidArgument("Efron-Stein experiment needs at least two configurations");
  if (n_draws < 1) throw InvalidArgument("Efron-Stein experiment needs at least one draw per box");
  require_measurement_point(ctx.spec, y);
  const MesoPartition meso = build_meso_partition(ctx.spec, params.t);
  std::vector<ResampleReport> reports(configurations);
  parallel_for(configurations, ctx.threads, [&](std::size_t r) {
    const auto cfg = sample_configuration(ctx.spec, ctx.p, replication_seed(ctx.master_seed, "efron-stein", r));
    reports[r] = efron_stein_resample(cfg, meso, params, y, n_draws);
  });
  EfronSteinResult result;
  result.params = params;
  std::vector<double> S(configurations), v(configurations);
  for (std::size_t r = 0; r < configurations; ++r) {
    auto& rep = reports[r];
    result.configs.push_back(EfronSteinConfigRow{r, rep.S, rep.v_minus_hat, rep.y_boxes, rep.draw_bound_holds,
                                                 rep.y_bound_holds, rep.v_minus_bound_holds});
    result.draw_bound_holds = result.draw_bound_holds && rep.draw_bound_holds;
    result.y_bound_holds = result.y_bound_holds && rep.y_bound_holds;
    result.v_minus_bound_holds = result.v_minus_bound_holds && rep.v_minus_bound_holds;
    S[r] = static_cast<double>(rep.S);
    v[r] = rep.v_minus_hat;
    for (const auto& d : rep.draws) {
      result.draws.push_back(d);
      result.draw_owner.push_back(r);
    }
  }
  result.var_S = summarize(S).variance;
  const auto vs = summarize(v);
  result.mean_v_minus = vs.mean;
  result.se_v_minus = vs.se;
  result.ess_holds = result.var_S <= result.mean_v_minus + 3.0 * result.se_v_minus;
  return result;
}

}  // namespace chemdist
