#include "chemdist/renormalized.hpp"

#include <algorithm>
#include <cmath>

#include "chemdist/distance.hpp"
#include "chemdist/rng.hpp"

namespace chemdist {

RedParams make_red_params(int t, int K, double rho_hat, std::string rule) {
  if (t < 1) throw InvalidArgument("red scale t must be >= 1");
  if (K < 1) throw InvalidArgument("red multiplier K must be >= 1");
  if (!(static_cast<double>(K) > 4.0 * rho_hat))
    throw InvalidArgument("red multiplier K=" + std::to_string(K) + " must exceed 4*rho_hat=" +
                          std::to_string(4.0 * rho_hat));
  return RedParams{t, K, rho_hat, std::move(rule)};
}

RedParams default_red_params(int t, double rho_hat) {
  const int K = std::max(1, static_cast<int>(std::ceil(8.0 * rho_hat)));
  return make_red_params(t, K, rho_hat, "ceil(8*rho_hat)");
}

RenormalizedField renormalized_field(const EdgeConfiguration& cfg, const MesoPartition& meso, const RedParams& params,
                                     VertexId source, std::optional<VertexId> target) {
  const BoxSpec& spec = cfg.spec();
  if (meso.spec().dim() != spec.dim() || meso.spec().half_side() != spec.half_side())
    throw InvalidArgument("meso partition built for a different box");
  if (meso.scale() != params.t) throw InvalidArgument("meso partition scale differs from red-edge scale t");
  const std::size_t n = spec.vertex_count();
  if (source >= n) throw InvalidArgument("source outside the box");
  const std::int64_t red = params.red_length();

  std::vector<std::int64_t> dist(n, RenormalizedField::kUnreached);
  std::vector<char> expanded(meso.box_count(), 0);
  // Arc lengths are 1 and red; a ring of red + 1 buckets holds every pending label.
  std::vector<std::vector<VertexId>> ring(static_cast<std::size_t>(red) + 1);
  const auto slot = [&](std::int64_t value) { return static_cast<std::size_t>(value % (red + 1)); };

  dist[source] = 0;
  ring[0].push_back(source);
  std::size_t pending = 1;
  for (std::int64_t level = 0; pending > 0; ++level) {
    auto& bucket = ring[slot(level)];
    while (!bucket.empty()) {
      const VertexId v = bucket.back();
      bucket.pop_back();
      --pending;
      if (dist[v] != level) continue;
      if (target && v == *target) return RenormalizedField(cfg, meso, params, source, std::move(dist));
      cfg.for_each_open_neighbor(v, [&](VertexId w) {
        if (level + 1 < dist[w]) {
          dist[w] = level + 1;
          ring[slot(level + 1)].push_back(w);
          ++pending;
        }
      });
      for (BoxId b : meso.point_boxes(v)) {
        if (expanded[b]) continue;
        expanded[b] = 1;
        for (VertexId w : meso.box_vertices(b)) {
          if (level + red < dist[w]) {
            dist[w] = level + red;
            ring[slot(level + red)].push_back(w);
            ++pending;
          }
        }
      }
    }
  }
  return RenormalizedField(cfg, meso, params, source, std::move(dist));
}

std::int64_t renormalized_distance(const EdgeConfiguration& cfg, const MesoPartition& meso, const RedParams& params,
                                   std::span<const int> x, std::span<const int> y) {
  const auto& spec = cfg.spec();
  const VertexId target = spec.index(y);
  return renormalized_field(cfg, meso, params, spec.index(x), target).at(target);
}

namespace {

std::optional<BoxId> smallest_shared_box(const MesoPartition& meso, VertexId u, VertexId v) {
  const auto a = meso.point_boxes(u);
  const auto b = meso.point_boxes(v);
  for (BoxId box : a)
    if (std::binary_search(b.begin(), b.end(), box)) return box;
  return std::nullopt;
}

}  // namespace

std::vector<RenormalizedStep> renormalized_geodesic(const RenormalizedField& field, VertexId y) {
  const EdgeConfiguration& cfg = field.configuration();
  const MesoPartition& meso = field.partition();
  const BoxSpec& spec = cfg.spec();
  const std::int64_t red = field.params().red_length();
  if (field.at(y) == RenormalizedField::kUnreached)
    throw Unreachable("renormalized distance to " + format_point(spec.point(y)) + " was not computed");

  std::vector<RenormalizedStep> steps;
  VertexId v = y;
  while (v != field.source()) {
    const std::int64_t here = field.at(v);
    std::optional<RenormalizedStep> best;
    cfg.for_each_open_neighbor(v, [&](VertexId u) {
      if (field.at(u) == here - 1 && (!best || u < best->from)) {
        const VertexId lo = std::min(u, v);
        int axis = 0;
        while (spec.stride(axis) != static_cast<std::size_t>(std::max(u, v) - lo)) ++axis;
        best = RenormalizedStep{u, v, false, meso.edge_box(spec.edge_index(lo, axis))};
      }
    });
    if (here >= red) {
      for (BoxId b : meso.point_boxes(v)) {
        for (VertexId u : meso.box_vertices(b)) {
          if (u == v || field.at(u) != here - red) continue;
          if (best && (u > best->from || (u == best->from && !best->red))) continue;
          best = RenormalizedStep{u, v, true, *smallest_shared_box(meso, u, v)};
        }
      }
    }
    if (!best) throw Unreachable("no predecessor found while tracing a D^t geodesic");
    steps.push_back(*best);
    v = best->from;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

std::vector<BoxId> visited_boxes(std::span<const RenormalizedStep> steps) {
  std::vector<BoxId> boxes;
  for (const auto& s : steps) boxes.push_back(s.box);
  std::sort(boxes.begin(), boxes.end());
  boxes.erase(std::unique(boxes.begin(), boxes.end()), boxes.end());
  return boxes;
}

GoodBoxResult good_box_predicate(const EdgeConfiguration& cfg, const ClusterLabels& labels,
                                 const MesoPartition& meso, std::span<const int> k, const RedParams& params) {
  const int d = cfg.spec().dim();
  if (meso.scale() != params.t) throw InvalidArgument("meso partition scale differs from red-edge scale t");
  const BoxId home = meso.box_id(k);

  GoodBoxResult result;
  // Targets: vertices of box k and of every existing *-adjacent box.
  std::vector<char> is_target(cfg.spec().vertex_count(), 0);
  Point offset(static_cast<std::size_t>(d), -1);
  while (true) {
    const Point other = add(k, offset);
    if (meso.has_box(other)) {
      for (VertexId v : meso.box_vertices(meso.box_id(other))) is_target[v] = 1;
    } else {
      result.boundary = true;
    }
    int a = d - 1;
    while (a >= 0 && offset[a] == 1) offset[a--] = -1;
    if (a < 0) break;
    ++offset[a];
  }

  const auto limit = static_cast<std::uint32_t>(std::floor(4.0 * params.rho_hat * params.t));
  for (VertexId x : meso.box_vertices(home)) {
    const DistanceField field = bfs_distance(cfg, x, limit);
    for (VertexId y = 0; y < is_target.size(); ++y) {
      if (is_target[y] && labels.connected(x, y) && !field.reached(y)) {
        result.good = false;
        return result;
      }
    }
  }
  return result;
}

GoodBoxResult good_box_predicate(const EdgeConfiguration& cfg, const MesoPartition& meso, std::span<const int> k,
                                 const RedParams& params) {
  return good_box_predicate(cfg, label_clusters(cfg), meso, k, params);
}

EdgeConfiguration resample_box(const EdgeConfiguration& cfg, const MesoPartition& meso, BoxId box, double p,
                               std::uint64_t key) {
  std::vector<std::size_t> open_edges;
  std::vector<std::size_t> closed_edges;
  for (std::size_t e : meso.box_edges(box)) (bernoulli_at(key, e, p) ? open_edges : closed_edges).push_back(e);
  return cfg.with_edges(open_edges, true).with_edges(closed_edges, false);
}

ResampleReport efron_stein_resample(const EdgeConfiguration& cfg, const MesoPartition& meso, const RedParams& params,
                                    std::span<const int> y, int n_draws) {
  if (n_draws < 1) throw InvalidArgument("efron-stein needs at least one draw per box");
  const BoxSpec& spec = cfg.spec();
  const VertexId origin = spec.index(Point(static_cast<std::size_t>(spec.dim()), 0));
  const VertexId target = spec.index(y);
  const std::int64_t red = params.red_length();
  const std::int64_t t = params.t;

  ResampleReport report;
  const RenormalizedField field = renormalized_field(cfg, meso, params, origin, target);
  report.S = field.at(target);
  const auto steps = renormalized_geodesic(field, target);
  report.visited.assign(meso.box_count(), 0);
  for (BoxId b : visited_boxes(steps)) report.visited[b] = 1;
  report.y_boxes = visited_boxes(steps).size();

  std::int64_t pow3 = 1;
  for (int a = 0; a < spec.dim(); ++a) pow3 *= 3;
  report.y_bound_holds = static_cast<std::int64_t>(report.y_boxes) * t <= pow3 * (t + report.S);

  double v_minus = 0.0;
  for (BoxId b = 0; b < meso.box_count(); ++b) {
    if (meso.box_edges(b).empty()) continue;
    ++report.boxes_examined;
    double box_sum = 0.0;
    for (int r = 0; r < n_draws; ++r) {
      const std::uint64_t key =
          derive_seed(cfg.seed(), {tag_of("resample"), static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(r)});
      const EdgeConfiguration alt = resample_box(cfg, meso, b, cfg.p(), key);
      const std::int64_t s_alt = renormalized_field(alt, meso, params, origin, target).at(target);
      ResampleDraw draw{b, r, s_alt - report.S, report.visited[b] != 0};
      if (draw.delta > (draw.visited ? red : 0)) report.draw_bound_holds = false;
      const double positive = static_cast<double>(std::max<std::int64_t>(draw.delta, 0));
      box_sum += positive * positive;
      report.draws.push_back(draw);
    }
    v_minus += box_sum / n_draws;
  }
  report.v_minus_hat = v_minus;
  const double cap = static_cast<double>(pow3) * params.K * params.K * static_cast<double>(t) *
                     static_cast<double>(report.S + t);
  report.v_minus_bound_holds = report.v_minus_hat <= cap;
  return report;
}

}  // namespace chemdist
