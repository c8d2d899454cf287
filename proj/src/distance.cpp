#include "chemdist/distance.hpp"

#include <algorithm>

namespace chemdist {

std::uint64_t Distance::value() const {
  if (!value_) throw Unreachable("distance is infinite");
  return *value_;
}

std::optional<VertexId> DistanceField::parent(VertexId v) const {
  if (v == source_ || raw_[v] == kUnreached) return std::nullopt;
  const std::uint32_t want = raw_[v] - 1;
  std::optional<VertexId> best;
  cfg_->for_each_open_neighbor(v, [&](VertexId u) {
    if (raw_[u] == want && (!best || u < *best)) best = u;
  });
  return best;
}

DistanceField bfs_distance(const EdgeConfiguration& cfg, VertexId source, std::uint32_t max_depth) {
  const std::size_t n = cfg.spec().vertex_count();
  if (source >= n) throw InvalidArgument("BFS source outside the box");
  std::vector<std::uint32_t> dist(n, DistanceField::kUnreached);
  std::vector<VertexId> queue;
  queue.reserve(1024);
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId v = queue[head];
    const std::uint32_t next = dist[v] + 1;
    if (dist[v] >= max_depth) continue;
    cfg.for_each_open_neighbor(v, [&](VertexId w) {
      if (dist[w] == DistanceField::kUnreached) {
        dist[w] = next;
        queue.push_back(w);
      }
    });
  }
  return DistanceField(cfg, source, std::move(dist));
}

DistanceField bfs_distance(const EdgeConfiguration& cfg, std::span<const int> source) {
  return bfs_distance(cfg, cfg.spec().index(source));
}

Distance chemical_distance(const EdgeConfiguration& cfg, std::span<const int> x, std::span<const int> y) {
  const auto& spec = cfg.spec();
  const VertexId target = spec.index(y);
  return bfs_distance(cfg, spec.index(x)).at(target);
}

std::uint64_t star_distance(const EdgeConfiguration& cfg, const ClusterLabels& labels, const StarProjection& star,
                            std::span<const int> x, std::span<const int> y) {
  if (!labels.giant()) throw NoGiantCluster("D* needs a giant cluster; resample");
  const auto& spec = cfg.spec();
  const VertexId xs = star(spec.index(x));
  const VertexId ys = star(spec.index(y));
  return bfs_distance(cfg, xs).at(ys).value();
}

Distance constrained_distance(const EdgeConfiguration& cfg, std::span<const Point> waypoints) {
  if (waypoints.size() < 2) throw InvalidArgument("constrained distance needs at least two waypoints");
  Distance total(0);
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    total = total + chemical_distance(cfg, waypoints[i], waypoints[i + 1]);
    if (!total.is_finite()) break;
  }
  return total;
}

std::vector<VertexId> geodesic_vertices(const DistanceField& field, VertexId y) {
  if (!field.reached(y))
    throw Unreachable("no open path from " + format_point(field.configuration().spec().point(field.source())) +
                      " to " + format_point(field.configuration().spec().point(y)));
  std::vector<VertexId> path{y};
  VertexId v = y;
  while (auto p = field.parent(v)) {
    v = *p;
    path.push_back(v);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

Geodesic extract_geodesic(const DistanceField& field, std::span<const int> y) {
  const auto& spec = field.configuration().spec();
  Geodesic g;
  for (VertexId v : geodesic_vertices(field, spec.index(y))) g.vertices.push_back(spec.point(v));
  return g;
}

}  // namespace chemdist
