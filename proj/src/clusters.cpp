#include "chemdist/clusters.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "chemdist/stats.hpp"

namespace chemdist {

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), VertexId{0});
}

VertexId UnionFind::find(VertexId x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(VertexId a, VertexId b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

bool ClusterLabels::spanning(VertexId cluster) const {
  const std::uint32_t all = (1u << (2 * spec_.dim())) - 1u;
  return faces_[cluster] == all;
}

std::vector<VertexId> ClusterLabels::clusters() const {
  std::vector<VertexId> ids;
  ids.reserve(cluster_count_);
  for (VertexId v = 0; v < label_.size(); ++v)
    if (label_[v] == v) ids.push_back(v);
  return ids;
}

ClusterLabels label_clusters(const EdgeConfiguration& cfg) {
  const BoxSpec& spec = cfg.spec();
  const std::size_t n = spec.vertex_count();
  const int d = spec.dim();
  const int half = spec.half_side();

  UnionFind uf(n);
  for (VertexId v = 0; v < n; ++v)
    for (int a = 0; a < d; ++a)
      if (cfg.is_open(v, a)) uf.unite(v, v + static_cast<VertexId>(spec.stride(a)));

  ClusterLabels out(spec);
  out.label_.resize(n);
  out.size_.assign(n, 0);
  out.faces_.assign(n, 0);
  // Visiting vertices in increasing order makes the first member seen the cluster id.
  std::vector<VertexId> root_to_id(n, static_cast<VertexId>(n));
  for (VertexId v = 0; v < n; ++v) {
    const VertexId root = uf.find(v);
    if (root_to_id[root] == n) {
      root_to_id[root] = v;
      ++out.cluster_count_;
    }
    const VertexId id = root_to_id[root];
    out.label_[v] = id;
    ++out.size_[id];
    for (int a = 0; a < d; ++a) {
      const int c = spec.coord(v, a);
      if (c == -half) out.faces_[id] |= 1u << (2 * a);
      if (c == half) out.faces_[id] |= 1u << (2 * a + 1);
    }
  }

  std::uint32_t best = 0;
  std::size_t best_count = 0;
  VertexId best_id = 0;
  for (VertexId v = 0; v < n; ++v) {
    if (out.label_[v] != v) continue;
    if (out.size_[v] > best) {
      best = out.size_[v];
      best_id = v;
      best_count = 1;
    } else if (out.size_[v] == best) {
      ++best_count;
    }
  }
  // A lone vertex (all edges closed) never counts as a giant, even in a 1-vertex tie.
  if (best_count == 1 && best > 1 && out.spanning(best_id)) out.giant_ = best_id;
  return out;
}

namespace {

// Visits displacements of l1 norm `radius` in lexicographic order; stops when visit returns true.
template <class Visit>
bool for_each_sphere_point(int d, int radius, Point& delta, int axis, Visit& visit) {
  if (axis == d - 1) {
    if (radius == 0) {
      delta[axis] = 0;
      return visit(delta);
    }
    delta[axis] = -radius;
    if (visit(delta)) return true;
    delta[axis] = radius;
    return visit(delta);
  }
  for (int c = -radius; c <= radius; ++c) {
    delta[axis] = c;
    if (for_each_sphere_point(d, radius - std::abs(c), delta, axis + 1, visit)) return true;
  }
  return false;
}

}  // namespace

StarProjection::StarProjection(const ClusterLabels& labels) : labels_(&labels) {
  if (!labels.giant()) throw NoGiantCluster("configuration has no spanning giant cluster; resample");
}

VertexId StarProjection::operator()(VertexId x) const {
  if (labels_->in_giant(x)) return x;
  const BoxSpec& spec = labels_->spec();
  const int d = spec.dim();
  const Point base = spec.point(x);
  Point delta(static_cast<std::size_t>(d), 0);
  Point candidate(static_cast<std::size_t>(d), 0);
  VertexId found = 0;
  auto visit = [&](const Point& dlt) {
    for (int a = 0; a < d; ++a) candidate[a] = base[a] + dlt[a];
    if (!spec.contains(candidate)) return false;
    const VertexId v = spec.index(candidate);
    if (!labels_->in_giant(v)) return false;
    found = v;
    return true;
  };
  const int max_radius = 2 * spec.half_side() * d;
  for (int radius = 1; radius <= max_radius; ++radius)
    if (for_each_sphere_point(d, radius, delta, 0, visit)) return found;
  throw NoGiantCluster("giant cluster unreachable from " + format_point(base));
}

Point StarProjection::operator()(std::span<const int> x) const {
  const BoxSpec& spec = labels_->spec();
  return spec.point((*this)(spec.index(x)));
}

Point project_star(const ClusterLabels& labels, std::span<const int> x) { return StarProjection(labels)(x); }

bool origin_cluster_finite_and_exits(const EdgeConfiguration& cfg, const ClusterLabels& labels, int r) {
  const BoxSpec& spec = cfg.spec();
  const VertexId origin = spec.index(Point(static_cast<std::size_t>(spec.dim()), 0));
  if (labels.in_giant(origin)) return false;
  const VertexId id = labels.label(origin);
  if (labels.size(id) == 1) return false;
  // Walk the origin's cluster; it is finite so the walk is small.
  std::vector<VertexId> stack{origin};
  std::vector<char> seen(spec.vertex_count(), 0);
  seen[origin] = 1;
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    if (spec.linf(v) > r) return true;
    cfg.for_each_open_neighbor(v, [&](VertexId w) {
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    });
  }
  return false;
}

bool giant_misses_box(const ClusterLabels& labels, int r) {
  if (!labels.giant()) throw NoGiantCluster("hole-size tail requires a giant cluster");
  const BoxSpec& spec = labels.spec();
  for (VertexId v = 0; v < spec.vertex_count(); ++v)
    if (spec.linf(v) <= r && labels.in_giant(v)) return false;
  return true;
}

std::vector<TailRow> make_tail_rows(std::span<const int> r_grid, std::span<const std::size_t> counts,
                                    std::size_t n_samples) {
  std::vector<TailRow> rows;
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    TailRow row;
    row.r = r_grid[i];
    row.n_samples = n_samples;
    row.count = counts[i];
    const auto ci = clopper_pearson(counts[i], n_samples, 0.95);
    row.estimate = static_cast<double>(counts[i]) / static_cast<double>(n_samples);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    rows.push_back(row);
  }
  return rows;
}

std::vector<TailRow> finite_cluster_diameter_tail(std::span<const EdgeConfiguration> cfgs,
                                                  std::span<const int> r_grid) {
  if (cfgs.empty()) throw InvalidArgument("finite-cluster tail needs at least one configuration");
  std::vector<std::size_t> counts(r_grid.size(), 0);
  for (const auto& cfg : cfgs) {
    const auto labels = label_clusters(cfg);
    for (std::size_t i = 0; i < r_grid.size(); ++i)
      counts[i] += origin_cluster_finite_and_exits(cfg, labels, r_grid[i]) ? 1 : 0;
  }
  return make_tail_rows(r_grid, counts, cfgs.size());
}

std::vector<TailRow> hole_size_tail(std::span<const EdgeConfiguration> cfgs, std::span<const int> r_grid) {
  if (cfgs.empty()) throw InvalidArgument("hole-size tail needs at least one configuration");
  std::vector<std::size_t> counts(r_grid.size(), 0);
  for (const auto& cfg : cfgs) {
    const auto labels = label_clusters(cfg);
    for (std::size_t i = 0; i < r_grid.size(); ++i) counts[i] += giant_misses_box(labels, r_grid[i]) ? 1 : 0;
  }
  return make_tail_rows(r_grid, counts, cfgs.size());
}

}  // namespace chemdist
