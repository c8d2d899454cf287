#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <optional>

namespace oracle {

EdgeConfiguration with_open_edges(const BoxSpec& spec, const std::vector<std::pair<Point, int>>& open) {
  std::vector<bool> bits(spec.edge_count(), false);
  for (const auto& [lower, axis] : open) bits[spec.edge_index(spec.index(lower), axis)] = true;
  return EdgeConfiguration(spec, 0.5, 0, bits);
}

std::vector<std::vector<VertexId>> adjacency(const EdgeConfiguration& cfg) {
  const auto& spec = cfg.spec();
  std::vector<std::vector<VertexId>> adj(spec.vertex_count());
  const auto bits = cfg.canonical_bits();
  for (std::size_t e = 0; e < spec.edge_count(); ++e) {
    if (!bits[e]) continue;
    const auto [u, axis] = spec.edge_endpoint(e);
    Point q = spec.point(u);
    ++q[axis];
    const VertexId v = spec.index(q);
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

std::vector<std::vector<std::int64_t>> floyd_warshall(const EdgeConfiguration& cfg) {
  const std::size_t n = cfg.spec().vertex_count();
  std::vector<std::vector<std::int64_t>> d(n, std::vector<std::int64_t>(n, kInf));
  const auto adj = adjacency(cfg);
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (VertexId j : adj[i]) d[i][j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

std::vector<VertexId> dfs_labels(const EdgeConfiguration& cfg) {
  const std::size_t n = cfg.spec().vertex_count();
  const auto adj = adjacency(cfg);
  std::vector<VertexId> label(n, static_cast<VertexId>(n));
  for (VertexId s = 0; s < n; ++s) {
    if (label[s] != n) continue;
    std::vector<VertexId> stack{s};
    label[s] = s;
    while (!stack.empty()) {
      const VertexId u = stack.back();
      stack.pop_back();
      for (VertexId v : adj[u])
        if (label[v] == n) {
          label[v] = s;
          stack.push_back(v);
        }
    }
  }
  return label;
}

std::int64_t simple_path_distance(const EdgeConfiguration& cfg, VertexId x, VertexId y) {
  const auto adj = adjacency(cfg);
  std::vector<char> on_path(cfg.spec().vertex_count(), 0);
  std::int64_t best = kInf;
  std::function<void(VertexId, std::int64_t)> go = [&](VertexId u, std::int64_t len) {
    if (u == y) {
      best = std::min(best, len);
      return;
    }
    on_path[u] = 1;
    for (VertexId v : adj[u])
      if (!on_path[v]) go(v, len + 1);
    on_path[u] = 0;
  };
  go(x, 0);
  return best;
}

VertexId exhaustive_star(const BoxSpec& spec, const std::vector<VertexId>& labels, VertexId giant, VertexId x) {
  const Point px = spec.point(x);
  std::optional<std::pair<int, Point>> best;
  VertexId arg = 0;
  for (VertexId z = 0; z < spec.vertex_count(); ++z) {
    if (labels[z] != giant) continue;
    const Point disp = chemdist::subtract(spec.point(z), px);
    const std::pair<int, Point> key{chemdist::l1_norm(disp), disp};
    if (!best || key < *best) {
      best = key;
      arg = z;
    }
  }
  return arg;
}

std::vector<std::vector<std::int64_t>> red_floyd_warshall(const EdgeConfiguration& cfg,
                                                          const chemdist::MesoPartition& meso, std::int64_t red_length) {
  const std::size_t n = cfg.spec().vertex_count();
  std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, kInf));
  const auto adj = adjacency(cfg);
  for (std::size_t i = 0; i < n; ++i) {
    w[i][i] = 0;
    for (VertexId j : adj[i]) w[i][j] = 1;
  }
  for (chemdist::BoxId b = 0; b < meso.box_count(); ++b) {
    const auto verts = meso.box_vertices(b);
    for (VertexId u : verts)
      for (VertexId v : verts)
        if (u != v) w[u][v] = std::min(w[u][v], red_length);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w[i][j] = std::min(w[i][j], w[i][k] + w[k][j]);
  return w;
}

}  // namespace oracle
