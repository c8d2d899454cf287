#include "chemdist/meso.hpp"

#include <algorithm>

namespace chemdist {
namespace {

// ceil(a / b) for b > 0.
int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

}  // namespace

int MesoPartition::grid_coordinate(int doubled) const {
  // Nearest k to c/t; a midpoint exactly halfway goes to the smaller k.
  return ceil_div(doubled - t_, 2 * t_);
}

MesoPartition::MesoPartition(const BoxSpec& spec, int t) : spec_(spec), t_(t) {
  if (t < 1) throw InvalidArgument("meso scale t must be >= 1, got " + std::to_string(t));
  if (t > spec.side())
    throw InvalidArgument("meso scale t must be <= 2L+1 = " + std::to_string(spec.side()));
  const int d = spec.dim();
  const int half = spec.half_side();
  k_min_ = grid_coordinate(-2 * half);
  k_span_ = grid_coordinate(2 * half) - k_min_ + 1;
  std::size_t boxes = 1;
  for (int a = 0; a < d; ++a) boxes *= static_cast<std::size_t>(k_span_);

  const std::size_t edges = spec.edge_count();
  edge_box_.resize(edges);
  std::vector<std::size_t> edge_counts(boxes, 0);
  for (std::size_t e = 0; e < edges; ++e) {
    auto [v, axis] = spec.edge_endpoint(e);
    std::size_t id = 0;
    for (int a = 0; a < d; ++a) {
      const int doubled = 2 * spec.coord(v, a) + (a == axis ? 1 : 0);
      id = id * static_cast<std::size_t>(k_span_) + static_cast<std::size_t>(grid_coordinate(doubled) - k_min_);
    }
    edge_box_[e] = static_cast<BoxId>(id);
    ++edge_counts[id];
  }

  box_edge_offsets_.assign(boxes + 1, 0);
  for (std::size_t b = 0; b < boxes; ++b) box_edge_offsets_[b + 1] = box_edge_offsets_[b] + edge_counts[b];
  box_edges_.resize(edges);
  {
    std::vector<std::size_t> fill(box_edge_offsets_.begin(), box_edge_offsets_.end() - 1);
    for (std::size_t e = 0; e < edges; ++e) box_edges_[fill[edge_box_[e]]++] = e;
  }

  // Vertex membership: boxes of the incident edges, sorted and deduplicated.
  const std::size_t n = spec.vertex_count();
  point_offsets_.assign(n + 1, 0);
  std::vector<BoxId> scratch;
  std::vector<std::size_t> vertex_counts(boxes, 0);
  for (VertexId v = 0; v < n; ++v) {
    scratch.clear();
    for (int a = 0; a < d; ++a) {
      const int c = spec.coord(v, a);
      const auto s = static_cast<VertexId>(spec.stride(a));
      if (c > -half) scratch.push_back(edge_box_[spec.edge_index(v - s, a)]);
      if (c < half) scratch.push_back(edge_box_[spec.edge_index(v, a)]);
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    point_boxes_.insert(point_boxes_.end(), scratch.begin(), scratch.end());
    point_offsets_[v + 1] = point_boxes_.size();
    for (BoxId b : scratch) ++vertex_counts[b];
  }

  box_vertex_offsets_.assign(boxes + 1, 0);
  for (std::size_t b = 0; b < boxes; ++b) box_vertex_offsets_[b + 1] = box_vertex_offsets_[b] + vertex_counts[b];
  box_vertices_.resize(box_vertex_offsets_.back());
  std::vector<std::size_t> fill(box_vertex_offsets_.begin(), box_vertex_offsets_.end() - 1);
  for (VertexId v = 0; v < n; ++v)
    for (BoxId b : point_boxes(v)) box_vertices_[fill[b]++] = v;
}

Point MesoPartition::box_index(BoxId b) const {
  const int d = spec_.dim();
  Point k(static_cast<std::size_t>(d));
  std::size_t rest = b;
  for (int a = d - 1; a >= 0; --a) {
    k[a] = static_cast<int>(rest % static_cast<std::size_t>(k_span_)) + k_min_;
    rest /= static_cast<std::size_t>(k_span_);
  }
  return k;
}

bool MesoPartition::has_box(std::span<const int> k) const {
  if (k.size() != static_cast<std::size_t>(spec_.dim())) return false;
  for (int c : k)
    if (c < k_min_ || c >= k_min_ + k_span_) return false;
  return true;
}

BoxId MesoPartition::box_id(std::span<const int> k) const {
  if (!has_box(k)) throw InvalidArgument("box index " + format_point(k) + " outside the partition");
  std::size_t id = 0;
  for (int c : k) id = id * static_cast<std::size_t>(k_span_) + static_cast<std::size_t>(c - k_min_);
  return static_cast<BoxId>(id);
}

MesoPartition build_meso_partition(const BoxSpec& spec, int t) { return MesoPartition(spec, t); }

}  // namespace chemdist
