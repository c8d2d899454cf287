#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "chemdist/types.hpp"

namespace chemdist {

/// The finite box [-L, L]^d of Z^d with its nearest-neighbour edges.
///
/// Vertices are indexed densely in lexicographic order of their coordinates
/// (coordinate 0 most significant). Edges are indexed canonically: all edges
/// along axis 0 first, then axis 1, ...; within an axis, by the lexicographic
/// order of their lower endpoint.
class BoxSpec {
 public:
  BoxSpec(int d, int half_side, int margin = 0);

  int dim() const { return d_; }
  int half_side() const { return half_side_; }
  int margin() const { return margin_; }
  int side() const { return 2 * half_side_ + 1; }

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edges_per_axis() const { return edges_per_axis_; }
  std::size_t edge_count() const { return edges_per_axis_ * static_cast<std::size_t>(d_); }

  bool contains(std::span<const int> x) const;
  VertexId index(std::span<const int> x) const;
  Point point(VertexId v) const;
  int coord(VertexId v, int axis) const {
    return static_cast<int>((v / strides_[axis]) % static_cast<std::size_t>(side())) - half_side_;
  }
  std::size_t stride(int axis) const { return strides_[axis]; }

  /// Sup-norm of the vertex; cheaper than materializing the point.
  int linf(VertexId v) const;
  int l1(VertexId v) const;
  int l1_distance(VertexId u, VertexId v) const;

  bool is_measurement_point(VertexId v) const { return linf(v) <= half_side_ - margin_; }

  /// Canonical index of the edge {lower, lower + e_axis}; requires coord(lower, axis) < L.
  std::size_t edge_index(VertexId lower, int axis) const;
  /// Inverse of edge_index: (lower endpoint, axis).
  std::pair<VertexId, int> edge_endpoint(std::size_t edge) const;

  friend bool operator==(const BoxSpec& a, const BoxSpec& b) {
    return a.d_ == b.d_ && a.half_side_ == b.half_side_ && a.margin_ == b.margin_;
  }

 private:
  int d_;
  int half_side_;
  int margin_;
  std::size_t vertex_count_;
  std::size_t edges_per_axis_;
  std::vector<std::size_t> strides_;
};

/// Open/closed state of every edge of a box. Immutable once built.
class EdgeConfiguration {
 public:
  /// `canonical_bits[e]` is the state of canonical edge e.
  EdgeConfiguration(BoxSpec spec, double p, std::uint64_t seed, const std::vector<bool>& canonical_bits);

  const BoxSpec& spec() const { return spec_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  /// State of the edge {lower, lower + e_axis}; false when that edge leaves the box.
  bool is_open(VertexId lower, int axis) const {
    return slots_[static_cast<std::size_t>(lower) * static_cast<std::size_t>(spec_.dim()) + axis] != 0;
  }
  bool is_open_edge(std::size_t edge) const;
  std::size_t open_count() const;
  std::vector<bool> canonical_bits() const;

  /// Copy with the given canonical edges set to `open`.
  EdgeConfiguration with_edges(std::span<const std::size_t> edges, bool open) const;
  EdgeConfiguration with_edge(std::size_t edge, bool open) const {
    return with_edges(std::span<const std::size_t>(&edge, 1), open);
  }

  /// Calls f(neighbour) for each vertex joined to v by an open edge.
  template <class F>
  void for_each_open_neighbor(VertexId v, F&& f) const {
    const int d = spec_.dim();
    const int half = spec_.half_side();
    for (int a = 0; a < d; ++a) {
      const int c = spec_.coord(v, a);
      const auto s = static_cast<VertexId>(spec_.stride(a));
      if (c > -half && is_open(v - s, a)) f(v - s);
      if (c < half && is_open(v, a)) f(v + s);
    }
  }

  friend bool operator==(const EdgeConfiguration& a, const EdgeConfiguration& b) {
    return a.spec_ == b.spec_ && a.slots_ == b.slots_;
  }

 private:
  EdgeConfiguration(BoxSpec spec, double p, std::uint64_t seed, std::vector<std::uint8_t> slots)
      : spec_(std::move(spec)), p_(p), seed_(seed), slots_(std::move(slots)) {}

  friend EdgeConfiguration sample_configuration(const BoxSpec&, double, std::uint64_t);

  BoxSpec spec_;
  double p_;
  std::uint64_t seed_;
  // One byte per (vertex, axis) slot; slots of edges leaving the box stay 0.
  std::vector<std::uint8_t> slots_;
};

/// Bernoulli(p) bond configuration; edge e is open iff the e-th counter word of
/// the stream keyed by `seed` falls below p. Pure in (spec, p, seed).
EdgeConfiguration sample_configuration(const BoxSpec& spec, double p, std::uint64_t seed);

/// Vertices with sup-norm at most L - margin, in lexicographic order.
std::vector<Point> enumerate_measurement_points(const BoxSpec& spec);

}  // namespace chemdist
