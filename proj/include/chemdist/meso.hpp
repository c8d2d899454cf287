#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chemdist/lattice.hpp"

namespace chemdist {

/// Partition of the edges of a box into mesoscopic boxes of scale t.
///
/// Edge e goes to the grid point t*k closest (Euclidean) to its midpoint; ties
/// go to the lexicographically smallest k. A vertex belongs to every box that
/// owns one of its incident edges, so boxes partition edges but not vertices.
class MesoPartition {
 public:
  MesoPartition(const BoxSpec& spec, int t);

  const BoxSpec& spec() const { return spec_; }
  int scale() const { return t_; }
  std::size_t box_count() const { return box_vertex_offsets_.size() - 1; }

  Point box_index(BoxId b) const;
  bool has_box(std::span<const int> k) const;
  BoxId box_id(std::span<const int> k) const;

  BoxId edge_box(std::size_t edge) const { return edge_box_[edge]; }
  std::span<const BoxId> point_boxes(VertexId v) const {
    return {point_boxes_.data() + point_offsets_[v], point_offsets_[v + 1] - point_offsets_[v]};
  }
  std::span<const VertexId> box_vertices(BoxId b) const {
    return {box_vertices_.data() + box_vertex_offsets_[b], box_vertex_offsets_[b + 1] - box_vertex_offsets_[b]};
  }
  std::span<const std::size_t> box_edges(BoxId b) const {
    return {box_edges_.data() + box_edge_offsets_[b], box_edge_offsets_[b + 1] - box_edge_offsets_[b]};
  }

  /// Box coordinate for a doubled midpoint coordinate (2c) along one axis.
  int grid_coordinate(int doubled) const;

 private:
  BoxSpec spec_;
  int t_;
  int k_min_;
  int k_span_;
  std::vector<BoxId> edge_box_;
  std::vector<std::size_t> point_offsets_;
  std::vector<BoxId> point_boxes_;
  std::vector<std::size_t> box_vertex_offsets_;
  std::vector<VertexId> box_vertices_;
  std::vector<std::size_t> box_edge_offsets_;
  std::vector<std::size_t> box_edges_;
};

MesoPartition build_meso_partition(const BoxSpec& spec, int t);

}  // namespace chemdist
