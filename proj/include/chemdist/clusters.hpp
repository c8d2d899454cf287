#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "chemdist/lattice.hpp"

namespace chemdist {

/// Disjoint-set forest with union by size and path halving.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);

  VertexId find(VertexId x);
  bool unite(VertexId a, VertexId b);

 private:
  std::vector<VertexId> parent_;
  std::vector<std::uint32_t> size_;
};

/// Open clusters of a configuration. A cluster is identified by its
/// lexicographically smallest vertex; isolated vertices are singletons.
class ClusterLabels {
 public:
  const BoxSpec& spec() const { return spec_; }

  VertexId label(VertexId v) const { return label_[v]; }
  std::size_t size(VertexId cluster) const { return size_[cluster]; }
  /// Whether the cluster touches all 2d faces of the box.
  bool spanning(VertexId cluster) const;
  std::size_t cluster_count() const { return cluster_count_; }
  /// Cluster ids in increasing order.
  std::vector<VertexId> clusters() const;

  /// The unique largest cluster when it also spans every face.
  std::optional<VertexId> giant() const { return giant_; }
  bool in_giant(VertexId v) const { return giant_ && label_[v] == *giant_; }
  bool connected(VertexId u, VertexId v) const { return label_[u] == label_[v]; }

 private:
  friend ClusterLabels label_clusters(const EdgeConfiguration&);
  explicit ClusterLabels(const BoxSpec& spec) : spec_(spec) {}

  BoxSpec spec_;
  std::vector<VertexId> label_;
  std::vector<std::uint32_t> size_;   // valid at cluster ids only
  std::vector<std::uint32_t> faces_;  // bitmask of touched faces, valid at cluster ids
  std::size_t cluster_count_ = 0;
  std::optional<VertexId> giant_;
};

ClusterLabels label_clusters(const EdgeConfiguration& cfg);

/// x -> x*: the giant-cluster vertex closest to x in l1, ties broken by the
/// lexicographic order of the displacement x* - x. Holds a reference to the labels.
class StarProjection {
 public:
  /// Throws NoGiantCluster when the labels have no giant.
  explicit StarProjection(const ClusterLabels& labels);

  VertexId operator()(VertexId x) const;
  Point operator()(std::span<const int> x) const;

 private:
  const ClusterLabels* labels_;
};

Point project_star(const ClusterLabels& labels, std::span<const int> x);

/// One row of an empirical tail table.
struct TailRow {
  int r = 0;
  std::size_t n_samples = 0;
  std::size_t count = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Whether the cluster of the origin is not the giant and leaves [-r, r]^d.
bool origin_cluster_finite_and_exits(const EdgeConfiguration& cfg, const ClusterLabels& labels, int r);
/// Whether the giant cluster misses [-r, r]^d. Requires a giant.
bool giant_misses_box(const ClusterLabels& labels, int r);

/// P(origin cluster finite and exits [-r,r]^d); no giant means every cluster is finite.
std::vector<TailRow> finite_cluster_diameter_tail(std::span<const EdgeConfiguration> cfgs,
                                                  std::span<const int> r_grid);
/// P(giant cluster does not meet [-r,r]^d); every configuration must have a giant.
std::vector<TailRow> hole_size_tail(std::span<const EdgeConfiguration> cfgs, std::span<const int> r_grid);

/// Builds tail rows (with Clopper-Pearson 95% intervals) from per-r exceedance counts.
std::vector<TailRow> make_tail_rows(std::span<const int> r_grid, std::span<const std::size_t> counts,
                                    std::size_t n_samples);

}  // namespace chemdist
