#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemdist/clusters.hpp"
#include "chemdist/lattice.hpp"

namespace chemdist {

/// Chemical distance: a finite edge count or the distinguished infinite value.
class Distance {
 public:
  static Distance infinite() { return Distance(); }
  explicit Distance(std::uint64_t edges) : value_(edges) {}

  bool is_finite() const { return value_.has_value(); }
  /// Throws Unreachable when infinite.
  std::uint64_t value() const;
  std::string to_string() const { return is_finite() ? std::to_string(*value_) : "inf"; }

  friend Distance operator+(const Distance& a, const Distance& b) {
    if (!a.is_finite() || !b.is_finite()) return infinite();
    return Distance(*a.value_ + *b.value_);
  }
  friend bool operator==(const Distance&, const Distance&) = default;
  /// Infinite compares greater than every finite value.
  friend std::strong_ordering operator<=>(const Distance& a, const Distance& b) {
    if (a.is_finite() != b.is_finite()) return a.is_finite() ? std::strong_ordering::less : std::strong_ordering::greater;
    if (!a.is_finite()) return std::strong_ordering::equal;
    return *a.value_ <=> *b.value_;
  }

 private:
  Distance() = default;
  std::optional<std::uint64_t> value_;
};

/// Single-source chemical distances over a configuration. Keeps a reference to
/// the configuration, which must outlive the field.
class DistanceField {
 public:
  DistanceField(const EdgeConfiguration& cfg, VertexId source, std::vector<std::uint32_t> raw)
      : cfg_(&cfg), source_(source), raw_(std::move(raw)) {}

  static constexpr std::uint32_t kUnreached = 0xFFFFFFFFu;

  const EdgeConfiguration& configuration() const { return *cfg_; }
  VertexId source() const { return source_; }
  Distance at(VertexId v) const { return raw_[v] == kUnreached ? Distance::infinite() : Distance(raw_[v]); }
  Distance at(std::span<const int> x) const { return at(cfg_->spec().index(x)); }
  bool reached(VertexId v) const { return raw_[v] != kUnreached; }
  std::uint32_t raw(VertexId v) const { return raw_[v]; }

  /// Canonical predecessor: the lexicographically smallest open neighbour one step
  /// closer to the source. Empty at the source and off the source's cluster.
  std::optional<VertexId> parent(VertexId v) const;

 private:
  const EdgeConfiguration* cfg_;
  VertexId source_;
  std::vector<std::uint32_t> raw_;
};

/// Breadth-first search over open edges. `max_depth` stops the search early;
/// vertices beyond it are reported as unreached.
DistanceField bfs_distance(const EdgeConfiguration& cfg, VertexId source,
                           std::uint32_t max_depth = DistanceField::kUnreached);
DistanceField bfs_distance(const EdgeConfiguration& cfg, std::span<const int> source);

Distance chemical_distance(const EdgeConfiguration& cfg, std::span<const int> x, std::span<const int> y);

/// D*(x, y) = D(x*, y*); always finite. Throws NoGiantCluster without a giant.
std::uint64_t star_distance(const EdgeConfiguration& cfg, const ClusterLabels& labels, const StarProjection& star,
                            std::span<const int> x, std::span<const int> y);

/// Shortest open path visiting the waypoints in order: the sum of the legs.
Distance constrained_distance(const EdgeConfiguration& cfg, std::span<const Point> waypoints);

struct Geodesic {
  std::vector<Point> vertices;  // from the source to the target
  std::size_t length() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// Vertex ids of the canonical geodesic from the field's source to y.
std::vector<VertexId> geodesic_vertices(const DistanceField& field, VertexId y);
/// Throws Unreachable when y is off the source's cluster.
Geodesic extract_geodesic(const DistanceField& field, std::span<const int> y);

}  // namespace chemdist
