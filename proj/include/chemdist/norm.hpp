#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chemdist/types.hpp"

namespace chemdist {

/// Primitive vectors with every coordinate in {0, +-1, +-2}.
std::vector<Point> direction_fan(int d);

/// Images of y under coordinate permutations and sign flips, deduplicated, sorted.
std::vector<Point> symmetry_orbit(std::span<const int> y);

/// Orbit representative: absolute values sorted in decreasing order.
Point canonical_direction(std::span<const int> y);

struct DirectionEstimate {
  Point direction;  // primitive integer vector
  double mu = 0.0;  // estimate of mu(direction)
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n = 0;  // scale the estimate was read at
  int replications = 0;
};

/// Facet {z : <normal, z> = 1} of the estimated unit ball.
struct Facet {
  std::vector<double> normal;
};

/// Empirical norm on a direction fan, extended to R^d by homogeneity and convexity.
///
/// The extension is the gauge of the convex hull of {y / mu(y)} over the fan,
/// so mu(v) = max over facets of <normal, v>. Raw fan values are kept separately;
/// they coincide with the gauge where the fan points are in convex position.
class NormEstimate {
 public:
  NormEstimate(int d, std::vector<DirectionEstimate> fan, std::uint64_t master_seed);

  int dim() const { return d_; }
  std::uint64_t master_seed() const { return master_seed_; }
  const std::vector<DirectionEstimate>& fan() const { return fan_; }
  const std::vector<Facet>& facets() const { return facets_; }

  double mu(std::span<const double> v) const;
  double mu(std::span<const int> v) const;
  /// Raw estimate for a fan direction or an integer multiple of one; throws otherwise.
  const DirectionEstimate& raw(std::span<const int> v) const;
  double raw_mu(std::span<const int> v) const;

 private:
  int d_;
  std::vector<DirectionEstimate> fan_;
  std::uint64_t master_seed_;
  std::vector<Facet> facets_;
};

/// l1 norm as a NormEstimate on the full fan (the exact answer at p = 1).
NormEstimate l1_norm_estimate(int d, std::uint64_t master_seed = 0);

/// Facets of the convex hull of points symmetric about the origin (d = 2 or 3).
std::vector<Facet> symmetric_hull_facets(int d, std::span<const std::vector<double>> points);

}  // namespace chemdist
