#include "chemdist/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include "chemdist/rng.hpp"

namespace chemdist {

int l1_norm(std::span<const int> x) {
  int s = 0;
  for (int c : x) s += std::abs(c);
  return s;
}

int linf_norm(std::span<const int> x) {
  int s = 0;
  for (int c : x) s = std::max(s, std::abs(c));
  return s;
}

Point add(std::span<const int> a, std::span<const int> b) {
  Point r(a.begin(), a.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

Point subtract(std::span<const int> a, std::span<const int> b) {
  Point r(a.begin(), a.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

Point scale(std::span<const int> a, int factor) {
  Point r(a.begin(), a.end());
  for (int& c : r) c *= factor;
  return r;
}

Point unit_vector(int d, int axis, int sign) {
  Point e(static_cast<std::size_t>(d), 0);
  e[static_cast<std::size_t>(axis)] = sign;
  return e;
}

std::string format_point(std::span<const int> x) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < x.size(); ++i) out << (i ? "," : "") << x[i];
  out << ')';
  return out.str();
}

BoxSpec::BoxSpec(int d, int half_side, int margin) : d_(d), half_side_(half_side), margin_(margin) {
  if (d < 2) throw InvalidArgument("box dimension must be >= 2, got " + std::to_string(d));
  if (half_side < 1) throw InvalidArgument("box half-side L must be >= 1, got " + std::to_string(half_side));
  if (margin < 0 || margin >= half_side)
    throw InvalidArgument("margin must satisfy 0 <= margin < L, got margin=" + std::to_string(margin) +
                          " L=" + std::to_string(half_side));
  const double approx = std::pow(static_cast<double>(side()), d);
  if (approx > static_cast<double>(std::numeric_limits<VertexId>::max()) / d)
    throw InvalidArgument("box too large: (2L+1)^d * d exceeds the 32-bit index range");
  strides_.assign(static_cast<std::size_t>(d), 1);
  for (int a = d - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * static_cast<std::size_t>(side());
  vertex_count_ = strides_[0] * static_cast<std::size_t>(side());
  edges_per_axis_ = vertex_count_ / static_cast<std::size_t>(side()) * static_cast<std::size_t>(2 * half_side);
}

bool BoxSpec::contains(std::span<const int> x) const {
  if (x.size() != static_cast<std::size_t>(d_)) return false;
  for (int c : x)
    if (c < -half_side_ || c > half_side_) return false;
  return true;
}

VertexId BoxSpec::index(std::span<const int> x) const {
  if (!contains(x)) throw InvalidArgument("point " + format_point(x) + " lies outside the box");
  std::size_t v = 0;
  for (int a = 0; a < d_; ++a) v += static_cast<std::size_t>(x[a] + half_side_) * strides_[a];
  return static_cast<VertexId>(v);
}

Point BoxSpec::point(VertexId v) const {
  Point x(static_cast<std::size_t>(d_));
  for (int a = 0; a < d_; ++a) x[a] = coord(v, a);
  return x;
}

int BoxSpec::linf(VertexId v) const {
  int m = 0;
  for (int a = 0; a < d_; ++a) m = std::max(m, std::abs(coord(v, a)));
  return m;
}

int BoxSpec::l1(VertexId v) const {
  int m = 0;
  for (int a = 0; a < d_; ++a) m += std::abs(coord(v, a));
  return m;
}

int BoxSpec::l1_distance(VertexId u, VertexId v) const {
  int m = 0;
  for (int a = 0; a < d_; ++a) m += std::abs(coord(u, a) - coord(v, a));
  return m;
}

std::size_t BoxSpec::edge_index(VertexId lower, int axis) const {
  // Mixed radix over the lower endpoint: radix 2L along `axis`, 2L+1 elsewhere.
  std::size_t rank = 0;
  for (int a = 0; a < d_; ++a) {
    const auto digit = static_cast<std::size_t>(coord(lower, a) + half_side_);
    const auto radix = static_cast<std::size_t>(a == axis ? 2 * half_side_ : side());
    rank = rank * radix + digit;
  }
  return static_cast<std::size_t>(axis) * edges_per_axis_ + rank;
}

std::pair<VertexId, int> BoxSpec::edge_endpoint(std::size_t edge) const {
  const int axis = static_cast<int>(edge / edges_per_axis_);
  std::size_t rank = edge % edges_per_axis_;
  std::size_t v = 0;
  for (int a = d_ - 1; a >= 0; --a) {
    const auto radix = static_cast<std::size_t>(a == axis ? 2 * half_side_ : side());
    v += (rank % radix) * strides_[a];
    rank /= radix;
  }
  return {static_cast<VertexId>(v), axis};
}

EdgeConfiguration::EdgeConfiguration(BoxSpec spec, double p, std::uint64_t seed,
                                     const std::vector<bool>& canonical_bits)
    : spec_(std::move(spec)), p_(p), seed_(seed) {
  if (canonical_bits.size() != spec_.edge_count())
    throw InvalidArgument("edge bit array has " + std::to_string(canonical_bits.size()) + " entries, expected " +
                          std::to_string(spec_.edge_count()));
  slots_.assign(spec_.vertex_count() * static_cast<std::size_t>(spec_.dim()), 0);
  for (std::size_t e = 0; e < canonical_bits.size(); ++e) {
    if (!canonical_bits[e]) continue;
    auto [v, a] = spec_.edge_endpoint(e);
    slots_[static_cast<std::size_t>(v) * spec_.dim() + a] = 1;
  }
}

bool EdgeConfiguration::is_open_edge(std::size_t edge) const {
  auto [v, a] = spec_.edge_endpoint(edge);
  return is_open(v, a);
}

std::size_t EdgeConfiguration::open_count() const {
  return static_cast<std::size_t>(std::count(slots_.begin(), slots_.end(), std::uint8_t{1}));
}

std::vector<bool> EdgeConfiguration::canonical_bits() const {
  std::vector<bool> bits(spec_.edge_count());
  for (std::size_t e = 0; e < bits.size(); ++e) bits[e] = is_open_edge(e);
  return bits;
}

EdgeConfiguration EdgeConfiguration::with_edges(std::span<const std::size_t> edges, bool open) const {
  auto slots = slots_;
  for (std::size_t e : edges) {
    if (e >= spec_.edge_count()) throw InvalidArgument("edge index out of range: " + std::to_string(e));
    auto [v, a] = spec_.edge_endpoint(e);
    slots[static_cast<std::size_t>(v) * spec_.dim() + a] = open ? 1 : 0;
  }
  return EdgeConfiguration(spec_, p_, seed_, std::move(slots));
}

EdgeConfiguration sample_configuration(const BoxSpec& spec, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("open probability must lie in [0, 1]");
  const int d = spec.dim();
  std::vector<std::uint8_t> slots(spec.vertex_count() * static_cast<std::size_t>(d), 0);
  for (VertexId v = 0; v < spec.vertex_count(); ++v) {
    for (int a = 0; a < d; ++a) {
      if (spec.coord(v, a) == spec.half_side()) continue;
      slots[static_cast<std::size_t>(v) * d + a] = bernoulli_at(seed, spec.edge_index(v, a), p) ? 1 : 0;
    }
  }
  return EdgeConfiguration(spec, p, seed, std::move(slots));
}

std::vector<Point> enumerate_measurement_points(const BoxSpec& spec) {
  std::vector<Point> out;
  for (VertexId v = 0; v < spec.vertex_count(); ++v)
    if (spec.is_measurement_point(v)) out.push_back(spec.point(v));
  return out;
}

}  // namespace chemdist
