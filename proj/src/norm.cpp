#include "chemdist/norm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>

namespace chemdist {

std::vector<Point> direction_fan(int d) {
  if (d < 2) throw InvalidArgument("direction fan needs d >= 2");
  std::vector<Point> fan;
  Point y(static_cast<std::size_t>(d), -2);
  while (true) {
    int g = 0;
    for (int c : y) g = std::gcd(g, std::abs(c));
    if (g == 1) fan.push_back(y);
    int a = d - 1;
    while (a >= 0 && y[a] == 2) y[a--] = -2;
    if (a < 0) break;
    ++y[a];
  }
  return fan;
}

std::vector<Point> symmetry_orbit(std::span<const int> y) {
  const std::size_t d = y.size();
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::set<Point> orbit;
  do {
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      Point image(d);
      for (std::size_t i = 0; i < d; ++i) image[i] = ((mask >> i) & 1u ? -1 : 1) * y[perm[i]];
      orbit.insert(image);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {orbit.begin(), orbit.end()};
}

Point canonical_direction(std::span<const int> y) {
  Point c(y.size());
  std::transform(y.begin(), y.end(), c.begin(), [](int v) { return std::abs(v); });
  std::sort(c.begin(), c.end(), std::greater<>());
  return c;
}

namespace {

// Solves the d x d system rows * a = 1 by Gaussian elimination with partial pivoting.
bool solve_unit_rhs(int d, std::vector<std::vector<double>> rows, std::vector<double>& a) {
  std::vector<double> rhs(static_cast<std::size_t>(d), 1.0);
  for (int col = 0; col < d; ++col) {
    int pivot = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(rows[r][col]) > std::abs(rows[pivot][col])) pivot = r;
    if (std::abs(rows[pivot][col]) < 1e-12) return false;
    std::swap(rows[pivot], rows[col]);
    std::swap(rhs[pivot], rhs[col]);
    for (int r = col + 1; r < d; ++r) {
      const double f = rows[r][col] / rows[col][col];
      for (int c = col; c < d; ++c) rows[r][c] -= f * rows[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  a.assign(static_cast<std::size_t>(d), 0.0);
  for (int r = d - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < d; ++c) s -= rows[r][c] * a[c];
    a[r] = s / rows[r][r];
  }
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<Facet> symmetric_hull_facets(int d, std::span<const std::vector<double>> points) {
  if (d != 2 && d != 3) throw InvalidArgument("convex extension of the norm is implemented for d = 2 and 3 only");
  const std::size_t m = points.size();
  if (m < static_cast<std::size_t>(2 * d)) throw InvalidArgument("degenerate fan: too few points for a hull");
  constexpr double kTol = 1e-9;
  std::vector<Facet> facets;
  std::vector<std::size_t> pick(static_cast<std::size_t>(d));
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  while (true) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i : pick) rows.push_back(points[i]);
    std::vector<double> a;
    if (solve_unit_rhs(d, rows, a)) {
      bool supporting = true;
      for (const auto& z : points)
        if (dot(a, z) > 1.0 + kTol) {
          supporting = false;
          break;
        }
      const bool seen = std::any_of(facets.begin(), facets.end(), [&](const Facet& f) {
        for (int i = 0; i < d; ++i)
          if (std::abs(f.normal[i] - a[i]) > 1e-9 * (1.0 + std::abs(a[i]))) return false;
        return true;
      });
      if (supporting && !seen) facets.push_back(Facet{a});
    }
    // Next combination of d indices out of m.
    int i = d - 1;
    while (i >= 0 && pick[i] == m - static_cast<std::size_t>(d - i)) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < d; ++j) pick[j] = pick[j - 1] + 1;
  }
  if (facets.size() < static_cast<std::size_t>(d + 1))
    throw InvalidArgument("degenerate fan: the scaled fan points do not enclose the origin");
  return facets;
}

NormEstimate::NormEstimate(int d, std::vector<DirectionEstimate> fan, std::uint64_t master_seed)
    : d_(d), fan_(std::move(fan)), master_seed_(master_seed) {
  for (const auto& e : fan_) {
    if (e.direction.size() != static_cast<std::size_t>(d)) throw InvalidArgument("fan direction has wrong dimension");
    if (!(e.mu > 0.0)) throw InvalidArgument("fan estimate must be positive at " + format_point(e.direction));
  }
  if (d == 2 || d == 3) {
    std::vector<std::vector<double>> points;
    for (const auto& e : fan_) {
      std::vector<double> z(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) z[i] = e.direction[i] / e.mu;
      points.push_back(std::move(z));
    }
    facets_ = symmetric_hull_facets(d, points);
  }
}

double NormEstimate::mu(std::span<const double> v) const {
  if (facets_.empty()) throw InvalidArgument("convex extension of the norm is available for d = 2 and 3 only");
  double best = 0.0;
  for (const auto& f : facets_) best = std::max(best, dot(f.normal, v));
  return best;
}

double NormEstimate::mu(std::span<const int> v) const {
  std::vector<double> x(v.begin(), v.end());
  return mu(x);
}

const DirectionEstimate& NormEstimate::raw(std::span<const int> v) const {
  int g = 0;
  for (int c : v) g = std::gcd(g, std::abs(c));
  if (g == 0) throw InvalidArgument("raw norm estimate of the zero vector");
  Point prim(v.begin(), v.end());
  for (int& c : prim) c /= g;
  for (const auto& e : fan_)
    if (e.direction == prim) return e;
  throw InvalidArgument("direction " + format_point(prim) + " is not in the fan");
}

double NormEstimate::raw_mu(std::span<const int> v) const {
  if (std::all_of(v.begin(), v.end(), [](int c) { return c == 0; })) return 0.0;
  int g = 0;
  for (int c : v) g = std::gcd(g, std::abs(c));
  return g * raw(v).mu;
}

NormEstimate l1_norm_estimate(int d, std::uint64_t master_seed) {
  std::vector<DirectionEstimate> fan;
  for (auto& y : direction_fan(d)) {
    const double m = l1_norm(y);
    fan.push_back(DirectionEstimate{y, m, 0.0, m, m, 0, 0});
  }
  return NormEstimate(d, std::move(fan), master_seed);
}

}  // namespace chemdist
