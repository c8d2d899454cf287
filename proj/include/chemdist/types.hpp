#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chemdist {

/// A lattice point of Z^d; the dimension is the vector length.
using Point = std::vector<int>;

/// Dense index of a vertex inside a BoxSpec (lexicographic order of coordinates).
using VertexId = std::uint32_t;

/// Dense index of a mesoscopic box inside a MesoPartition.
using BoxId = std::uint32_t;

/// Raised for invalid parameters or preconditions; the CLI maps it to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a configuration has no spanning giant cluster.
class NoGiantCluster : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a geodesic is requested to a vertex off the source's cluster.
class Unreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int l1_norm(std::span<const int> x);
int linf_norm(std::span<const int> x);
Point add(std::span<const int> a, std::span<const int> b);
Point subtract(std::span<const int> a, std::span<const int> b);
Point scale(std::span<const int> a, int factor);
Point unit_vector(int d, int axis, int sign = 1);
std::string format_point(std::span<const int> x);

}  // namespace chemdist
