#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemdist/clusters.hpp"
#include "chemdist/lattice.hpp"
#include "chemdist/meso.hpp"

namespace chemdist {

/// Red edges join every pair of vertices sharing a meso box; each has length K*t.
struct RedParams {
  int t = 1;
  int K = 1;
  double rho_hat = 0.0;  // empirical distortion constant the K rule was based on
  std::string K_rule;

  std::int64_t red_length() const { return static_cast<std::int64_t>(K) * t; }
};

/// Validates K > 4 * rho_hat and t >= 1.
RedParams make_red_params(int t, int K, double rho_hat, std::string rule = "explicit");
/// K = ceil(8 * rho_hat), the default headroom above the 4 * rho_hat threshold.
RedParams default_red_params(int t, double rho_hat);

/// Single-source renormalized distances D^t. References cfg and meso, which must outlive it.
class RenormalizedField {
 public:
  static constexpr std::int64_t kUnreached = std::numeric_limits<std::int64_t>::max();

  RenormalizedField(const EdgeConfiguration& cfg, const MesoPartition& meso, RedParams params, VertexId source,
                    std::vector<std::int64_t> dist)
      : cfg_(&cfg), meso_(&meso), params_(std::move(params)), source_(source), dist_(std::move(dist)) {}

  const EdgeConfiguration& configuration() const { return *cfg_; }
  const MesoPartition& partition() const { return *meso_; }
  const RedParams& params() const { return params_; }
  VertexId source() const { return source_; }
  std::int64_t at(VertexId v) const { return dist_[v]; }

 private:
  const EdgeConfiguration* cfg_;
  const MesoPartition* meso_;
  RedParams params_;
  VertexId source_;
  std::vector<std::int64_t> dist_;
};

/// Exact shortest paths with lattice arcs of length 1 and red arcs of length K*t
/// (bucket queue). Red arcs are expanded once per box, from its first settled vertex.
/// With a target the search stops once the target is settled; distances of
/// vertices settled before it are exact.
RenormalizedField renormalized_field(const EdgeConfiguration& cfg, const MesoPartition& meso, const RedParams& params,
                                     VertexId source, std::optional<VertexId> target = std::nullopt);

std::int64_t renormalized_distance(const EdgeConfiguration& cfg, const MesoPartition& meso, const RedParams& params,
                                   std::span<const int> x, std::span<const int> y);

/// One arc of a D^t geodesic; `box` owns the lattice edge or the red edge.
struct RenormalizedStep {
  VertexId from = 0;
  VertexId to = 0;
  bool red = false;
  BoxId box = 0;
};

/// Canonical D^t geodesic from the field's source to y: walking back from y, the
/// lexicographically smallest predecessor wins (lattice before red on equal vertices);
/// a red arc is attributed to the smallest box shared by its endpoints.
std::vector<RenormalizedStep> renormalized_geodesic(const RenormalizedField& field, VertexId y);

/// Sorted distinct boxes whose lattice or red edges the steps use.
std::vector<BoxId> visited_boxes(std::span<const RenormalizedStep> steps);

struct GoodBoxResult {
  bool good = true;
  bool boundary = false;  // some *-adjacent box lies outside the partition
};

/// Box k is good when every connected pair (x in box k, y in box k or a
/// *-adjacent box) has D(x, y) <= 4 * rho_hat * t.
GoodBoxResult good_box_predicate(const EdgeConfiguration& cfg, const ClusterLabels& labels,
                                 const MesoPartition& meso, std::span<const int> k, const RedParams& params);
GoodBoxResult good_box_predicate(const EdgeConfiguration& cfg, const MesoPartition& meso, std::span<const int> k,
                                 const RedParams& params);

/// Copy of cfg with every edge of `box` redrawn as Bernoulli(p) from `key`.
EdgeConfiguration resample_box(const EdgeConfiguration& cfg, const MesoPartition& meso, BoxId box, double p,
                               std::uint64_t key);

struct ResampleDraw {
  BoxId box = 0;
  int draw = 0;
  std::int64_t delta = 0;  // S^(i) - S
  bool visited = false;    // R_i: the canonical geodesic uses an edge of box i
};

struct ResampleReport {
  std::int64_t S = 0;  // D^t(0, y)
  std::vector<char> visited;  // per box
  std::vector<ResampleDraw> draws;
  double v_minus_hat = 0.0;
  std::size_t y_boxes = 0;
  std::size_t boxes_examined = 0;
  bool draw_bound_holds = true;     // S^(i) - S <= K t 1{R_i} on every draw
  bool y_bound_holds = true;        // Y <= 3^d (1 + S / t)
  bool v_minus_bound_holds = true;  // v_minus_hat <= 3^d K^2 t (S + t)
};

/// Resamples each non-empty box `n_draws` times (keys derived from the
/// configuration seed, "resample", box, draw) and estimates V_- for D^t(0, y).
ResampleReport efron_stein_resample(const EdgeConfiguration& cfg, const MesoPartition& meso, const RedParams& params,
                                    std::span<const int> y, int n_draws);

}  // namespace chemdist
