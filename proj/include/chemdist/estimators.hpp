#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chemdist/lattice.hpp"
#include "chemdist/norm.hpp"
#include "chemdist/renormalized.hpp"

namespace chemdist {

/// Shared parameters of a Monte Carlo experiment. Replication r of experiment
/// `id` samples with replication_seed(master_seed, id, r), so results do not
/// depend on the thread count.
struct ExperimentContext {
  BoxSpec spec;
  double p = 0.7;
  std::uint64_t master_seed = 0;
  int threads = 1;
  std::size_t max_attempts = 64;
};

/// Throws InvalidArgument (naming the required L) unless `target` is a measurement point.
void require_measurement_point(const BoxSpec& spec, std::span<const int> target);

/// values[j][r] = D*(0, targets[j]) in replication r.
struct StarDistanceSample {
  std::vector<std::vector<double>> values;
  std::size_t rejections = 0;
};

StarDistanceSample collect_star_distances(const ExperimentContext& ctx, const std::string& experiment,
                                          std::span<const Point> targets, std::size_t replications);

struct RhoEstimate {
  double ratio_quantile = 0.0;  // 99.9th percentile of D(x,y)/|x-y|_1
  double rho_hat = 0.0;         // ratio_quantile * safety factor
  std::size_t pairs = 0;
  std::size_t rejections = 0;
};

/// Pairs (0*, y) over connected measurement points y with |y - 0*|_1 >= min_separation.
RhoEstimate estimate_rho_hat(const ExperimentContext& ctx, std::size_t configurations, int min_separation = 10,
                             double level = 0.999, double safety = 1.5);

struct MuRow {
  int n = 0;
  std::size_t replications = 0;
  double h_over_n = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// h(2ny)/(2n) <= h(ny)/n + 2 SE, with SE of the paired per-replication difference.
struct DoublingCheck {
  int n = 0;
  double h_over_n = 0.0;
  double h_over_2n = 0.0;
  double se = 0.0;
  bool holds = true;
};

struct MuResult {
  Point direction;
  std::vector<MuRow> rows;
  std::vector<DoublingCheck> doubling;
  DirectionEstimate estimate;  // read at the largest n
  std::size_t rejections = 0;
};

/// h(ny)/n for each n, pooled over the symmetry orbit of y in every replication.
MuResult estimate_mu(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> n_grid,
                     std::size_t replications);

/// mu on the whole direction fan read at scale n, pooled over symmetry orbits.
NormEstimate estimate_norm(const ExperimentContext& ctx, int n, std::size_t replications,
                           std::size_t* rejections = nullptr);

struct VarianceRow {
  int n = 0;
  std::size_t replications = 0;
  double mean = 0.0;
  double var_hat = 0.0;
  double normalized = 0.0;  // var_hat / (m log(1 + m)), m = |ny|_1
};

struct VarianceResult {
  std::vector<VarianceRow> rows;
  std::size_t rejections = 0;
};

VarianceResult variance_scaling(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> n_grid,
                                std::size_t replications);

struct TailsRow {
  double x = 0.0;
  std::size_t replications = 0;
  std::size_t count = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool in_window = false;  // 1 + log m <= x <= sqrt(m)
};

struct TailsResult {
  std::vector<TailsRow> rows;
  double mean = 0.0;  // taken from the same sample as the tails
  double sd = 0.0;
  std::size_t rejections = 0;
};

/// Empirical P(|D*(0, ny) - mean| > x sqrt(m)), m = |ny|_1, with exact binomial intervals.
TailsResult moderate_deviation_tails(const ExperimentContext& ctx, std::span<const int> y, int n,
                                     std::span<const double> x_grid, std::size_t replications);

struct GapRow {
  int n = 0;
  std::size_t replications = 0;
  double h_hat = 0.0;
  double h_se = 0.0;
  double mu_n = 0.0;  // mu_hat(ny)
  double gap = 0.0;
  double gap_se = 0.0;
  double normalized = 0.0;     // gap / (sqrt(m) log m)
  double per_unit_gap = 0.0;   // h_hat/n - mu_hat(y)
  bool nonnegative = true;     // gap >= -2 gap_se
};

struct GapResult {
  std::vector<GapRow> rows;
  std::vector<DoublingCheck> doubling;  // on h_hat/n
  std::size_t rejections = 0;
};

/// Requires mu_est to come from a different master seed than ctx.
GapResult mean_gap(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> n_grid,
                   std::size_t replications, const NormEstimate& mu_est);

struct ShapeDirectionRow {
  int t = 0;
  std::size_t replication = 0;
  Point direction;
  double radius = 0.0;  // r_u(t), interpolated along the ray s u
  double mu_u = 0.0;
  double deviation = 0.0;  // |r_u(t) mu(u) / t - 1|
};

struct ShapeSummaryRow {
  int t = 0;
  std::size_t replications = 0;
  double max_deviation_mean = 0.0;
  double max_deviation_se = 0.0;
  double inner_margin_mean = 0.0;  // (t - min mu(x) over giant x outside B(t)) / (sqrt t log t)
  double outer_margin_mean = 0.0;  // (max mu(x) over B(t) - t) / (sqrt t log t)
};

struct ShapeResult {
  std::vector<ShapeDirectionRow> directions;
  std::vector<ShapeSummaryRow> summary;
  std::vector<std::vector<double>> max_deviation;  // [t index][replication]
  std::vector<std::pair<int, Point>> snapshot;     // (t, x) for x in B(t), replication 0
  std::size_t rejections = 0;
};

/// Chemical balls B(t) = {x in giant : D(0*, x) <= t} against the mu_est ball.
ShapeResult shape_experiment(const ExperimentContext& ctx, std::span<const int> t_grid, std::size_t replications,
                             const NormEstimate& mu_est, bool keep_snapshot = false);

struct CouplingRow {
  int t = 0;
  int K = 0;
  std::size_t replications = 0;
  std::size_t mismatches = 0;
  double rate = 0.0;  // fraction with D^t(0*, y*) != D*(0, y)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double mean_shortfall = 0.0;  // mean of D* - D^t
  bool contraction_holds = true;  // D^t <= D* in every replication
};

struct CouplingResult {
  std::vector<CouplingRow> rows;
  std::size_t rejections = 0;
};

/// One configuration per replication, shared across the t grid; K is the same for every t.
CouplingResult coupling_experiment(const ExperimentContext& ctx, std::span<const int> y, std::span<const int> t_grid,
                                   int K, double rho_hat, std::size_t replications);

struct EfronSteinConfigRow {
  std::size_t replication = 0;
  std::int64_t S = 0;
  double v_minus_hat = 0.0;
  std::size_t y_boxes = 0;
  bool draw_bound_holds = true;
  bool y_bound_holds = true;
  bool v_minus_bound_holds = true;
};

struct EfronSteinResult {
  RedParams params;
  std::vector<EfronSteinConfigRow> configs;
  std::vector<ResampleDraw> draws;  // all draws, ordered by (replication, box, draw)
  std::vector<std::size_t> draw_owner;  // replication of each draw
  double var_S = 0.0;
  double mean_v_minus = 0.0;
  double se_v_minus = 0.0;
  bool ess_holds = true;  // var_S <= mean_v_minus + 3 se_v_minus
  bool draw_bound_holds = true;
  bool y_bound_holds = true;
  bool v_minus_bound_holds = true;
};

/// Efron-Stein audit of D^t(0, y) over independent configurations (no giant required).
EfronSteinResult efron_stein_experiment(const ExperimentContext& ctx, const RedParams& params, std::span<const int> y,
                                        int n_draws, std::size_t configurations);

}  // namespace chemdist
