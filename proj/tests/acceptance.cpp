#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "chemdist/clusters.hpp"
#include "chemdist/distance.hpp"
#include "chemdist/estimators.hpp"
#include "chemdist/renormalized.hpp"
#include "chemdist/rng.hpp"
#include "chemdist/runner.hpp"
#include "chemdist/sampling.hpp"
#include "chemdist/skeleton.hpp"
#include "chemdist/stats.hpp"
#include "oracles.hpp"

using namespace chemdist;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMaster = 1;

// Pinned tolerances.
constexpr double kVarRatioMax = 3.0;
constexpr double kSeSlack = 2.0;
constexpr double kEssSeSlack = 3.0;
constexpr double kPassFraction = 0.9;
constexpr double kRelTol = 1e-9;
constexpr std::size_t kTailMinCount = 5;

std::uint64_t seed_for(const std::string& criterion) { return derive_seed(kMaster, {tag_of(criterion)}); }

int hardware_threads() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

ExperimentContext context(int L, double p, std::uint64_t seed) {
  return ExperimentContext{BoxSpec(2, L), p, seed, hardware_threads(), 64};
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::int64_t as_int(const Distance& d) { return d.is_finite() ? static_cast<std::int64_t>(d.value()) : oracle::kInf; }

Verdict exact_oracle() {
  const BoxSpec s(2, 3);
  std::size_t mismatches = 0, pairs = 0;
  for (std::uint64_t r = 0; r < 500; ++r) {
    const double p = 0.3 + 0.1 * static_cast<double>(r % 6);
    const auto cfg = sample_configuration(s, p, replication_seed(seed_for("oracle"), "oracle", r));
    const auto ref = oracle::floyd_warshall(cfg);
    for (VertexId x = 0; x < s.vertex_count(); ++x) {
      const auto field = bfs_distance(cfg, x);
      for (VertexId y = 0; y < s.vertex_count(); ++y, ++pairs) mismatches += as_int(field.at(y)) != ref[x][y];
    }
  }
  return {mismatches == 0, "500 configurations, " + std::to_string(pairs) + " pairs, " + std::to_string(mismatches) +
                               " mismatches"};
}

Verdict degenerate_determinism() {
  const BoxSpec s(2, 5);
  const auto full = sample_configuration(s, 1.0, seed_for("degenerate"));
  const auto none = sample_configuration(s, 0.0, seed_for("degenerate"));
  std::size_t full_bad = 0, none_bad = 0;
  for (VertexId x = 0; x < s.vertex_count(); ++x) {
    const auto f = bfs_distance(full, x);
    const auto g = bfs_distance(none, x);
    for (VertexId y = 0; y < s.vertex_count(); ++y) {
      full_bad += as_int(f.at(y)) != s.l1_distance(x, y);
      none_bad += g.at(y).is_finite() != (x == y);
    }
  }
  const auto var = variance_scaling(context(40, 1.0, seed_for("degenerate")), Point{1, 0},
                                    std::vector<int>{1, 5, 10, 20, 40}, 20);
  double max_var = 0.0;
  for (const auto& row : var.rows) max_var = std::max(max_var, row.var_hat);
  return {full_bad == 0 && none_bad == 0 && max_var == 0.0,
          "p=1 l1 mismatches " + std::to_string(full_bad) + ", p=0 finite off-source " + std::to_string(none_bad) +
              ", max var at p=1 " + fmt(max_var)};
}

Verdict monotone_and_witness() {
  const BoxSpec s(2, 3);
  const auto cfg = sample_configuration(s, 0.55, seed_for("monotone"));
  const auto before = oracle::floyd_warshall(cfg);
  std::size_t flips = 0, violations = 0;
  for (std::size_t e = 0; e < s.edge_count(); ++e) {
    if (cfg.is_open_edge(e)) continue;
    const auto opened = cfg.with_edge(e, true);
    for (VertexId x = 0; x < s.vertex_count(); ++x) {
      const auto f = bfs_distance(opened, x);
      for (VertexId y = 0; y < s.vertex_count(); ++y) violations += as_int(f.at(y)) > before[x][y];
    }
    ++flips;
  }

  const BoxSpec w(2, 2);
  std::vector<bool> bits;
  for (char c : std::string("1001110101011111100110011110111110111100")) bits.push_back(c == '1');
  const EdgeConfiguration witness(w, 0.65, 0, bits);
  const auto opened = witness.with_edge(18, true);
  const auto l0 = label_clusters(witness);
  const auto l1 = label_clusters(opened);
  const Point o{0, 0}, y{2, 1};
  const auto before_star = star_distance(witness, l0, StarProjection(l0), o, y);
  const auto after_star = star_distance(opened, l1, StarProjection(l1), o, y);
  const bool witness_ok = !witness.is_open_edge(18) && after_star > before_star;
  return {violations == 0 && flips > 0 && witness_ok,
          std::to_string(flips) + " single-edge flips, " + std::to_string(violations) +
              " D increases; witness D* " + std::to_string(before_star) + " -> " + std::to_string(after_star)};
}

Verdict renormalized_contracts() {
  const std::uint64_t base = seed_for("contracts");
  std::size_t above_D = 0, above_cap = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const BoxSpec s(2, 6);
    CounterStream rng(derive_seed(base, {i}));
    const double p = 0.3 + 0.5 * unit_interval(rng());
    const int t = 2 + static_cast<int>(rng() % 4);
    const auto params = make_red_params(t, 5, 1.0);
    const auto cfg = sample_configuration(s, p, derive_seed(base, {i, 1}));
    const auto meso = build_meso_partition(s, t);
    const VertexId x = static_cast<VertexId>(rng() % s.vertex_count());
    const VertexId y = static_cast<VertexId>(rng() % s.vertex_count());
    const auto field = renormalized_field(cfg, meso, params, x, y);
    const std::int64_t Dt = field.at(y);
    const auto D = bfs_distance(cfg, x).at(y);
    const std::int64_t cap = params.K * (s.l1_distance(x, y) + t);
    above_D += D.is_finite() && Dt > static_cast<std::int64_t>(D.value());
    above_cap += Dt > cap;
    worst = std::max(worst, static_cast<double>(Dt) / static_cast<double>(cap));
  }

  const BoxSpec s(2, 8);
  const auto closed = sample_configuration(s, 0.0, 0);
  std::size_t same_box = 0, same_box_bad = 0;
  for (int t : {2, 3, 4}) {
    const auto meso = build_meso_partition(s, t);
    const auto params = make_red_params(t, 5, 1.0);
    for (BoxId b = 0; b < meso.box_count(); ++b) {
      const auto verts = meso.box_vertices(b);
      if (verts.size() < 2) continue;
      const auto field = renormalized_field(closed, meso, params, verts.front());
      for (VertexId v : verts) {
        if (v == verts.front()) continue;
        ++same_box;
        same_box_bad += field.at(v) != params.red_length();
      }
    }
  }
  return {above_D == 0 && above_cap == 0 && same_box_bad == 0,
          "200 instances: D^t > D in " + std::to_string(above_D) + ", D^t > K(|y-x|_1+t) in " +
              std::to_string(above_cap) + " (max ratio " + fmt(worst) + "); closed same-box pairs " +
              std::to_string(same_box) + ", D^t != Kt in " + std::to_string(same_box_bad)};
}

Verdict efron_stein() {
  const auto ctx = context(12, 0.7, seed_for("efron-stein"));
  auto rho_ctx = ctx;
  rho_ctx.master_seed = seed_for("efron-stein-rho");
  const auto rho = estimate_rho_hat(rho_ctx, 20);
  const auto params = default_red_params(4, rho.rho_hat);
  const auto res = efron_stein_experiment(ctx, params, Point{6, 0}, 1, 300);
  const bool ok = res.draw_bound_holds && res.y_bound_holds && res.ess_holds && res.configs.size() >= 300;
  return {ok, "300 configurations, " + std::to_string(res.draws.size()) + " draws, K=" + std::to_string(params.K) +
                  " t=4; per-draw bound " + (res.draw_bound_holds ? "held" : "VIOLATED") + ", Y bound " +
                  (res.y_bound_holds ? "held" : "VIOLATED") + "; Var(D^t)=" + fmt(res.var_S) +
                  " vs mean V-=" + fmt(res.mean_v_minus) + " + 3*SE " + fmt(res.se_v_minus)};
}

struct VarTailsSetting {
  ExperimentContext ctx = context(215, 0.7, seed_for("variance"));
};

Verdict variance_scaling_check() {
  const VarTailsSetting setting;
  const auto res = variance_scaling(setting.ctx, Point{1, 0}, std::vector<int>{25, 50, 100, 200}, 400);
  double lo = INFINITY, hi = 0.0;
  std::string cols;
  for (const auto& row : res.rows) {
    lo = std::min(lo, row.normalized);
    hi = std::max(hi, row.normalized);
    cols += " n=" + std::to_string(row.n) + ":" + fmt(row.normalized, 3);
  }
  const double ratio = hi / lo;
  return {ratio <= kVarRatioMax, "var/(m log(1+m))" + cols + "; max/min " + fmt(ratio, 3) + " (limit 3)"};
}

Verdict tails_check() {
  VarTailsSetting setting;
  setting.ctx.master_seed = seed_for("tails");
  const auto res =
      moderate_deviation_tails(setting.ctx, Point{1, 0}, 100, std::vector<double>{1, 2, 3, 4}, 400);
  bool ok = true;
  std::size_t compared = 0;
  std::string counts;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    counts += " x=" + fmt(res.rows[i].x) + ":" + std::to_string(res.rows[i].count);
    if (i + 1 < res.rows.size() && res.rows[i].count >= kTailMinCount && res.rows[i + 1].count >= kTailMinCount) {
      ++compared;
      ok = ok && res.rows[i + 1].count < res.rows[i].count;
    }
  }
  return {ok, "counts of 400" + counts + "; " + std::to_string(compared) +
                  " consecutive pairs with counts >= 5 compared (sd " + fmt(res.sd, 3) + ", sqrt(m) = 10)"};
}

Verdict mean_gap_check() {
  const std::vector<int> grid{16, 32, 64, 128};
  const auto norm = estimate_norm(context(520, 0.7, seed_for("gap-norm")), 256, 100);
  const auto res = mean_gap(context(140, 0.7, seed_for("gap")), Point{1, 0}, grid, 400, norm);
  bool ok = true;
  std::string detail = "mu_hat(e1)=" + fmt(norm.raw_mu(Point{1, 0}), 5) + ";";
  for (const auto& row : res.rows) {
    ok = ok && row.nonnegative;
    detail += " n=" + std::to_string(row.n) + " gap " + fmt(row.gap, 3) + "+-" + fmt(row.gap_se, 2);
  }
  detail += "; doubling:";
  for (const auto& d : res.doubling) {
    ok = ok && d.holds;
    detail += " " + fmt(d.h_over_n, 5) + "->" + fmt(d.h_over_2n, 5) + (d.holds ? "" : "(X)");
  }
  return {ok, detail};
}

Verdict shape_check() {
  const auto exact = shape_experiment(context(60, 1.0, seed_for("shape-p1")), std::vector<int>{10, 25, 50}, 2,
                                      l1_norm_estimate(2, seed_for("shape-p1-norm")));
  double p1_max = 0.0;
  for (const auto& row : exact.directions) p1_max = std::max(p1_max, row.deviation);

  const auto norm = estimate_norm(context(130, 0.7, seed_for("shape-norm")), 50, 100);
  const auto res = shape_experiment(context(130, 0.7, seed_for("shape")), std::vector<int>{50, 100}, 30, norm);
  const auto& s50 = res.summary[0];
  const auto& s100 = res.summary[1];
  const double se = paired_difference_se(res.max_deviation[1], res.max_deviation[0]);
  const bool trend = s100.max_deviation_mean <= s50.max_deviation_mean + kSeSlack * se;
  return {p1_max == 0.0 && trend, "p=1 max deviation " + fmt(p1_max) + "; p=0.7 (30 reps) t=50: " +
                                      fmt(s50.max_deviation_mean) + ", t=100: " + fmt(s100.max_deviation_mean) +
                                      ", paired SE " + fmt(se, 3)};
}

Verdict coupling_check() {
  const std::vector<int> ts{5, 10, 20};
  const auto ctx = context(80, 0.7, seed_for("coupling"));
  auto rho_ctx = ctx;
  rho_ctx.master_seed = seed_for("coupling-rho");
  const auto rho = estimate_rho_hat(rho_ctx, 20);
  const int K = default_red_params(1, rho.rho_hat).K;
  const auto res = coupling_experiment(ctx, Point{60, 0}, ts, K, rho.rho_hat, 200);
  bool ok = true;
  std::string detail = "K=" + std::to_string(K) + " rho_hat=" + fmt(rho.rho_hat, 3) + "; rates";
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    detail += " t=" + std::to_string(res.rows[i].t) + ":" + fmt(res.rows[i].rate, 3) + " [" +
              fmt(res.rows[i].ci_low, 3) + "," + fmt(res.rows[i].ci_high, 3) + "]";
    if (i + 1 < res.rows.size()) ok = ok && res.rows[i + 1].rate <= res.rows[i].ci_high;
  }
  const auto full = coupling_experiment(context(80, 1.0, seed_for("coupling-p1")), Point{60, 0}, ts, 5, 1.0, 5);
  std::size_t p1_mismatches = 0;
  for (const auto& row : full.rows) p1_mismatches += row.mismatches;
  ok = ok && p1_mismatches == 0;
  detail += "; p=1 mismatches " + std::to_string(p1_mismatches);
  return {ok, detail};
}

Verdict skeleton_check() {
  const Point x{20, 0};
  const auto l1 = l1_norm_estimate(2);
  const auto l1_check = check_support_functional(build_support_functional(l1, x), l1);
  const bool p1_ok =
      l1_check.at_x_relative_error <= kRelTol && l1_check.ball_excess <= kRelTol && l1_check.dual_excess <= kRelTol;

  const auto norm = estimate_norm(context(130, 0.7, seed_for("skeleton-norm")), 60, 100);
  double ci_rel = 0.0;
  for (const auto& u : norm.fan()) ci_rel = std::max(ci_rel, (u.ci_high - u.mu) / u.mu);
  const auto f = build_support_functional(norm, x);
  const auto sc = check_support_functional(f, norm);
  const bool sf_ok = sc.at_x_relative_error <= kRelTol && sc.ball_excess <= kRelTol && sc.dual_excess <= ci_rel;

  const auto table = estimate_h_table(context(130, 0.7, seed_for("skeleton-h")), 5 * 20 + 1, 200);
  const HOracle h = [&table](std::span<const int> y) { return table.mean(y); };
  const double mx = norm.mu(x);
  const double C = calibrate_C(f, mx, h);
  const QxSet q(f, mx, C, h);
  const auto lemma = check_increment_lemma(q, norm);
  const bool lemma_ok = lemma.clause1_violations == 0 && lemma.clause4_violations == 0;

  const auto ctx = context(130, 0.7, seed_for("skeleton"));
  bool pass_ok = true;
  std::string fractions;
  for (int n : {2, 4}) {
    const auto res = skeleton_length_experiment(ctx, x, n, q, 60);
    pass_ok = pass_ok && res.pass_fraction >= kPassFraction;
    fractions += " n=" + std::to_string(n) + ":" + fmt(res.pass_fraction, 3);
  }
  return {p1_ok && sf_ok && lemma_ok && pass_ok,
          "C=" + fmt(C, 3) + "; pass fraction (60 configs)" + fractions + "; mu_x at p=0.7: at-x err " +
              fmt(sc.at_x_relative_error, 2) + ", ball excess " + fmt(sc.ball_excess, 2) + ", dual excess " +
              fmt(sc.dual_excess, 2) + " (CI " + fmt(ci_rel, 2) + "); p=1 invariants " + (p1_ok ? "exact" : "FAILED") +
              "; lemma clause1/clause4 violations " + std::to_string(lemma.clause1_violations) + "/" +
              std::to_string(lemma.clause4_violations) + " over " + std::to_string(lemma.members) + " members"};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict reproducibility() {
  const std::map<std::string, json> configs = {
      {"sample", {{"L", 40}}},
      {"dist", {{"L", 20}, {"target", {12, -5}}}},
      {"mu", {{"L", 40}, {"n_grid", {4, 8, 16, 32}}, {"replications", 40}}},
      {"var", {{"L", 40}, {"n_grid", {5, 10, 20}}, {"replications", 40}}},
      {"tails", {{"L", 40}, {"n", 30}, {"replications", 60}}},
      {"gap", {{"L", 40}, {"n_grid", {4, 8, 16}}, {"replications", 30}, {"norm_n", 16}, {"norm_replications", 20}}},
      {"shape", {{"L", 40}, {"t_grid", {10, 20}}, {"replications", 6}, {"norm_n", 12}, {"norm_replications", 20}}},
      {"coupling", {{"L", 30}, {"y", {20, 0}}, {"t_grid", {3, 6}}, {"replications", 30}}},
      {"efron-stein", {{"L", 10}, {"y", {6, 0}}, {"t", 3}, {"configurations", 30}, {"verbose", true}}},
      {"skeleton",
       {{"L", 40}, {"x", {6, 0}}, {"n_grid", {2, 4}}, {"replications", 12}, {"h_replications", 40}, {"norm_n", 12},
        {"norm_replications", 30}}},
      {"diag-tails", {{"L", 30}, {"configurations", 60}}},
  };
  const fs::path root = fs::temp_directory_path() / ("chemdist_acceptance_" + std::to_string(::getpid()));
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& [name, base] : configs) {
    std::map<std::string, std::string> reference;
    int run_index = 0;
    for (int threads : {1, 4, 1}) {
      json config = base;
      config["seed"] = seed_for("reproducibility");
      config["threads"] = threads;
      const fs::path dir = root / (name + "_" + std::to_string(run_index++));
      fs::remove_all(dir);
      config["out"] = dir.string();
      std::ostringstream out, err;
      if (run(name, config, out, err) != kExitOk) return {false, name + " failed: " + err.str()};
      std::map<std::string, std::string> current;
      for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".csv" || entry.path().extension() == ".bin")
          current[entry.path().filename().string()] = slurp(entry.path());
      if (name == "dist") current["stdout"] = out.str();
      if (reference.empty()) {
        reference = current;
        files += current.size();
      } else if (current != reference) {
        differing.push_back(name + "@threads=" + std::to_string(threads));
      }
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(configs.size()) + " experiments, " + std::to_string(files) +
                       " outputs compared across reruns at 1 and 4 threads";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"exact-oracle equivalence", exact_oracle},
      {"degenerate determinism", degenerate_determinism},
      {"D monotone / D* witness", monotone_and_witness},
      {"D^t contracts", renormalized_contracts},
      {"Efron-Stein suite", efron_stein},
      {"variance scaling", variance_scaling_check},
      {"moderate-deviation tails", tails_check},
      {"mean gap", mean_gap_check},
      {"shape sandwich", shape_check},
      {"coupling", coupling_check},
      {"skeleton", skeleton_check},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += v.pass ? 0 : 1;
    std::printf("%s %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
