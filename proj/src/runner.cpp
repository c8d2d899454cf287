#include "chemdist/runner.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "chemdist/clusters.hpp"
#include "chemdist/config_io.hpp"
#include "chemdist/distance.hpp"
#include "chemdist/estimators.hpp"
#include "chemdist/lattice.hpp"
#include "chemdist/rng.hpp"
#include "chemdist/sampling.hpp"
#include "chemdist/skeleton.hpp"
#include "chemdist/stats.hpp"

namespace chemdist {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"sample", "dist",    "mu",          "var",      "tails",     "gap",
                                                 "shape",  "coupling", "efron-stein", "skeleton", "diag-tails"};
  return names;
}

namespace {

/// Reads parameters from the input config and records every resolved value.
class Params {
 public:
  explicit Params(const json& in) : in_(in.is_null() ? json::object() : in) {
    if (!in_.is_object()) throw InvalidArgument("config must be a JSON object");
  }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    used_.insert(key);
    T value = fallback;
    if (in_.contains(key) && !in_[key].is_null()) value = convert<T>(key);
    resolved_[key] = value;
    return value;
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!in_.contains(key) || in_[key].is_null()) throw InvalidArgument("missing required parameter '" + key + "'");
    T value = convert<T>(key);
    resolved_[key] = value;
    return value;
  }

  bool has(const std::string& key) const { return in_.contains(key) && !in_[key].is_null(); }
  const json& raw(const std::string& key) {
    used_.insert(key);
    return in_[key];
  }
  void record(const std::string& key, const json& value) {
    used_.insert(key);
    resolved_[key] = value;
  }

  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [key, _] : in_.items())
      if (!allowed.count(key)) throw InvalidArgument("unknown parameter '" + key + "'");
  }

  const json& resolved() const { return resolved_; }

 private:
  template <class T>
  T convert(const std::string& key) const {
    const json& v = in_[key];
    if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
      if (v.is_string()) {
        const auto s = v.get<std::string>();
        std::uint64_t out = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec == std::errc() && ptr == s.data() + s.size()) return out;
      }
      throw InvalidArgument("parameter '" + key + "' must be a non-negative 64-bit integer");
    } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::size_t>) {
      if (!v.is_number_integer()) throw InvalidArgument("parameter '" + key + "' must be an integer");
      const auto x = v.get<std::int64_t>();
      if constexpr (std::is_same_v<T, std::size_t>) {
        if (x < 0) throw InvalidArgument("parameter '" + key + "' must be >= 0");
      }
      return static_cast<T>(x);
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw InvalidArgument("parameter '" + key + "' must be a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw InvalidArgument("parameter '" + key + "' must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw InvalidArgument("parameter '" + key + "' must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array()) throw InvalidArgument("parameter '" + key + "' must be an array of integers");
      std::vector<int> out;
      for (const auto& e : v) {
        if (!e.is_number_integer()) throw InvalidArgument("parameter '" + key + "' must be an array of integers");
        out.push_back(e.get<int>());
      }
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw InvalidArgument("parameter '" + key + "' must be an array of numbers");
      std::vector<double> out;
      for (const auto& e : v) {
        if (!e.is_number()) throw InvalidArgument("parameter '" + key + "' must be an array of numbers");
        out.push_back(e.get<double>());
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported parameter type");
    }
  }

  json in_;
  json resolved_ = json::object();
  std::set<std::string> used_;
};

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(long v) { return std::to_string(v); }
std::string fmt(unsigned v) { return std::to_string(v); }
std::string fmt(unsigned long v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }
std::string fmt(const Point& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

class Csv {
 public:
  Csv(const fs::path& path, std::initializer_list<const char*> header) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
    columns_ = header.size();
  }

  template <class... Ts>
  void row(const Ts&... values) {
    static_assert(sizeof...(Ts) > 0);
    if (sizeof...(Ts) != columns_) throw std::logic_error("csv row width mismatch");
    bool first = true;
    ((out_ << (first ? "" : ",") << fmt(values), first = false), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

json point_json(const Point& p) { return json(p); }

struct Common {
  ExperimentContext ctx;
  fs::path out;
  bool verbose = false;
};

Common read_common(Params& params) {
  const int d = params.get<int>("d", 2);
  const int L = params.require<int>("L");
  const int margin = params.get<int>("margin", 0);
  Common c{ExperimentContext{BoxSpec(d, L, margin)}, {}, false};
  c.ctx.p = params.get<double>("p", 0.7);
  if (!(c.ctx.p >= 0.0 && c.ctx.p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  c.ctx.master_seed = params.require<std::uint64_t>("seed");
  const int threads = params.get<int>("threads", default_thread_count());
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  c.ctx.threads = threads;
  c.ctx.max_attempts = params.get<std::size_t>("max_attempts", 64);
  if (c.ctx.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  c.out = params.get<std::string>("out", "out");
  c.verbose = params.get<bool>("verbose", false);
  return c;
}

Point read_point(Params& params, const std::string& key, int d, const Point& fallback) {
  const auto v = params.get<std::vector<int>>(key, fallback);
  if (v.size() != static_cast<std::size_t>(d))
    throw InvalidArgument("parameter '" + key + "' must have " + std::to_string(d) + " coordinates");
  return v;
}

std::uint64_t derived_default_seed(Params& params, const std::string& key, std::uint64_t master) {
  return params.get<std::uint64_t>(key, derive_seed(master, {tag_of(key)}));
}

/// Outcome of one experiment body: extra metadata and rejection count.
struct Outcome {
  std::size_t rejections = 0;
  json extra = json::object();
};

Outcome run_sample(Params& params, Common& c) {
  const auto cfg = sample_configuration(c.ctx.spec, c.ctx.p, c.ctx.master_seed);
  write_configuration(cfg, c.out / "sample.bin", c.out / "sample.json");
  Outcome o;
  o.extra["open_count"] = cfg.open_count();
  o.extra["edge_count"] = c.ctx.spec.edge_count();
  (void)params;
  return o;
}

Outcome run_dist(Params& params, Common& c, std::ostream& out) {
  const int d = c.ctx.spec.dim();
  const Point source = read_point(params, "source", d, Point(static_cast<std::size_t>(d), 0));
  const Point target = read_point(params, "target", d, unit_vector(d, 0));
  const auto& spec = c.ctx.spec;
  if (!spec.contains(source) || !spec.contains(target)) throw InvalidArgument("source and target must lie in the box");
  const auto cfg = sample_configuration(spec, c.ctx.p, c.ctx.master_seed);
  const auto labels = label_clusters(cfg);
  const auto field = bfs_distance(cfg, source);
  const Distance D = field.at(target);

  json result;
  result["source"] = point_json(source);
  result["target"] = point_json(target);
  result["D"] = D.is_finite() ? json(D.value()) : json("inf");
  json geodesic = json::array();
  if (D.is_finite())
    for (const auto& v : extract_geodesic(field, target).vertices) geodesic.push_back(point_json(v));
  result["geodesic"] = geodesic;
  if (labels.giant()) {
    const StarProjection star(labels);
    result["source_star"] = point_json(star(source));
    result["target_star"] = point_json(star(target));
    result["D_star"] = star_distance(cfg, labels, star, source, target);
  } else {
    result["D_star"] = nullptr;
    result["note"] = "no spanning giant cluster; D* undefined for this seed";
  }
  out << result.dump(2) << '\n';
  std::ofstream(c.out / "dist.json") << result.dump(2) << '\n';
  Outcome o;
  o.extra["result"] = result;
  return o;
}

Outcome run_mu(Params& params, Common& c) {
  const int d = c.ctx.spec.dim();
  const Point y = read_point(params, "y", d, unit_vector(d, 0));
  const auto n_grid = params.get<std::vector<int>>("n_grid", {8, 16, 32, 64});
  const auto reps = params.get<std::size_t>("replications", 200);
  const auto res = estimate_mu(c.ctx, y, n_grid, reps);
  Csv csv(c.out / "mu.csv", {"direction", "n", "replications", "h_over_n", "se", "ci_low", "ci_high"});
  for (const auto& r : res.rows) csv.row(res.direction, r.n, r.replications, r.h_over_n, r.se, r.ci_low, r.ci_high);
  Csv dbl(c.out / "mu_doubling.csv", {"n", "h_over_n", "h_over_2n", "se", "holds"});
  for (const auto& r : res.doubling) dbl.row(r.n, r.h_over_n, r.h_over_2n, r.se, r.holds);
  Outcome o;
  o.rejections = res.rejections;
  o.extra["mu_hat"] = res.estimate.mu;
  o.extra["mu_hat_se"] = res.estimate.se;
  return o;
}

Outcome run_var(Params& params, Common& c) {
  const int d = c.ctx.spec.dim();
  const Point y = read_point(params, "y", d, unit_vector(d, 0));
  const auto n_grid = params.get<std::vector<int>>("n_grid", {25, 50, 100, 200});
  const auto reps = params.get<std::size_t>("replications", 400);
  const auto res = variance_scaling(c.ctx, y, n_grid, reps);
  Csv csv(c.out / "var.csv", {"n", "replications", "mean", "var_hat", "var_over_nlogn"});
  double lo = INFINITY, hi = 0.0;
  for (const auto& r : res.rows) {
    csv.row(r.n, r.replications, r.mean, r.var_hat, r.normalized);
    lo = std::min(lo, r.normalized);
    hi = std::max(hi, r.normalized);
  }
  Outcome o;
  o.rejections = res.rejections;
  o.extra["normalized_max_over_min"] = lo > 0.0 ? json(hi / lo) : json(nullptr);
  return o;
}

Outcome run_tails(Params& params, Common& c) {
  const int d = c.ctx.spec.dim();
  const Point y = read_point(params, "y", d, unit_vector(d, 0));
  const int n = params.get<int>("n", 100);
  const auto x_grid = params.get<std::vector<double>>("x_grid", {1.0, 2.0, 3.0, 4.0});
  const auto reps = params.get<std::size_t>("replications", 400);
  const auto res = moderate_deviation_tails(c.ctx, y, n, x_grid, reps);
  Csv csv(c.out / "tails.csv", {"x", "replications", "exceed_count", "estimate", "ci_low", "ci_high", "in_window"});
  for (const auto& r : res.rows) csv.row(r.x, r.replications, r.count, r.estimate, r.ci_low, r.ci_high, r.in_window);
  Outcome o;
  o.rejections = res.rejections;
  o.extra["sample_mean"] = res.mean;
  o.extra["sample_sd"] = res.sd;
  o.extra["note"] = "the centering mean is estimated from the same sample as the tails";
  return o;
}

struct NormSource {
  NormEstimate estimate;
  std::size_t rejections = 0;
};

NormSource read_norm(Params& params, Common& c, int default_n, std::size_t default_reps) {
  const auto seed = derived_default_seed(params, "norm_seed", c.ctx.master_seed);
  const int n = params.get<int>("norm_n", default_n);
  const auto reps = params.get<std::size_t>("norm_replications", default_reps);
  ExperimentContext ctx = c.ctx;
  ctx.master_seed = seed;
  std::size_t rejections = 0;
  auto est = estimate_norm(ctx, n, reps, &rejections);
  return {std::move(est), rejections};
}

void write_norm(const fs::path& path, const NormEstimate& est) {
  Csv csv(path, {"direction", "n", "replications", "mu", "se", "ci_low", "ci_high", "mu_hull"});
  for (const auto& e : est.fan())
    csv.row(e.direction, e.n, e.replications, e.mu, e.se, e.ci_low, e.ci_high, est.mu(e.direction));
}

Outcome run_gap(Params& params, Common& c) {
  const int d = c.ctx.spec.dim();
  const Point y = read_point(params, "y", d, unit_vector(d, 0));
  const auto n_grid = params.get<std::vector<int>>("n_grid", {25, 50, 100, 200});
  const auto reps = params.get<std::size_t>("replications", 200);
  const int max_n = *std::max_element(n_grid.begin(), n_grid.end());
  const auto norm = read_norm(params, c, std::max(1, max_n), reps);
  const auto res = mean_gap(c.ctx, y, n_grid, reps, norm.estimate);
  Csv csv(c.out / "gap.csv", {"n", "replications", "h_hat", "h_se", "mu_n", "gap", "gap_se", "gap_over_sqrt_nlogn",
                              "per_unit_gap", "nonnegative"});
  for (const auto& r : res.rows)
    csv.row(r.n, r.replications, r.h_hat, r.h_se, r.mu_n, r.gap, r.gap_se, r.normalized, r.per_unit_gap,
            r.nonnegative);
  Csv dbl(c.out / "gap_doubling.csv", {"n", "h_over_n", "h_over_2n", "se", "holds"});
  for (const auto& r : res.doubling) dbl.row(r.n, r.h_over_n, r.h_over_2n, r.se, r.holds);
  write_norm(c.out / "gap_norm.csv", norm.estimate);
  Outcome o;
  o.rejections = res.rejections;
  o.extra["norm_rejections"] = norm.rejections;
  return o;
}

Outcome run_shape(Params& params, Common& c) {
  const auto t_grid = params.get<std::vector<int>>("t_grid", {50, 100});
  const auto reps = params.get<std::size_t>("replications", 50);
  const bool snapshot = params.get<bool>("snapshot", true);
  const int max_t = *std::max_element(t_grid.begin(), t_grid.end());
  const auto norm = read_norm(params, c, std::max(1, max_t / 2), 100);
  const auto res = shape_experiment(c.ctx, t_grid, reps, norm.estimate, snapshot);
  Csv csv(c.out / "shape.csv", {"t", "replication", "direction", "radius", "mu_u", "deviation"});
  for (const auto& r : res.directions) csv.row(r.t, r.replication, r.direction, r.radius, r.mu_u, r.deviation);
  Csv sum(c.out / "shape_summary.csv", {"t", "replications", "max_deviation_mean", "max_deviation_se",
                                        "inner_margin_mean", "outer_margin_mean"});
  for (const auto& r : res.summary)
    sum.row(r.t, r.replications, r.max_deviation_mean, r.max_deviation_se, r.inner_margin_mean, r.outer_margin_mean);
  if (snapshot) {
    Csv pts(c.out / "shape_points.csv", {"t", "point"});
    for (const auto& [t, x] : res.snapshot) pts.row(t, x);
  }
  write_norm(c.out / "shape_norm.csv", norm.estimate);
  Outcome o;
  o.rejections = res.rejections;
  o.extra["norm_rejections"] = norm.rejections;
  return o;
}

/// K and rho_hat: explicit values or "auto" (rho_hat from a pilot run, K = ceil(8 rho_hat)).
struct KChoice {
  int K = 0;
  double rho_hat = 0.0;
  std::string rule;
  std::size_t rejections = 0;
};

KChoice read_K(Params& params, Common& c) {
  KChoice k;
  if (params.has("rho_hat") && params.raw("rho_hat").is_number()) {
    k.rho_hat = params.require<double>("rho_hat");
  } else {
    if (params.has("rho_hat") && params.raw("rho_hat") != "auto")
      throw InvalidArgument("rho_hat must be a number or \"auto\"");
    const auto configs = params.get<std::size_t>("rho_configurations", 20);
    ExperimentContext ctx = c.ctx;
    ctx.master_seed = derived_default_seed(params, "rho_seed", c.ctx.master_seed);
    const auto est = estimate_rho_hat(ctx, configs);
    k.rho_hat = est.rho_hat;
    k.rejections = est.rejections;
    params.record("rho_hat", k.rho_hat);
  }
  if (params.has("K") && params.raw("K").is_number_integer()) {
    k.K = params.require<int>("K");
    k.rule = "explicit";
  } else {
    if (params.has("K") && params.raw("K") != "auto") throw InvalidArgument("K must be an integer or \"auto\"");
    const auto def = default_red_params(1, k.rho_hat);
    k.K = def.K;
    k.rule = def.K_rule;
    params.record("K", k.K);
  }
  params.record("K_rule", k.rule);
  make_red_params(1, k.K, k.rho_hat, k.rule);
  return k;
}

Outcome run_coupling(Params& params, Common& c) {
  const int d = c.ctx.spec.dim();
  const Point y = read_point(params, "y", d, unit_vector(d, 0, 60));
  const auto t_grid = params.get<std::vector<int>>("t_grid", {5, 10, 20});
  const auto reps = params.get<std::size_t>("replications", 200);
  const auto k = read_K(params, c);
  const auto res = coupling_experiment(c.ctx, y, t_grid, k.K, k.rho_hat, reps);
  Csv csv(c.out / "coupling.csv", {"t", "K", "n", "statistic", "ci_low", "ci_high"});
  for (const auto& r : res.rows) csv.row(r.t, r.K, r.replications, r.rate, r.ci_low, r.ci_high);
  Csv det(c.out / "coupling_detail.csv", {"t", "mismatches", "mean_shortfall", "contraction_holds"});
  for (const auto& r : res.rows) det.row(r.t, r.mismatches, r.mean_shortfall, r.contraction_holds);
  Outcome o;
  o.rejections = res.rejections + k.rejections;
  return o;
}

Outcome run_efron_stein(Params& params, Common& c) {
  const int d = c.ctx.spec.dim();
  const Point y = read_point(params, "y", d, unit_vector(d, 0, 6));
  const int t = params.get<int>("t", 4);
  const int draws = params.get<int>("draws", 1);
  const auto configs = params.get<std::size_t>("configurations", 300);
  const auto k = read_K(params, c);
  const auto red = make_red_params(t, k.K, k.rho_hat, k.rule);
  const auto res = efron_stein_experiment(c.ctx, red, y, draws, configs);
  const auto ci = normal_interval(res.mean_v_minus, res.se_v_minus);
  Csv csv(c.out / "efron_stein.csv", {"t", "K", "n", "statistic", "ci_low", "ci_high"});
  csv.row(t, k.K, configs, res.mean_v_minus, ci.low, ci.high);
  Csv var(c.out / "efron_stein_variance.csv", {"t", "K", "n", "var_S", "mean_v_minus", "se_v_minus", "ess_holds"});
  var.row(t, k.K, configs, res.var_S, res.mean_v_minus, res.se_v_minus, res.ess_holds);
  Csv per(c.out / "efron_stein_configs.csv", {"replication", "S", "v_minus_hat", "y_boxes", "draw_bound_holds",
                                              "y_bound_holds", "v_minus_bound_holds"});
  for (const auto& r : res.configs)
    per.row(r.replication, r.S, r.v_minus_hat, r.y_boxes, r.draw_bound_holds, r.y_bound_holds, r.v_minus_bound_holds);
  if (c.verbose) {
    Csv audit(c.out / "efron_stein_audit.csv", {"replication", "box", "draw", "delta", "visited"});
    for (std::size_t i = 0; i < res.draws.size(); ++i) {
      const auto& dr = res.draws[i];
      audit.row(res.draw_owner[i], dr.box, dr.draw, dr.delta, dr.visited);
    }
  }
  Outcome o;
  o.rejections = k.rejections;
  o.extra["draw_bound_holds"] = res.draw_bound_holds;
  o.extra["y_bound_holds"] = res.y_bound_holds;
  o.extra["v_minus_bound_holds"] = res.v_minus_bound_holds;
  o.extra["ess_holds"] = res.ess_holds;
  return o;
}

Outcome run_skeleton(Params& params, Common& c) {
  const int d = c.ctx.spec.dim();
  const Point x = read_point(params, "x", d, unit_vector(d, 0, 20));
  const auto n_grid = params.get<std::vector<int>>("n_grid", {2, 4});
  const auto reps = params.get<std::size_t>("replications", 50);
  const int xn = l1_norm(x);
  const int radius = params.get<int>("h_radius", (2 * d + 1) * xn + 1);
  const auto h_reps = params.get<std::size_t>("h_replications", 200);
  ExperimentContext h_ctx = c.ctx;
  h_ctx.master_seed = derived_default_seed(params, "h_seed", c.ctx.master_seed);
  const auto norm = read_norm(params, c, 20, 200);
  if (h_ctx.master_seed == c.ctx.master_seed || norm.estimate.master_seed() == c.ctx.master_seed)
    throw InvalidArgument("h_seed and norm_seed must differ from the experiment seed");

  const HTable table = estimate_h_table(h_ctx, radius, h_reps);
  const HOracle h = [&table](std::span<const int> y) { return table.mean(y); };
  const auto f = build_support_functional(norm.estimate, x);
  const double mx = norm.estimate.mu(x);
  double C = 0.0;
  if (params.has("C") && params.raw("C").is_number()) {
    C = params.require<double>("C");
  } else {
    if (params.has("C") && params.raw("C") != "auto") throw InvalidArgument("C must be a number or \"auto\"");
    C = calibrate_C(f, mx, h);
    params.record("C", C);
  }
  const QxSet q(f, mx, C, h);
  const auto multiples = params.get<std::vector<int>>("threshold_multiples", {});
  Outcome o;
  if (!multiples.empty()) {
    const auto threshold = estimate_threshold_M(norm.estimate, table, multiples);
    o.extra["M_hat"] = threshold.M_hat;
    json tested = json::array();
    for (const auto& [m, ok] : threshold.tested) tested.push_back({{"x_norm", m}, {"all_clauses", ok}});
    o.extra["threshold_tested"] = tested;
  }
  const auto lemma = check_increment_lemma(q, norm.estimate);
  o.extra["lemma"] = {{"members", lemma.members},
                      {"clause1_violations", lemma.clause1_violations},
                      {"clause2_violations", lemma.clause2_violations},
                      {"clause3_violations", lemma.clause3_violations},
                      {"clause4_violations", lemma.clause4_violations},
                      {"max_mu_ratio", lemma.max_mu_ratio}};
  const auto support = check_support_functional(f, norm.estimate);
  o.extra["support_functional"] = {{"coefficients", f.coefficients},
                                   {"at_x_relative_error", support.at_x_relative_error},
                                   {"ball_excess", support.ball_excess},
                                   {"dual_excess", support.dual_excess}};

  Csv csv(c.out / "skeleton.csv", {"replication", "n", "m", "vertices", "bound", "pass", "short", "long"});
  Csv sum(c.out / "skeleton_summary.csv", {"n", "replications", "pass_fraction", "C"});
  for (int n : n_grid) {
    const auto res = skeleton_length_experiment(c.ctx, x, n, q, reps);
    for (const auto& r : res.rows)
      csv.row(r.replication, r.n, r.m, r.vertices, r.bound, r.pass, r.short_count, r.long_count);
    sum.row(n, reps, res.pass_fraction, C);
    o.rejections += res.rejections;
  }
  o.extra["norm_rejections"] = norm.rejections;
  return o;
}

Outcome run_diag_tails(Params& params, Common& c) {
  const auto configs = params.get<std::size_t>("configurations", 400);
  const auto diameter_grid = params.get<std::vector<int>>("diameter_r_grid", {2, 4, 8});
  const auto hole_grid = params.get<std::vector<int>>("hole_r_grid", {0, 1, 2});
  const int d = c.ctx.spec.dim();
  const Point y = read_point(params, "y", d, unit_vector(d, 0, 10));
  const auto s_grid = params.get<std::vector<double>>("s_grid", {1.0, 1.1, 1.2, 1.3, 1.5});
  if (configs < 1) throw InvalidArgument("diag-tails needs at least one configuration");
  require_measurement_point(c.ctx.spec, y);
  const auto& spec = c.ctx.spec;

  std::vector<EdgeConfiguration> cfgs;
  std::vector<std::size_t> rejections(configs, 0);
  std::vector<std::optional<EdgeConfiguration>> slots(configs);
  std::vector<double> ratio(configs, -1.0);  // D(0, y) / |y|_1, -1 when 0 and y are disconnected
  parallel_for(configs, c.ctx.threads, [&](std::size_t r) {
    auto sample =
        sample_with_giant(spec, c.ctx.p, replication_seed(c.ctx.master_seed, "diag-tails", r), c.ctx.max_attempts);
    rejections[r] = sample.rejections;
    const auto D = chemical_distance(sample.cfg, Point(static_cast<std::size_t>(d), 0), y);
    if (D.is_finite()) ratio[r] = static_cast<double>(D.value()) / l1_norm(y);
    slots[r].emplace(std::move(sample.cfg));
  });
  for (auto& s : slots) cfgs.push_back(std::move(*s));

  const auto write_rows = [](const fs::path& path, const std::vector<TailRow>& rows) {
    Csv csv(path, {"r", "n_samples", "estimate", "ci_low", "ci_high"});
    for (const auto& r : rows) csv.row(r.r, r.n_samples, r.estimate, r.ci_low, r.ci_high);
  };
  write_rows(c.out / "diameter_tail.csv", finite_cluster_diameter_tail(cfgs, diameter_grid));
  write_rows(c.out / "hole_tail.csv", hole_size_tail(cfgs, hole_grid));

  Csv csv(c.out / "distance_tail.csv", {"s", "n_samples", "estimate", "ci_low", "ci_high"});
  for (double s : s_grid) {
    std::size_t count = 0;
    for (double q : ratio)
      if (q >= 0.0 && q > s) ++count;
    const auto ci = clopper_pearson(count, configs);
    csv.row(s, configs, static_cast<double>(count) / static_cast<double>(configs), ci.low, ci.high);
  }
  Outcome o;
  for (auto k : rejections) o.rejections += k;
  return o;
}

std::set<std::string> allowed_keys(const std::string& experiment) {
  static const std::map<std::string, std::vector<std::string>> specific = {
      {"sample", {}},
      {"dist", {"source", "target"}},
      {"mu", {"y", "n_grid", "replications"}},
      {"var", {"y", "n_grid", "replications"}},
      {"tails", {"y", "n", "x_grid", "replications"}},
      {"gap", {"y", "n_grid", "replications", "norm_seed", "norm_n", "norm_replications"}},
      {"shape", {"t_grid", "replications", "snapshot", "norm_seed", "norm_n", "norm_replications"}},
      {"coupling", {"y", "t_grid", "replications", "K", "rho_hat", "rho_configurations", "rho_seed"}},
      {"efron-stein", {"y", "t", "draws", "configurations", "K", "rho_hat", "rho_configurations", "rho_seed"}},
      {"skeleton", {"x", "n_grid", "replications", "C", "h_radius", "h_replications", "h_seed", "norm_seed", "norm_n",
                    "norm_replications", "threshold_multiples"}},
      {"diag-tails", {"configurations", "diameter_r_grid", "hole_r_grid", "y", "s_grid"}},
  };
  std::set<std::string> keys = {"d", "L", "margin", "p", "seed", "threads", "max_attempts", "out", "verbose"};
  for (const auto& k : specific.at(experiment)) keys.insert(k);
  return keys;
}

Outcome dispatch(const std::string& experiment, Params& params, Common& c, std::ostream& out) {
  if (experiment == "sample") return run_sample(params, c);
  if (experiment == "dist") return run_dist(params, c, out);
  if (experiment == "mu") return run_mu(params, c);
  if (experiment == "var") return run_var(params, c);
  if (experiment == "tails") return run_tails(params, c);
  if (experiment == "gap") return run_gap(params, c);
  if (experiment == "shape") return run_shape(params, c);
  if (experiment == "coupling") return run_coupling(params, c);
  if (experiment == "efron-stein") return run_efron_stein(params, c);
  if (experiment == "skeleton") return run_skeleton(params, c);
  if (experiment == "diag-tails") return run_diag_tails(params, c);
  throw InvalidArgument("unknown experiment '" + experiment + "'");
}

void prepare_output(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw InvalidArgument("cannot create output directory " + out.string());
  const fs::path probe = out / ".chemdist-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw InvalidArgument("output directory " + out.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

}  // namespace

int run(const std::string& experiment, const json& config, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end())
      throw InvalidArgument("unknown experiment '" + experiment + "'");
    Params params(config);
    params.reject_unknown(allowed_keys(experiment));
    Common common = read_common(params);
    prepare_output(common.out);

    Outcome outcome;
    try {
      outcome = dispatch(experiment, params, common, out);
    } catch (const InvalidArgument&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(e.what());
    }

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json meta;
    meta["experiment"] = experiment;
    meta["version"] = CHEMDIST_VERSION;
    meta["config"] = params.resolved();
    meta["rejections"] = outcome.rejections;
    meta["wall_time_seconds"] = seconds;
    if (!outcome.extra.empty()) meta["results"] = outcome.extra;
    std::ofstream(common.out / (experiment + ".meta.json")) << meta.dump(2) << '\n';
    return kExitOk;
  } catch (const InvalidArgument& e) {
    err << "chemdist " << experiment << ": invalid configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    err << "chemdist " << experiment << ": invalid configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "chemdist " << experiment << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace chemdist
