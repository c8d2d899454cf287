#include <doctest.h>

#include <algorithm>

#include "chemdist/clusters.hpp"
#include "chemdist/distance.hpp"
#include "chemdist/renormalized.hpp"
#include "chemdist/rng.hpp"
#include "chemdist/sampling.hpp"
#include "oracles.hpp"

using namespace chemdist;

TEST_CASE("red parameters") {
  CHECK_THROWS_AS(make_red_params(3, 4, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_red_params(0, 9, 1.0), InvalidArgument);
  const auto p = make_red_params(3, 5, 1.0);
  CHECK(p.red_length() == 15);
  const auto def = default_red_params(4, 1.3);
  CHECK(def.K == 11);
  CHECK(def.red_length() == 44);
  CHECK(def.K > 4 * 1.3);
}

TEST_CASE("all closed, same box: a single red edge") {
  const BoxSpec s(2, 6);
  const auto closed = sample_configuration(s, 0.0, 0);
  const auto meso = build_meso_partition(s, 4);
  const auto params = make_red_params(4, 5, 1.0);
  for (BoxId b = 0; b < meso.box_count(); ++b) {
    const auto verts = meso.box_vertices(b);
    if (verts.empty()) continue;
    const Point x = s.point(verts.front());
    const Point y = s.point(verts.back());
    CHECK(renormalized_distance(closed, meso, params, x, y) == 20);
    CHECK(renormalized_distance(closed, meso, params, x, x) == 0);
  }
}

TEST_CASE("D^t matches the materialized red-graph oracle and never exceeds D") {
  std::size_t instances = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const BoxSpec s(2, 3);
    const int t = 1 + static_cast<int>(seed % 4);
    const int K = 2 + static_cast<int>(seed % 3);
    const double p = (seed % 5) * 0.2;
    const auto cfg = sample_configuration(s, p, seed);
    const auto meso = build_meso_partition(s, t);
    const auto params = make_red_params(t, K, 0.4);
    const auto ref = oracle::red_floyd_warshall(cfg, meso, params.red_length());
    const auto chem = oracle::floyd_warshall(cfg);
    bool exact = true, contracts = true;
    for (VertexId x = 0; x < s.vertex_count(); x += 3) {
      const auto field = renormalized_field(cfg, meso, params, x);
      for (VertexId y = 0; y < s.vertex_count(); ++y) {
        const auto v = field.at(y);
        exact = exact && v == ref[x][y];
        // a red chain crosses at most |y - x|_1 / t + d + 1 boxes
        const std::int64_t cap = static_cast<std::int64_t>(K) * (s.l1_distance(x, y) + (s.dim() + 1) * t);
        contracts = contracts && v <= std::min(chem[x][y], cap);
      }
      // early stop at a target agrees with the full search
      const VertexId y = static_cast<VertexId>((x * 7 + 5) % s.vertex_count());
      exact = exact && renormalized_field(cfg, meso, params, x, y).at(y) == field.at(y);
    }
    CHECK(exact);
    CHECK(contracts);
    ++instances;
  }
  CHECK(instances == 200);
}

TEST_CASE("endpoints straddling a box boundary need two red edges") {
  const BoxSpec s(2, 3);
  const auto closed = sample_configuration(s, 0.0, 0);
  const auto meso = build_meso_partition(s, 3);
  const auto params = make_red_params(3, 3, 0.5);
  const Point x{-3, 0}, y{-3, -2};
  CHECK(renormalized_distance(closed, meso, params, x, y) == 2 * params.red_length());
  CHECK(renormalized_distance(closed, meso, params, x, y) > params.K * (2 + params.t));
}

TEST_CASE("p = 1 gives l1 whenever l1 is at most Kt") {
  const BoxSpec s(2, 8);
  const auto full = sample_configuration(s, 1.0, 0);
  const auto meso = build_meso_partition(s, 2);
  const auto params = make_red_params(2, 9, 2.0);
  const auto field = renormalized_field(full, meso, params, s.index(Point{0, 0}));
  for (VertexId y = 0; y < s.vertex_count(); ++y) {
    const auto l1 = s.l1(y);
    CHECK(field.at(y) <= l1);
    if (l1 <= params.red_length()) CHECK(field.at(y) == l1);
  }
}

TEST_CASE("opening lattice edges never increases D^t") {
  const BoxSpec s(2, 4);
  const auto cfg = sample_configuration(s, 0.5, 11);
  const auto meso = build_meso_partition(s, 3);
  const auto params = make_red_params(3, 3, 0.5);
  const VertexId src = s.index(Point{0, 0});
  const auto base = renormalized_field(cfg, meso, params, src);
  std::size_t violations = 0;
  for (std::size_t e = 0; e < s.edge_count(); ++e) {
    if (cfg.is_open_edge(e)) continue;
    const auto opened = cfg.with_edge(e, true);
    const auto f = renormalized_field(opened, meso, params, src);
    for (VertexId y = 0; y < s.vertex_count(); ++y) violations += f.at(y) > base.at(y);
  }
  CHECK(violations == 0);
}

TEST_CASE("renormalized geodesic is a valid path of length D^t") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const BoxSpec s(2, 6);
    const int t = 2 + static_cast<int>(seed % 3);
    const auto cfg = sample_configuration(s, 0.55, seed);
    const auto meso = build_meso_partition(s, t);
    const auto params = make_red_params(t, 3, 0.5);
    const VertexId src = s.index(Point{0, 0});
    const VertexId y = s.index(Point{5, -4});
    const auto field = renormalized_field(cfg, meso, params, src, y);
    const auto steps = renormalized_geodesic(field, y);
    std::int64_t length = 0;
    VertexId at = src;
    for (const auto& st : steps) {
      CHECK(st.from == at);
      at = st.to;
      if (st.red) {
        length += params.red_length();
        const auto a = meso.point_boxes(st.from);
        const auto b = meso.point_boxes(st.to);
        std::vector<BoxId> shared;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
        REQUIRE_FALSE(shared.empty());
        CHECK(st.box == shared.front());
      } else {
        length += 1;
        CHECK(s.l1_distance(st.from, st.to) == 1);
        const VertexId lower = std::min(st.from, st.to);
        int axis = 0;
        while (s.coord(lower, axis) == s.coord(std::max(st.from, st.to), axis)) ++axis;
        const auto e = s.edge_index(lower, axis);
        CHECK(cfg.is_open_edge(e));
        CHECK(st.box == meso.edge_box(e));
      }
    }
    CHECK(at == y);
    CHECK(length == field.at(y));
    const auto boxes = visited_boxes(steps);
    CHECK(std::is_sorted(boxes.begin(), boxes.end()));
    CHECK(std::adjacent_find(boxes.begin(), boxes.end()) == boxes.end());
  }
}

TEST_CASE("good boxes") {
  const BoxSpec s(2, 7);
  const auto meso = build_meso_partition(s, 3);
  const auto params = make_red_params(3, 5, 1.0);
  const Point centre{0, 0};
  const auto full = sample_configuration(s, 1.0, 0);
  const auto good = good_box_predicate(full, meso, centre, params);
  CHECK(good.good);
  CHECK_FALSE(good.boundary);
  CHECK(good_box_predicate(sample_configuration(s, 0.0, 0), meso, centre, params).good);

  // U-shaped corridor: (-1,0) and (1,0) joined only through row 7, D = 16 > 4 * 1 * 3
  std::vector<std::pair<Point, int>> open;
  for (int c = 0; c < 7; ++c) {
    open.push_back({{-1, c}, 1});
    open.push_back({{1, c}, 1});
  }
  open.push_back({{-1, 7}, 0});
  open.push_back({{0, 7}, 0});
  const auto corridor = oracle::with_open_edges(s, open);
  CHECK(chemical_distance(corridor, Point{-1, 0}, Point{1, 0}) == Distance(16));
  CHECK_FALSE(good_box_predicate(corridor, meso, centre, params).good);
  // the same corridor is fine once the threshold exceeds its length
  CHECK(good_box_predicate(corridor, meso, centre, make_red_params(3, 6, 1.4)).good);

  const auto edge_box = meso.box_index(0);
  CHECK(good_box_predicate(full, meso, edge_box, params).boundary);
}

TEST_CASE("box resampling touches only the box and is keyed") {
  const BoxSpec s(2, 6);
  const auto cfg = sample_configuration(s, 0.5, 4);
  const auto meso = build_meso_partition(s, 3);
  const BoxId b = meso.box_id(Point{0, 0});
  const auto a1 = resample_box(cfg, meso, b, 0.5, 99);
  const auto a2 = resample_box(cfg, meso, b, 0.5, 99);
  const auto a3 = resample_box(cfg, meso, b, 0.5, 100);
  CHECK(a1 == a2);
  CHECK_FALSE(a1 == a3);
  std::vector<char> in_box(s.edge_count(), 0);
  for (std::size_t e : meso.box_edges(b)) in_box[e] = 1;
  for (std::size_t e = 0; e < s.edge_count(); ++e)
    if (!in_box[e]) CHECK(a1.is_open_edge(e) == cfg.is_open_edge(e));
  const auto all_open = resample_box(cfg, meso, b, 1.0, 5);
  for (std::size_t e : meso.box_edges(b)) CHECK(all_open.is_open_edge(e));
}

TEST_CASE("Efron-Stein report invariants hold on every draw") {
  std::size_t draws = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const BoxSpec s(2, 8);
    const int t = 2 + static_cast<int>(seed % 3);
    const auto cfg = sample_configuration(s, 0.5 + 0.05 * (seed % 5), replication_seed(8, "es", seed));
    const auto meso = build_meso_partition(s, t);
    const auto params = make_red_params(t, 5, 1.2);
    const Point y{5, 2};
    const auto rep = efron_stein_resample(cfg, meso, params, y, 2);
    CHECK(rep.draw_bound_holds);
    CHECK(rep.y_bound_holds);
    CHECK(rep.v_minus_bound_holds);
    CHECK(rep.S == renormalized_distance(cfg, meso, params, Point{0, 0}, y));
    double v = 0.0;
    for (const auto& d : rep.draws) {
      CHECK(d.delta <= (d.visited ? params.red_length() : 0));
      CHECK(static_cast<bool>(rep.visited[d.box]) == d.visited);
      v += d.delta > 0 ? static_cast<double>(d.delta * d.delta) / 2.0 : 0.0;
      ++draws;
    }
    CHECK(rep.v_minus_hat == doctest::Approx(v));
    std::int64_t pow3 = 9;
    CHECK(static_cast<std::int64_t>(rep.y_boxes) * t <= pow3 * (t + rep.S));
    // recompute one draw independently
    const auto& d0 = rep.draws[seed % rep.draws.size()];
    const auto key = derive_seed(cfg.seed(), {tag_of("resample"), d0.box, static_cast<std::uint64_t>(d0.draw)});
    const auto alt = resample_box(cfg, meso, d0.box, cfg.p(), key);
    CHECK(renormalized_distance(alt, meso, params, Point{0, 0}, y) - rep.S == d0.delta);
  }
  CHECK(draws > 1000);
}

TEST_CASE("Efron-Stein at p = 1 has zero deltas") {
  const BoxSpec s(2, 6);
  const auto cfg = sample_configuration(s, 1.0, 3);
  const auto meso = build_meso_partition(s, 3);
  const auto rep = efron_stein_resample(cfg, meso, make_red_params(3, 5, 1.0), Point{4, 1}, 2);
  CHECK(rep.S == 5);
  for (const auto& d : rep.draws) CHECK(d.delta == 0);
  CHECK(rep.v_minus_hat == 0.0);
}
