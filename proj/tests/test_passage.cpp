#include <doctest.h>

#include <cmath>

#include "lptail/passage.hpp"
#include "lptail/rng.hpp"
#include "support.hpp"

using namespace lptail;

TEST_SUITE_BEGIN("passage");

namespace {

WeightField two_by_two() {
  auto g = make_grid(1, 2);
  WeightField f = make_field(g);
  f.at({0, 0}) = 1;
  f.at({1, 0}) = 2;
  f.at({0, 1}) = 3;
  f.at({1, 1}) = 4;
  return f;
}

WeightField random_field(GridPtr g, uint64_t seed, uint64_t epoch) {
  WeightField f = make_field(g);
  for (int64_t dm = 0; dm < g->vertex_count; ++dm)
    f.w[dm] = -std::log1p(-uniform_at({seed, 0}, Stream::oracle, epoch, dm, 0));
  return f;
}

}  // namespace

TEST_CASE("forward and backward tables on the 2x2 example") {
  WeightField f = two_by_two();
  PassageTables t = full_tables(f);
  CHECK(t.fwd[f.grid->corner_dm()] == 8.0);
  CHECK(t.bwd[f.grid->origin_dm()] == 8.0);
  CHECK(t.bwd[f.grid->corner_dm()] == 4.0);  // single-vertex path at the corner

  WeightField z = make_field(make_grid(3, 2));
  PassageTables tz = full_tables(z);
  for (double v : tz.fwd) CHECK(v == 0.0);
  for (double v : tz.bwd) CHECK(v == 0.0);

  WeightField single = make_field(make_grid(0, 2), 2.5);
  CHECK(passage_value(single) == 2.5);
}

TEST_CASE("oracle equivalence on exhaustively enumerated paths") {
  // d=2, n=5: 252 paths; d=3, n=2: 90 paths
  for (auto [n, d] : {std::pair{5, 2}, {2, 3}}) {
    auto g = make_grid(n, d);
    auto paths = testsupport::enumerate_paths(n, d);
    for (int rep = 0; rep < 40; ++rep) {
      WeightField f = random_field(g, 99 + rep, rep);
      double brute = -1;
      for (const auto& p : paths)
        brute = std::max(brute, testsupport::path_weight(f, p));
      CHECK(passage_value(f) == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("geodesic backtracking") {
  WeightField f = two_by_two();
  PassageTables t = full_tables(f);
  Geodesic geo = geodesic(f, t);
  auto coords = geo.coords(*f.grid);
  REQUIRE(coords.size() == 3);
  CHECK(coords[0] == std::vector<int>{0, 0});
  CHECK(coords[1] == std::vector<int>{0, 1});
  CHECK(coords[2] == std::vector<int>{1, 1});
  CHECK(geo.weight(f) == t.fwd[f.grid->corner_dm()]);

  // exact tie prefers the horizontal-first path
  WeightField ft = two_by_two();
  ft.at({1, 0}) = 3;
  PassageTables tt = full_tables(ft);
  auto ct = geodesic(ft, tt).coords(*ft.grid);
  CHECK(ct[1] == std::vector<int>{1, 0});

  // path weight recomputation matches the DP value exactly
  auto g = make_grid(7, 2);
  for (int rep = 0; rep < 20; ++rep) {
    WeightField fr = random_field(g, 7, rep);
    PassageTables tr = full_tables(fr);
    Geodesic gr = geodesic(fr, tr);
    CHECK(gr.weight(fr) == tr.fwd[g->corner_dm()]);
    CHECK(gr.dm.size() == size_t(2 * 7 + 1));
  }
}

TEST_CASE("restricted passage") {
  WeightField f = two_by_two();
  auto full = full_mask(f.grid);
  CHECK(restricted_passage(f, full).value == 8.0);

  // staircase of a single path: unique value
  auto g2 = make_grid(2, 2);
  WeightField f2 = make_field(g2);
  double acc = 0;
  for (int64_t dm = 0; dm < g2->vertex_count; ++dm) {
    f2.w[dm] = 0.25 * (dm + 1);
  }
  RegionMask stair = make_mask(g2);
  double expect = 0;
  int prev_y = 0;
  for (auto [x, y] : std::vector<std::pair<int, int>>{
           {0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}}) {
    mask_set(stair, g2->dm_of_rm[g2->rm_index({x, y})], true);
    expect += f2.at({x, y});
    (void)prev_y;
  }
  acc = restricted_passage(f2, stair).value;
  CHECK(acc == doctest::Approx(expect).epsilon(1e-14));

  // excluded endpoint -> no path
  RegionMask noend = full_mask(f.grid);
  mask_set(noend, f.grid->corner_dm(), false);
  CHECK(restricted_passage(f, noend).value == kNoPath);

  // mask with a hole cutting all paths
  auto g1 = make_grid(1, 2);
  WeightField f1 = make_field(g1, 1.0);
  RegionMask cut = make_mask(g1);
  mask_set(cut, g1->origin_dm(), true);
  mask_set(cut, g1->corner_dm(), true);
  CHECK(restricted_passage(f1, cut).value == kNoPath);
}

TEST_CASE("best path within a mask") {
  auto g = make_grid(10, 2);
  WeightField f = random_field(g, 4, 0);
  // strip 0 with K >= n covers the box: equals L_n
  auto cover = strip(g, 0, 10);
  CHECK(best_path_within(f, cover) == doctest::Approx(passage_value(f)));
  // empty mask: 0
  CHECK(best_path_within(f, make_mask(g)) == 0.0);
  // always <= L_n
  auto s1 = strip(g, 1, 1);
  CHECK(best_path_within(f, s1) <= passage_value(f));
}

TEST_CASE("slack field") {
  WeightField f = two_by_two();
  PassageTables t = full_tables(f);
  auto r1 = slack_field(f, t, 10.0, 1);
  // diagonal 1 in lex order: (0,1) then (1,0)
  REQUIRE(r1.size() == 2);
  CHECK(r1[0] == doctest::Approx(5.0));
  CHECK(r1[1] == doctest::Approx(5.0));

  // all-zero field: R_v = c everywhere
  auto g = make_grid(3, 2);
  WeightField z = make_field(g);
  PassageTables tz = full_tables(z);
  for (int i = 0; i < g->diag_count; ++i)
    for (double r : slack_field(z, tz, 7.5, i)) CHECK(r == 7.5);

  // on-geodesic slack equals the vertex weight when L_n = c
  WeightField fr = random_field(make_grid(6, 2), 11, 3);
  PassageTables tr = full_tables(fr);
  double c = tr.fwd[fr.grid->corner_dm()];
  Geodesic geo = geodesic(fr, tr);
  for (int64_t dm : geo.dm) {
    int i = fr.grid->coord_sum_of_dm(dm);
    auto slack = slack_field(fr, tr, c, i);
    CHECK(slack[dm - fr.grid->diag_offset[i]] ==
          doctest::Approx(fr.w[dm]).epsilon(1e-12));
  }
}

TEST_CASE("homogeneity and monotonicity") {
  auto g = make_grid(6, 2);
  WeightField f = random_field(g, 21, 0);
  double L = passage_value(f);
  WeightField f2 = f;
  for (double& w : f2.w) w *= 3.5;
  CHECK(passage_value(f2) == doctest::Approx(3.5 * L).epsilon(1e-12));

  // increasing any single weight never decreases table values
  WeightField f3 = f;
  f3.w[17] += 2.0;
  PassageTables t = full_tables(f), t3 = full_tables(f3);
  for (int64_t dm = 0; dm < g->vertex_count; ++dm) {
    CHECK(t3.fwd[dm] >= t.fwd[dm]);
    CHECK(t3.bwd[dm] >= t.bwd[dm]);
  }
}

TEST_CASE("diagonal decomposition bound") {
  auto g = make_grid(6, 2);
  WeightField f = random_field(g, 31, 1);
  PassageTables t = full_tables(f);
  double L = t.fwd[g->corner_dm()];
  Geodesic geo = geodesic(f, t);
  std::vector<bool> on_path(g->vertex_count, false);
  for (int64_t dm : geo.dm) on_path[dm] = true;
  for (int64_t dm = 0; dm < g->vertex_count; ++dm) {
    double through = t.fwd[dm] + t.bwd[dm] - f.w[dm];
    CHECK(through <= L + 1e-12);
    if (on_path[dm]) CHECK(through == doctest::Approx(L).epsilon(1e-12));
  }
}

TEST_CASE("incremental equals batch, any interleaving") {
  auto g = make_grid(5, 2);
  WeightField f = random_field(g, 41, 2);
  PassageTables batch = full_tables(f);

  // forward then backward in interleaved order
  PassageTables inc = make_tables(g);
  int fi = 0, bi = g->diag_count - 1;
  uint64_t state = 12345;
  while (fi < g->diag_count || bi >= 0) {
    state = mix64(state);
    if ((state & 1 && fi < g->diag_count) || bi < 0) {
      advance_forward(inc, f, fi++);
    } else {
      retreat_backward(inc, f, bi--);
    }
  }
  for (int64_t dm = 0; dm < g->vertex_count; ++dm) {
    CHECK(inc.fwd[dm] == batch.fwd[dm]);
    CHECK(inc.bwd[dm] == batch.bwd[dm]);
  }

  // non-adjacent watermark is a contract violation
  PassageTables bad = make_tables(g);
  CHECK_THROWS(advance_forward(bad, f, 3));
  CHECK_THROWS(retreat_backward(bad, f, 2));
}

TEST_CASE("resampling locality") {
  auto g = make_grid(5, 2);
  WeightField f = random_field(g, 51, 0);
  PassageTables t = full_tables(f);
  // change diagonal 4; forward below and backward above stay valid
  const int i = 4;
  WeightField f2 = f;
  for (int64_t dm = g->diag_offset[i]; dm < g->diag_offset[i + 1]; ++dm)
    f2.w[dm] *= 0.5;
  PassageTables t2 = full_tables(f2);
  for (int j = 0; j < i; ++j)
    for (int64_t dm = g->diag_offset[j]; dm < g->diag_offset[j + 1]; ++dm)
      CHECK(t2.fwd[dm] == t.fwd[dm]);
  for (int j = i + 1; j < g->diag_count; ++j)
    for (int64_t dm = g->diag_offset[j]; dm < g->diag_offset[j + 1]; ++dm)
      CHECK(t2.bwd[dm] == t.bwd[dm]);
}

TEST_SUITE_END();
