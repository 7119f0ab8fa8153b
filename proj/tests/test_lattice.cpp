#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "lptail/lattice.hpp"
#include "support.hpp"

using namespace lptail;

TEST_SUITE_BEGIN("lattice");

TEST_CASE("anti-diagonal enumeration") {
  auto g4 = make_grid(4, 2);
  auto d0 = anti_diagonal(*g4, 0);
  REQUIRE(d0.size() == 1);
  CHECK(d0[0] == std::vector<int>{0, 0});

  auto d4 = anti_diagonal(*g4, 4);
  REQUIRE(d4.size() == 5);
  CHECK(d4[0] == std::vector<int>{0, 4});
  CHECK(d4[1] == std::vector<int>{1, 3});
  CHECK(d4[2] == std::vector<int>{2, 2});
  CHECK(d4[3] == std::vector<int>{3, 1});
  CHECK(d4[4] == std::vector<int>{4, 0});

  auto g43 = make_grid(4, 3);
  auto d1 = anti_diagonal(*g43, 1);
  REQUIRE(d1.size() == 3);
  CHECK(d1[0] == std::vector<int>{0, 0, 1});
  CHECK(d1[1] == std::vector<int>{0, 1, 0});
  CHECK(d1[2] == std::vector<int>{1, 0, 0});

  CHECK_THROWS(anti_diagonal(*g4, 9));
  CHECK_THROWS(anti_diagonal(*g4, -1));
}

TEST_CASE("anti-diagonals partition the box") {
  for (auto [n, d] : {std::pair{4, 2}, {3, 3}, {2, 4}}) {
    auto g = make_grid(n, d);
    int64_t total = 0;
    for (int i = 0; i < g->diag_count; ++i) total += g->diag_size(i);
    CHECK(total == g->vertex_count);
    // |D_i| = min(i, 2n-i)+1 for d = 2
    if (d == 2)
      for (int i = 0; i <= 2 * n; ++i)
        CHECK(g->diag_size(i) == std::min(i, 2 * n - i) + 1);
  }
}

TEST_CASE("strip masks") {
  auto g = make_grid(10, 2);
  auto s0 = strip(g, 0, 2);
  for (int x = 0; x <= 10; ++x)
    for (int y = 0; y <= 10; ++y)
      CHECK(s0.contains({x, y}) == (std::abs(x - y) <= 2));

  auto s1 = strip(g, 1, 2);
  for (int x = 0; x <= 10; ++x)
    for (int y = 0; y <= 10; ++y)
      CHECK(s1.contains({x, y}) == (x - y >= 6 && x - y <= 10));

  auto s3 = strip(g, 3, 2);
  CHECK(s3.cardinality() == 0);

  // disjointness across indices
  for (int i = -2; i <= 2; ++i)
    for (int j = i + 1; j <= 2; ++j) {
      auto a = strip(g, i, 2);
      auto b = strip(g, j, 2);
      for (int64_t dm = 0; dm < g->vertex_count; ++dm)
        CHECK_FALSE((a.contains_dm(dm) && b.contains_dm(dm)));
    }
}

TEST_CASE("cylinder masks") {
  auto g10 = make_grid(10, 2);
  auto ident = MonotoneCurve::identity();
  auto c1 = cylinder(ident, 0.1, g10);
  CHECK(c1.cardinality() == 31);
  for (int x = 0; x <= 10; ++x)
    for (int y = 0; y <= 10; ++y)
      CHECK(c1.contains({x, y}) == (std::abs(y - x) <= 1));

  auto cfull = cylinder(ident, 1.0, g10);
  CHECK(cfull.cardinality() == 121);

  // curve through (0.5, 0.8): column x = 50 covers exactly y in [75, 85]
  MonotoneCurve bent({{0.0, 0.0}, {0.5, 0.8}, {1.0, 1.0}});
  auto g100 = make_grid(100, 2);
  auto cb = cylinder(bent, 0.05, g100);
  for (int y = 0; y <= 100; ++y)
    CHECK(cb.contains({50, y}) == (y >= 75 && y <= 85));

  // cardinality bound (2 eps n + 1)(n + 1)
  CHECK(c1.cardinality() <= (2 * 0.1 * 10 + 1) * 11);

  // monotone nesting in eps
  auto small = cylinder(bent, 0.05, g100);
  auto big = cylinder(bent, 0.2, g100);
  CHECK(mask_subset(small, big));
}

TEST_CASE("central indices") {
  auto g100 = make_grid(100, 2);
  auto idx = central_indices(*g100, 0.04);
  REQUIRE_FALSE(idx.empty());
  CHECK(idx.front() == 5);
  CHECK(idx.back() == 195);
  // every returned diagonal has size >= (sqrt(eps)/4) n
  for (int i : idx) CHECK(g100->diag_size(i) >= 0.05 * 100);

  auto g4 = make_grid(4, 2);
  auto idx4 = central_indices(*g4, 0.04);
  CHECK(idx4.front() == 1);
  CHECK(idx4.back() == 7);

  // eps -> 0+ approaches the full range [1, 2n-1]
  auto wide = central_indices(*g100, 1e-9);
  CHECK(wide.front() == 1);
  CHECK(wide.back() == 199);

  CHECK_THROWS(central_indices(*g100, 0.2));
}

TEST_CASE("every directed path meets each anti-diagonal once") {
  for (auto [n, d] : {std::pair{3, 2}, {2, 3}}) {
    auto g = make_grid(n, d);
    auto paths = testsupport::enumerate_paths(n, d);
    for (const auto& path : paths) {
      std::vector<int> hits(g->diag_count, 0);
      for (const auto& v : path) {
        int s = 0;
        for (int c : v) s += c;
        ++hits[s];
      }
      for (int i = 0; i < g->diag_count; ++i) CHECK(hits[i] == 1);
    }
  }
}

TEST_CASE("monotone curve knots and evaluation") {
  CHECK_THROWS(MonotoneCurve({{0.0, 0.0}, {0.5, 0.5}}));          // bad end
  CHECK_THROWS(MonotoneCurve({{0.0, 0.0}, {0.6, 0.2}, {0.5, 0.9}, {1.0, 1.0}}));
  MonotoneCurve c({{0.0, 0.0}, {0.25, 0.5}, {1.0, 1.0}});
  CHECK(c.eval(0.0) == 0.0);
  CHECK(c.eval(1.0) == 1.0);
  CHECK(c.eval(0.125) == doctest::Approx(0.25));
  CHECK(c.eval(0.625) == doctest::Approx(0.75));
}

TEST_CASE("curve file round trip") {
  std::string path = "curve_test.txt";
  {
    std::ofstream out(path);
    out << "0 0\n0.5 0.8\n1 1\n";
  }
  auto c = MonotoneCurve::from_file(path);
  CHECK(c.eval(0.5) == doctest::Approx(0.8));
  std::remove(path.c_str());
}

TEST_CASE("mask RLE round trip") {
  auto g = make_grid(12, 2);
  auto m = cylinder(MonotoneCurve::identity(), 0.17, g);
  auto rt = mask_from_rle(g, mask_to_rle(m));
  CHECK(rt.cardinality() == m.cardinality());
  for (int64_t dm = 0; dm < g->vertex_count; ++dm)
    CHECK(rt.contains_dm(dm) == m.contains_dm(dm));

  auto g3 = make_grid(2, 3);
  auto m3 = make_mask(g3);
  mask_set(m3, 0, true);
  mask_set(m3, 5, true);
  auto rt3 = mask_from_rle(g3, mask_to_rle(m3));
  CHECK(rt3.cardinality() == 2);
  CHECK(rt3.contains_dm(0));
  CHECK(rt3.contains_dm(5));
}

TEST_SUITE_END();
