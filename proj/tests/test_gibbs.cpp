#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "lptail/gibbs.hpp"
#include "lptail/stats.hpp"
#include "support.hpp"

using namespace lptail;

TEST_SUITE_BEGIN("gibbs");

namespace {

WeightField iid_exp_field(GridPtr g, uint64_t seed, uint64_t epoch) {
  auto law = make_exp_law();
  return sample_iid_field(g, *law, {seed, 0}, Stream::oracle, epoch);
}

// empirical lower quantile of L_n for exponential weights
double calibrate_quantile(GridPtr g, double q, int64_t k, uint64_t seed) {
  auto law = make_exp_law();
  std::vector<double> vals;
  vals.reserve(k);
  for (int64_t i = 0; i < k; ++i)
    vals.push_back(passage_value(
        sample_iid_field(g, *law, {seed, 0}, Stream::calib, i)));
  return quantile_of(std::move(vals), q);
}

}  // namespace

TEST_CASE("init_state scaling") {
  auto g = make_grid(4, 2);
  auto law = make_exp_law();
  WeightField f0 = iid_exp_field(g, 1, 0);
  double L0 = passage_value(f0);

  GibbsState st = init_state(f0, 8.0, law, {1, 0}, 0.99);
  CHECK(passage_value(st.field) == doctest::Approx(0.99 * 8.0).epsilon(1e-9));

  // keep-if-feasible returns the field unscaled
  WeightField small = f0;
  for (double& w : small.w) w *= 0.5 * 0.99 * 8.0 / L0;
  GibbsState st2 = init_state(small, 8.0, law, {1, 0}, 0.99, true);
  CHECK(st2.field.w == small.w);

  // scaling preserves the geodesic vertex set
  PassageTables t0 = full_tables(f0);
  auto before = geodesic(f0, t0).dm;
  auto after = geodesic(st.field, st.tables).dm;
  CHECK(before == after);

  WeightField zero = make_field(g);
  CHECK_THROWS(init_state(zero, 8.0, law, {1, 0}));
}

TEST_CASE("sweep with inactive constraint is iid resampling") {
  auto g = make_grid(1, 2);
  auto law = make_exp_law();
  GibbsState st = init_state(iid_exp_field(g, 2, 0), 1000.0, law, {2, 0});
  const int sweeps = 30000;
  std::vector<std::vector<double>> per_site(4);
  for (int s = 0; s < sweeps; ++s) {
    gibbs_sweep(st);
    for (int64_t dm = 0; dm < 4; ++dm)
      per_site[dm].push_back(st.field.w[dm]);
  }
  // each site's marginal is the untruncated law: KS of F(X) against U(0,1)
  for (int64_t dm = 0; dm < 4; ++dm) {
    std::vector<double> u;
    u.reserve(sweeps);
    for (double x : per_site[dm]) u.push_back(law->cdf(x));
    CHECK(ks_uniform(u).p_value > 0.01);
  }
}

TEST_CASE("sweep matches the rejection oracle at n=2") {
  auto g = make_grid(2, 2);
  auto law = make_exp_law();
  double c = calibrate_quantile(g, 0.01, 20000, 3);

  // oracle samples
  std::vector<double> oracle_L, oracle_mass;
  uint64_t offset = 0;
  for (int k = 0; k < 2500; ++k) {
    auto res = rejection_oracle(g, law, c, 1000000, {3, 1}, offset);
    REQUIRE(res.field.has_value());
    offset += res.tries;
    oracle_L.push_back(passage_value(*res.field));
    oracle_mass.push_back(res.field->total_mass());
  }

  // gibbs samples, thinned
  GibbsState st = init_state(iid_exp_field(g, 3, 7), c, law, {3, 2});
  for (int s = 0; s < 200; ++s) gibbs_sweep(st);
  std::vector<double> gibbs_L, gibbs_mass;
  for (int k = 0; k < 2500; ++k) {
    for (int s = 0; s < 8; ++s) gibbs_sweep(st);
    gibbs_L.push_back(st.current_passage());
    gibbs_mass.push_back(st.field.total_mass());
  }

  CHECK(ks_two_sample(oracle_L, gibbs_L).p_value > 0.01);
  CHECK(ks_two_sample(oracle_mass, gibbs_mass).p_value > 0.01);

  // feasibility after every sweep, recomputed from scratch
  CHECK(passage_value(st.field) <= c * (1 + 1e-12));
}

TEST_CASE("discrete kernel fixes the conditional distribution (2x2)") {
  // 3-level weights on the 2x2 grid: one full sweep of per-diagonal
  // conditional resampling must fix the exact conditional distribution
  const double w[3] = {0.2, 1.0, 2.5};
  const double p[3] = {0.3, 0.4, 0.3};
  const double c = 3.0;
  auto g = make_grid(1, 2);
  auto paths = testsupport::enumerate_paths(1, 2);

  // paths as dm-rank sets; dm order on the 2x2 grid: (0,0),(0,1),(1,0),(1,1)
  std::vector<std::vector<int64_t>> path_dms;
  for (const auto& path : paths) {
    std::vector<int64_t> dms;
    for (const auto& v : path) dms.push_back(g->dm_of_rm[g->rm_index(v)]);
    path_dms.push_back(dms);
  }
  auto passage_of = [&](const std::array<int, 4>& lv) {
    double best = 0;
    for (const auto& dms : path_dms) {
      double s = 0;
      for (int64_t dm : dms) s += w[lv[dm]];
      best = std::max(best, s);
    }
    return best;
  };
  // per-site conditional: a level is admissible iff the best path THROUGH
  // the site stays at or below c; paths through a site never contain other
  // sites of the same anti-diagonal, so sites on a diagonal are independent
  auto site_ok = [&](std::array<int, 4> lv, int site, int ell) {
    lv[site] = ell;
    double best = 0;
    for (const auto& dms : path_dms) {
      bool through = false;
      for (int64_t dm : dms) through |= (dm == site);
      if (!through) continue;
      double s = 0;
      for (int64_t dm : dms) s += w[lv[dm]];
      best = std::max(best, s);
    }
    return best <= c;
  };

  std::vector<double> pi(81, 0.0);
  double z = 0;
  for (int s = 0; s < 81; ++s) {
    std::array<int, 4> lv;
    int t = s;
    for (int k = 0; k < 4; ++k) { lv[k] = t % 3; t /= 3; }
    double mass = p[lv[0]] * p[lv[1]] * p[lv[2]] * p[lv[3]];
    if (passage_of(lv) <= c) { pi[s] = mass; z += mass; }
  }
  REQUIRE(z > 0);
  for (auto& v : pi) v /= z;

  std::vector<std::vector<int>> diag_sites = {{0}, {1, 2}, {3}};
  std::vector<double> dist = pi;
  for (const auto& sites : diag_sites) {
    std::vector<double> next(81, 0.0);
    for (int s = 0; s < 81; ++s) {
      if (dist[s] == 0) continue;
      std::array<int, 4> lv;
      int t = s;
      for (int k = 0; k < 4; ++k) { lv[k] = t % 3; t /= 3; }
      std::vector<std::vector<double>> site_probs;
      for (int site : sites) {
        std::vector<double> q(3, 0.0);
        double qz = 0;
        for (int ell = 0; ell < 3; ++ell)
          if (site_ok(lv, site, ell)) { q[ell] = p[ell]; qz += p[ell]; }
        REQUIRE(qz > 0);
        for (auto& v : q) v /= qz;
        site_probs.push_back(q);
      }
      std::vector<int> assign(sites.size(), 0);
      for (;;) {
        auto lv2 = lv;
        double w2 = dist[s];
        for (size_t j = 0; j < sites.size(); ++j) {
          lv2[sites[j]] = assign[j];
          w2 *= site_probs[j][assign[j]];
        }
        int s2 = lv2[0] + 3 * lv2[1] + 9 * lv2[2] + 27 * lv2[3];
        next[s2] += w2;
        size_t j = 0;
        for (; j < sites.size(); ++j) {
          if (++assign[j] < 3) break;
          assign[j] = 0;
        }
        if (j == sites.size()) break;
      }
    }
    dist = std::move(next);
  }
  double tv = 0;
  for (int s = 0; s < 81; ++s) tv += std::abs(dist[s] - pi[s]);
  CHECK(tv / 2 <= 1e-6);
}

TEST_CASE("region-sum move") {
  auto g = make_grid(2, 2);
  auto law = make_exp_law();
  double c = calibrate_quantile(g, 0.05, 20000, 9);

  SUBCASE("single vertex reduces to the site update") {
    GibbsState st = init_state(iid_exp_field(g, 9, 1), c, law, {9, 0});
    for (int s = 0; s < 100; ++s) gibbs_sweep(st);
    RegionMask A = make_mask(g);
    int64_t site = g->diag_offset[1];  // a vertex of D_1
    mask_set(A, site, true);
    auto slack = slack_field(st.field, st.tables, c, 1);
    double r_v = slack[site - g->diag_offset[1]];
    CHECK(region_theta_max(st.field, A, c) ==
          doctest::Approx(r_v).epsilon(1e-7));

    // repeated moves draw iid from the law truncated at r_v
    std::vector<double> moved, direct;
    SiteRng ref({123, 9}, Stream::oracle, 0);
    for (int k = 0; k < 4000; ++k) {
      region_sum_move(st, A);
      moved.push_back(st.field.w[site]);
      direct.push_back(sample_trunc_exp(r_v, ref.next()));
    }
    CHECK(ks_two_sample(moved, direct).p_value > 0.01);
  }

  SUBCASE("theta_max solves L_n(theta) = c") {
    GibbsState st = init_state(iid_exp_field(g, 10, 2), c, law, {10, 0});
    for (int s = 0; s < 50; ++s) gibbs_sweep(st);
    RegionMask A = make_mask(g);
    mask_set(A, 1, true);
    mask_set(A, 3, true);
    mask_set(A, 4, true);
    double theta = region_theta_max(st.field, A, c, 1e-11);
    CHECK(passage_at_region_total(st.field, A, theta) ==
          doctest::Approx(c).epsilon(1e-8));
  }

  SUBCASE("feasibility preserved across moves and mixed sweeps") {
    GibbsState st = init_state(iid_exp_field(g, 11, 3), c, law, {11, 0});
    RegionMask A = full_mask(g);
    for (int k = 0; k < 50; ++k) {
      gibbs_sweep(st);
      region_sum_move(st, A);
      CHECK(passage_value(st.field) <= c * (1 + 1e-12));
    }
  }

  SUBCASE("move preserves the conditional law (uniformity transform)") {
    // exact conditional start via rejection, one move; the truncated Gamma
    // CDF at theta_max must map the new Z_A to U(0,1)
    RegionMask A = make_mask(g);
    mask_set(A, 1, true);
    mask_set(A, 2, true);  // the full diagonal D_1
    std::vector<double> u;
    uint64_t offset = 0;
    const int reps = 4000;
    for (int k = 0; k < reps; ++k) {
      auto res = rejection_oracle(g, law, c, 1000000, {12, 4}, offset);
      REQUIRE(res.field.has_value());
      offset += res.tries;
      GibbsState st;
      st.field = *res.field;
      st.c = c;
      st.law = law;
      st.key = {12, uint64_t(k + 1)};
      st.tables = full_tables(st.field);
      region_sum_move(st, A);
      double theta = region_theta_max(st.field, A, c);
      double zA = st.field.w[1] + st.field.w[2];
      u.push_back(gamma_cdf(2, zA) / gamma_cdf(2, theta));
    }
    CHECK(ks_uniform(u).p_value > 0.01);
  }

  SUBCASE("contract errors") {
    GibbsState st = init_state(iid_exp_field(g, 13, 5), c, law, {13, 0});
    RegionMask empty = make_mask(g);
    CHECK_THROWS(region_sum_move(st, empty));
  }
}

TEST_CASE("coupled sweeps dominate pathwise") {
  auto g = make_grid(8, 2);
  auto law = make_exp_law();
  double c = (4.0 - 1.0) * 8;  // delta = 1
  GibbsState st = init_state(iid_exp_field(g, 20, 0), c, law, {20, 0});
  CoupledState cs = make_coupled(std::move(st));
  std::vector<double> free_vals;
  double mass_gap_sum = 0;
  bool dominated = true;
  for (int s = 0; s < 400; ++s) {
    coupled_sweep(cs);
    for (int64_t dm = 0; dm < g->vertex_count; ++dm) {
      if (cs.star.field.w[dm] > cs.free_field.w[dm]) dominated = false;
      if (s % 20 == 0) free_vals.push_back(cs.free_field.w[dm]);
    }
    mass_gap_sum += cs.free_field.total_mass() - cs.star.field.total_mass();
  }
  CHECK(dominated);
  CHECK(mass_gap_sum / 400 > 0);

  // free-chain marginal stays the untruncated law
  std::vector<double> u;
  for (double x : free_vals) u.push_back(law->cdf(x));
  CHECK(ks_uniform(u).p_value > 0.01);

  // mass gap grows with delta
  double prev_gap = -1;
  for (double delta : {0.5, 1.0, 2.0}) {
    GibbsState s2 = init_state(iid_exp_field(g, 21, 1), (4.0 - delta) * 8, law,
                               {21, uint64_t(10 * delta)});
    CoupledState c2 = make_coupled(std::move(s2));
    for (int s = 0; s < 150; ++s) coupled_sweep(c2);
    double gap = 0;
    for (int s = 0; s < 150; ++s) {
      coupled_sweep(c2);
      gap += c2.free_field.total_mass() - c2.star.field.total_mass();
    }
    gap /= 150;
    CHECK(gap > prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("rejection oracle") {
  auto g = make_grid(2, 2);
  auto law = make_exp_law();

  // c = +inf accepts the first draw
  auto res = rejection_oracle(g, law, std::numeric_limits<double>::infinity(),
                              10, {30, 0});
  CHECK(res.tries == 1);
  CHECK(res.field.has_value());

  // acceptance rate near the calibrated quantile level
  double c = calibrate_quantile(g, 0.01, 50000, 30);
  uint64_t total_tries = 0, offset = 0;
  int accepted = 0;
  while (accepted < 300) {
    auto r = rejection_oracle(g, law, c, 10000000, {30, 1}, offset);
    REQUIRE(r.field.has_value());
    offset += r.tries;
    total_tries += r.tries;
    ++accepted;
  }
  double rate = double(accepted) / total_tries;
  CHECK(rate > 0.005);
  CHECK(rate < 0.02);

  // exhaustion is a value
  auto ex = rejection_oracle(g, law, 1e-6, 50, {30, 2});
  CHECK_FALSE(ex.field.has_value());
  CHECK(ex.tries == 50);

  // conditioned mass is stochastically below unconditioned (n=4)
  auto g4 = make_grid(4, 2);
  double c4 = calibrate_quantile(g4, 0.01, 50000, 31);
  std::vector<double> cond_mass, unc_mass;
  offset = 0;
  for (int k = 0; k < 400; ++k) {
    auto r = rejection_oracle(g4, law, c4, 10000000, {31, 1}, offset);
    REQUIRE(r.field.has_value());
    offset += r.tries;
    cond_mass.push_back(r.field->total_mass());
    unc_mass.push_back(iid_exp_field(g4, 32, k).total_mass());
  }
  CHECK(mann_whitney_less_p(cond_mass, unc_mass) < 0.01);
}

TEST_CASE("diagnostic events") {
  auto g = make_grid(16, 2);
  auto law = make_exp_law();

  // all-zero field: event_B true for every central i
  GibbsState z;
  z.field = make_field(g);
  z.c = 10;
  z.law = law;
  z.tables = full_tables(z.field);
  for (DiagonalIndex i : central_indices(*g, 0.04))
    CHECK(event_B(z, i, 0.04));

  // unconditioned fields: empirical fraction of B_i matches the exact
  // Gamma tail oracle
  const double eps = 0.05;
  auto idx = central_indices(*g, eps);
  double oracle = 0;
  for (DiagonalIndex i : idx) {
    double sz = double(g->diag_size(i));
    oracle += boost::math::gamma_p(sz, (1 - 2 * eps) * sz);
  }
  oracle /= idx.size();
  double frac = 0;
  const int reps = 3000;
  for (int k = 0; k < reps; ++k) {
    GibbsState s;
    s.field = iid_exp_field(g, 40, k);
    s.c = 1e12;
    s.law = law;
    int cnt = 0;
    for (DiagonalIndex i : idx) cnt += event_B(s, i, eps);
    frac += double(cnt) / idx.size();
  }
  frac /= reps;
  CHECK(std::abs(frac - oracle) < 0.01);

  // event_M on a state with known slack: zero field, c below M makes every
  // central diagonal qualify
  GibbsState zs;
  zs.field = make_field(g);
  zs.c = solve_M(eps) * 0.5;
  zs.law = law;
  zs.tables = full_tables(zs.field);
  for (DiagonalIndex i : central_indices(*g, eps))
    CHECK(event_M(zs, i, eps, solve_M(eps)));
}

TEST_SUITE_END();
