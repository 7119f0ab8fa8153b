#include "lptail/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace lptail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double feas_tol(double c) { return 1e-9 * std::max(1.0, std::abs(c)); }
}  // namespace

GibbsState init_state(const WeightField& field0, double c, LawPtr law,
                      RngKey key, double s0, bool keep_if_feasible) {
  if (!(c > 0.0)) throw std::invalid_argument("init_state: c must be > 0");
  if (!(s0 > 0.0 && s0 < 1.0))
    throw std::invalid_argument("init_state: s0 must lie in (0,1)");
  GibbsState st;
  st.field = field0;
  st.c = c;
  st.law = std::move(law);
  st.key = key;
  double L = passage_value(st.field);
  if (!(L > 0.0))
    throw std::invalid_argument("init_state: degenerate all-zero field");
  if (!(keep_if_feasible && L <= s0 * c)) {
    double scale = s0 * c / L;
    for (double& w : st.field.w) w *= scale;
  }
  st.tables = full_tables(st.field);
  if (st.current_passage() > c + feas_tol(c))
    throw std::logic_error("init_state: scaled field infeasible");
  return st;
}

// One ascending pass. At diagonal i the forward table is valid below i (with
// this sweep's new weights) and the backward table above i (still untouched),
// so R_v = c - fwd_in_max - bwd_out_max is exactly the slack given the rest
// of the current field. Every path meets D_i once, so X_v <= R_v for all
// v in D_i keeps L_n <= c.
void gibbs_sweep(GibbsState& state) {
  const GridSpec& g = *state.field.grid;
  PassageTables& t = state.tables;
  if (!t.bwd_full())
    backward_table(t, state.field);
  t.fwd_mark = -1;
  const double tol = feas_tol(state.c);
  for (int i = 0; i < g.diag_count; ++i) {
    t.bwd_mark = i + 1;  // diagonals < i+1 are stale from this sweep
    for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm) {
      double a = fwd_in_max(t, dm);
      double b = bwd_out_max(t, dm);
      double r = state.c - a - b;
      if (r < -tol)
        throw std::logic_error("gibbs_sweep: negative slack, state infeasible");
      r = std::max(r, 0.0);
      double u = uniform_at(state.key, Stream::sweep,
                            static_cast<uint64_t>(state.sweep_count),
                            static_cast<uint64_t>(dm), 0);
      double x = (r == 0.0) ? 0.0 : state.law->sample_truncated(r, u);
      state.field.w[dm] = x;
      t.fwd[dm] = x + a;
    }
    t.fwd_mark = i;
  }
  backward_table(t, state.field);
  ++state.sweep_count;
  if (state.current_passage() > state.c + tol)
    throw std::logic_error("gibbs_sweep: feasibility lost");
}

double passage_at_region_total(const WeightField& f, const RegionMask& A,
                               double z) {
  const GridSpec& g = *f.grid;
  double zA = 0.0;
  for (int64_t dm = 0; dm < g.vertex_count; ++dm)
    if (A.bits[dm]) zA += f.w[dm];
  if (!(zA > 0.0))
    throw std::invalid_argument("passage_at_region_total: region mass is 0");
  const double scale = z / zA;
  WeightField scratch = f;
  for (int64_t dm = 0; dm < g.vertex_count; ++dm)
    if (A.bits[dm]) scratch.w[dm] = f.w[dm] * scale;
  return passage_value(scratch);
}

double region_theta_max(const WeightField& f, const RegionMask& A, double c,
                        double tol) {
  const GridSpec& g = *f.grid;
  double zA = 0.0;
  for (int64_t dm = 0; dm < g.vertex_count; ++dm)
    if (A.bits[dm]) zA += f.w[dm];
  if (!(zA > 0.0))
    throw std::invalid_argument("region_theta_max: region mass is 0");
  double lo = zA;
  if (passage_at_region_total(f, A, lo) > c + feas_tol(c))
    throw std::logic_error("region_theta_max: current state infeasible");
  double hi = std::max(zA, 1e-12);
  int guard = 0;
  while (passage_at_region_total(f, A, hi) <= c) {
    hi *= 2.0;
    if (++guard > 200)
      throw std::logic_error("region_theta_max: failed to bracket");
  }
  // L_n(z) is nondecreasing and continuous, so bisection brackets theta_max
  while (hi - lo > tol * std::max(1.0, hi)) {
    double mid = 0.5 * (lo + hi);
    if (passage_at_region_total(f, A, mid) <= c) lo = mid; else hi = mid;
  }
  return lo;  // feasible endpoint
}

namespace {

// log density z^{m-1} prod f(z y_v) up to a constant
double region_log_density(const WeightLaw& law, double z, int64_t m,
                          const std::vector<double>& dirs) {
  double s = (m - 1) * std::log(z);
  for (double y : dirs) s += std::log(law.density(z * y));
  return s;
}

double sample_region_total_general(const WeightLaw& law, int64_t m,
                                   const std::vector<double>& dirs, double cap,
                                   double u) {
  // numeric inverse CDF on (0, cap]: trapezoid cumulative of the
  // log-stabilized density on a fine grid, then monotone bisection
  const int K = 4096;
  std::vector<double> logg(K + 1);
  double peak = -kInf;
  for (int k = 0; k <= K; ++k) {
    double z = cap * (k + 0.5 * (k == 0)) / K;
    logg[k] = region_log_density(law, z, m, dirs);
    peak = std::max(peak, logg[k]);
  }
  std::vector<double> cum(K + 1, 0.0);
  for (int k = 1; k <= K; ++k) {
    double a = std::exp(logg[k - 1] - peak);
    double b = std::exp(logg[k] - peak);
    cum[k] = cum[k - 1] + 0.5 * (a + b) * (cap / K);
  }
  double target = u * cum.back();
  auto it = std::lower_bound(cum.begin(), cum.end(), target);
  int k = std::max<int>(1, it - cum.begin());
  double zlo = cap * (k - 1) / K, zhi = cap * k / K;
  double clo = cum[k - 1], chi = cum[k];
  // linear within the panel is enough at this grid resolution
  double frac = (chi > clo) ? (target - clo) / (chi - clo) : 0.5;
  return zlo + frac * (zhi - zlo);
}

}  // namespace

void region_sum_move(GibbsState& state, const RegionMask& A, double tol) {
  const GridSpec& g = *state.field.grid;
  if (A.count == 0) throw std::invalid_argument("region_sum_move: empty region");
  double zA = 0.0;
  for (int64_t dm = 0; dm < g.vertex_count; ++dm)
    if (A.bits[dm]) zA += state.field.w[dm];
  if (!(zA > 0.0))
    throw std::invalid_argument("region_sum_move: region mass must be > 0");

  const double theta = region_theta_max(state.field, A, state.c, tol);

  // Lemma-style sanity bound: theta_max <= c * Z_A / L_n(A-pinned), checked
  // whenever a pinned path inside A exists.
  double pinned = restricted_passage(state.field, A).value;
  if (pinned > 0.0 && theta > state.c * zA / pinned * (1.0 + 1e-6))
    throw std::logic_error("region_sum_move: theta_max exceeds pinned bound");

  SiteRng rng(state.key, Stream::region,
              static_cast<uint64_t>(state.move_count), 0);
  double z_new;
  if (state.law->name() == "exp") {
    z_new = sample_trunc_gamma(A.count, theta, rng);
  } else {
    double cap = std::min(theta, 2.0 * state.law->mean() * A.count);
    std::vector<double> dirs;
    dirs.reserve(A.count);
    for (int64_t dm = 0; dm < g.vertex_count; ++dm)
      if (A.bits[dm]) dirs.push_back(state.field.w[dm] / zA);
    z_new = sample_region_total_general(*state.law, A.count, dirs, cap,
                                        rng.next());
  }
  const double scale = z_new / zA;
  for (int64_t dm = 0; dm < g.vertex_count; ++dm)
    if (A.bits[dm]) state.field.w[dm] *= scale;
  ++state.move_count;
  state.tables = full_tables(state.field);
  if (state.current_passage() > state.c + feas_tol(state.c))
    throw std::logic_error("region_sum_move: feasibility lost");
}

CoupledState make_coupled(GibbsState star) {
  CoupledState cs;
  cs.free_field = star.field;
  cs.star = std::move(star);
  cs.sweep_count = cs.star.sweep_count;
  return cs;
}

// Both chains resample the same schedule from the same per-site uniform; the
// inverse CDF is monotone in the truncation bound, so star <= free pathwise.
void coupled_sweep(CoupledState& cs) {
  GibbsState& st = cs.star;
  const GridSpec& g = *st.field.grid;
  PassageTables& t = st.tables;
  if (!t.bwd_full()) backward_table(t, st.field);
  t.fwd_mark = -1;
  const double tol = 1e-9 * std::max(1.0, std::abs(st.c));
  for (int i = 0; i < g.diag_count; ++i) {
    t.bwd_mark = i + 1;
    for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm) {
      double a = fwd_in_max(t, dm);
      double b = bwd_out_max(t, dm);
      double r = st.c - a - b;
      if (r < -tol)
        throw std::logic_error("coupled_sweep: negative slack");
      r = std::max(r, 0.0);
      double u = uniform_at(st.key, Stream::sweep,
                            static_cast<uint64_t>(st.sweep_count),
                            static_cast<uint64_t>(dm), 0);
      double x_star = (r == 0.0) ? 0.0 : st.law->sample_truncated(r, u);
      st.field.w[dm] = x_star;
      t.fwd[dm] = x_star + a;
      cs.free_field.w[dm] = st.law->sample(u);
    }
    t.fwd_mark = i;
  }
  backward_table(t, st.field);
  ++st.sweep_count;
  cs.sweep_count = st.sweep_count;
}

WeightField sample_iid_field(GridPtr grid, const WeightLaw& law, RngKey key,
                             Stream stream, uint64_t epoch) {
  WeightField f = make_field(std::move(grid));
  for (int64_t dm = 0; dm < f.grid->vertex_count; ++dm)
    f.w[dm] = law.sample(uniform_at(key, stream, epoch, dm, 0));
  return f;
}

OracleResult rejection_oracle(GridPtr grid, const LawPtr& law, double c,
                              uint64_t max_tries, RngKey key,
                              uint64_t try_offset) {
  if (max_tries < 1)
    throw std::invalid_argument("rejection_oracle: max_tries >= 1");
  OracleResult res;
  for (uint64_t t = 0; t < max_tries; ++t) {
    uint64_t epoch = try_offset + t;
    WeightField f = sample_iid_field(grid, *law, key, Stream::oracle, epoch);
    res.tries = t + 1;
    if (passage_value(f) <= c) {
      res.field = std::move(f);
      return res;
    }
  }
  return res;  // exhausted: field absent
}

bool event_B(const GibbsState& state, DiagonalIndex i, double eps) {
  const GridSpec& g = *state.field.grid;
  if (i < 0 || i >= g.diag_count)
    throw std::out_of_range("event_B: diagonal out of range");
  double sum = 0.0;
  for (int64_t dm = g.diag_offset[i]; dm < g.diag_offset[i + 1]; ++dm)
    sum += state.field.w[dm];
  return sum <= (1.0 - 2.0 * eps) * state.law->mean() * g.diag_size(i);
}

bool event_M(const GibbsState& state, DiagonalIndex i, double eps, double M) {
  const GridSpec& g = *state.field.grid;
  if (i < 0 || i >= g.diag_count)
    throw std::out_of_range("event_M: diagonal out of range");
  if (!(state.tables.fwd_full() && state.tables.bwd_full()))
    throw std::logic_error("event_M: tables not fully valid");
  auto slack = slack_field(state.field, state.tables, state.c, i);
  int64_t small = 0;
  for (double r : slack)
    if (r <= M) ++small;
  return small >= eps * g.diag_size(i) / 2.0;
}

}  // namespace lptail
