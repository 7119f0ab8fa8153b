#include "lptail/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lptail {

namespace {

void sort_by_x(std::vector<Pt>& pts) {
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y > b.y;  // ties x: descending y keeps strict-LIS correct
  });
}

// jitter exact coordinate ties so chain comparisons are strict
void enforce_general_position(std::vector<Pt>& pts, double side) {
  std::set<double> xs, ys;
  for (auto& p : pts) {
    while (xs.count(p.x)) p.x = std::min(side, p.x + 1e-12 * (1 + side));
    while (ys.count(p.y)) p.y = std::min(side, p.y + 1e-12 * (1 + side));
    xs.insert(p.x);
    ys.insert(p.y);
  }
}

// patience tails: length of the longest strictly increasing y-subsequence
int patience_length(const std::vector<double>& ys) {
  std::vector<double> tails;
  for (double y : ys) {
    auto it = std::lower_bound(tails.begin(), tails.end(), y);
    if (it == tails.end()) tails.push_back(y); else *it = y;
  }
  return static_cast<int>(tails.size());
}

}  // namespace

PointConfig make_config(double side, std::vector<Pt> pts) {
  if (!(side > 0)) throw std::invalid_argument("config side must be > 0");
  for (auto& p : pts)
    if (p.x < 0 || p.x > side || p.y < 0 || p.y > side)
      throw std::invalid_argument("point outside [0, side]^2");
  enforce_general_position(pts, side);
  sort_by_x(pts);
  PointConfig c;
  c.side = side;
  c.pts = std::move(pts);
  return c;
}

PointConfig config_from_csv(double side, const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  std::vector<Pt> pts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    pts.push_back({std::stod(line.substr(0, comma)),
                   std::stod(line.substr(comma + 1))});
  }
  return make_config(side, std::move(pts));
}

std::string config_to_csv(const PointConfig& c) {
  std::ostringstream os;
  char buf[64];
  for (const auto& p : c.pts) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x, p.y);
    os << buf;
  }
  return os.str();
}

int64_t poisson_count(double lambda, SiteRng& rng) {
  if (lambda < 0) throw std::invalid_argument("poisson mean must be >= 0");
  // chunked inversion keeps the product method in a safe floating range
  int64_t total = 0;
  while (lambda > 0) {
    double chunk = std::min(lambda, 16.0);
    lambda -= chunk;
    const double limit = std::exp(-chunk);
    double prod = rng.next();
    int64_t k = 0;
    while (prod > limit) {
      ++k;
      prod *= rng.next();
    }
    total += k;
  }
  return total;
}

PointConfig sample_ppp(double side, double rate, SiteRng& rng) {
  if (!(side > 0 && rate > 0))
    throw std::invalid_argument("sample_ppp: side and rate must be > 0");
  int64_t n = poisson_count(rate * side * side, rng);
  std::vector<Pt> pts(n);
  for (auto& p : pts) {
    p.x = side * rng.next();
    p.y = side * rng.next();
  }
  return make_config(side, std::move(pts));
}

int lis(const PointConfig& c, Pt lo, Pt hi) {
  if (lo.x > hi.x || lo.y > hi.y)
    throw std::domain_error("lis: corners not ordered");
  std::vector<double> ys;
  ys.reserve(c.pts.size());
  for (const auto& p : c.pts) {  // already sorted by x
    if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y)
      ys.push_back(p.y);
  }
  return patience_length(ys);
}

int lis_all(const PointConfig& c) {
  std::vector<double> ys;
  ys.reserve(c.pts.size());
  for (const auto& p : c.pts) ys.push_back(p.y);
  return patience_length(ys);
}

int lis_quadratic(const PointConfig& c, Pt lo, Pt hi) {
  if (lo.x > hi.x || lo.y > hi.y)
    throw std::domain_error("lis: corners not ordered");
  std::vector<Pt> sel;
  for (const auto& p : c.pts)
    if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y)
      sel.push_back(p);
  int best = 0;
  std::vector<int> dp(sel.size(), 1);
  for (size_t i = 0; i < sel.size(); ++i) {
    for (size_t j = 0; j < i; ++j)
      if (sel[j].x < sel[i].x && sel[j].y < sel[i].y)
        dp[i] = std::max(dp[i], dp[j] + 1);
    best = std::max(best, dp[i]);
  }
  return best;
}

BoxGrid make_box_grid(double side, double eps_d) {
  if (!(eps_d > 0)) throw std::invalid_argument("eps_d must be > 0");
  double ratio = side / eps_d;
  double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 || rounded < 1)
    throw std::invalid_argument("side / eps_d must be a positive integer");
  BoxGrid g;
  g.side = side;
  g.eps_d = eps_d;
  g.m = static_cast<int>(rounded) - 1;
  return g;
}

bool discretization_fine_enough(double eps_d, double eps) {
  // E(X | X <= 1) = eps_d^2 / (1 + eps_d^2) must be >= (1 - eps/4) eps_d^2
  return 1.0 / (1.0 + eps_d * eps_d) >= 1.0 - eps / 4.0;
}

CornerChains corner_chains(const PointConfig& c, const BoxGrid& grid) {
  CornerChains cc;
  cc.m = grid.m;
  const int side_corners = grid.m + 2;
  cc.fwd.assign(side_corners * side_corners, 0);
  cc.bwd.assign(side_corners * side_corners, 0);

  // forward: for each corner level gy, prefix patience over points with
  // y < gy*eps sorted by x, recording the value at every corner abscissa
  std::vector<Pt> by_y = c.pts;
  std::sort(by_y.begin(), by_y.end(),
            [](const Pt& a, const Pt& b) { return a.y < b.y; });
  for (int gy = 0; gy < side_corners; ++gy) {
    const double ycut = gy * grid.eps_d;
    // incremental patience with value snapshots at each corner abscissa
    std::vector<double> tails;
    size_t idx = 0;
    std::vector<const Pt*> sel;
    sel.reserve(c.pts.size());
    for (const auto& p : c.pts)  // x-sorted
      if (p.y < ycut) sel.push_back(&p);
    for (int gx = 0; gx < side_corners; ++gx) {
      const double xcut = gx * grid.eps_d;
      while (idx < sel.size() && sel[idx]->x < xcut) {
        auto it = std::lower_bound(tails.begin(), tails.end(), sel[idx]->y);
        if (it == tails.end()) tails.push_back(sel[idx]->y); else *it = sel[idx]->y;
        ++idx;
      }
      cc.fwd[gx * side_corners + gy] = static_cast<int>(tails.size());
    }
  }

  // backward: reflect through the far corner and reuse the forward logic
  PointConfig refl;
  refl.side = c.side;
  refl.pts.reserve(c.pts.size());
  for (const auto& p : c.pts) refl.pts.push_back({c.side - p.x, c.side - p.y});
  sort_by_x(refl.pts);
  for (int gy = 0; gy < side_corners; ++gy) {
    const double ycut = gy * grid.eps_d;
    std::vector<double> tails;
    std::vector<const Pt*> sel;
    sel.reserve(refl.pts.size());
    for (const auto& p : refl.pts)
      if (p.y < ycut) sel.push_back(&p);
    size_t idx = 0;
    for (int gx = 0; gx < side_corners; ++gx) {
      const double xcut = gx * grid.eps_d;
      while (idx < sel.size() && sel[idx]->x < xcut) {
        auto it = std::lower_bound(tails.begin(), tails.end(), sel[idx]->y);
        if (it == tails.end()) tails.push_back(sel[idx]->y);
        else *it = sel[idx]->y;
        ++idx;
      }
      // reflected corner (gx, gy) is original corner (m+1-gx, m+1-gy)
      int ox = side_corners - 1 - gx;
      int oy = side_corners - 1 - gy;
      cc.bwd[ox * side_corners + oy] = static_cast<int>(tails.size());
    }
  }
  return cc;
}

int box_slack(const CornerChains& cc, int bx, int by, int c_int) {
  // best entry chain: max over the two outer SW corners; best exit chain:
  // max over the two inner NE corners (same lattice corners by symmetry)
  int f_in = std::max(cc.f(bx, by + 1), cc.f(bx + 1, by));
  int b_out = std::max(cc.b(bx + 1, by), cc.b(bx, by + 1));
  return c_int - f_in - b_out;
}

int BoundaryFn::sw_max() const {
  int best = 0;
  for (auto& [t, v] : sw_steps) best = std::max(best, v);
  return best;
}

int BoundaryFn::ne_max() const {
  int best = 0;
  for (auto& [t, v] : ne_steps) best = std::max(best, v);
  return best;
}

BoundaryFn boundary_fn(const PointConfig& c, const BoxGrid& grid, int bx,
                       int by, int c_int) {
  if (bx < 0 || bx > grid.m || by < 0 || by > grid.m)
    throw std::out_of_range("boundary_fn: box outside grid");
  BoundaryFn bf;
  bf.bx = bx;
  bf.by = by;
  bf.c_int = c_int;
  const double e = grid.eps_d;
  const double a = bx * e, b = by * e;

  // exterior of this box; chains to its boundary cannot use interior points
  std::vector<Pt> ext;
  ext.reserve(c.pts.size());
  for (const auto& p : c.pts)
    if (!(p.x > a && p.x < a + e && p.y > b && p.y < b + e)) ext.push_back(p);

  // SW boundary parameterized t in [0, 2e]: (a, b+e-t) then (a + (t-e), b).
  // L(0, x(t)) changes only when the shrinking rectangle crosses a point.
  auto chain_to = [&](double px, double py) {
    std::vector<double> ys;
    for (const auto& p : ext)
      if (p.x < px && p.y < py) ys.push_back(p.y);  // ext is x-sorted
    return patience_length(ys);
  };
  bf.sw_steps.emplace_back(0.0, chain_to(a, b + e));
  for (const auto& p : ext) {  // left-edge breakpoints: y in (b, b+e), x < a
    if (p.x < a && p.y > b && p.y < b + e)
      bf.sw_steps.emplace_back(b + e - p.y, chain_to(a, p.y));
  }
  bf.sw_steps.emplace_back(e, chain_to(a, b));
  for (const auto& p : ext) {  // bottom-edge breakpoints: x in (a, a+e), y < b
    if (p.y < b && p.x > a && p.x < a + e)
      bf.sw_steps.emplace_back(e + (p.x - a),
                               chain_to(std::nextafter(p.x, 1e300), b));
  }
  bf.sw_steps.emplace_back(2 * e, chain_to(a + e, b));
  std::sort(bf.sw_steps.begin(), bf.sw_steps.end());

  // NE boundary: (a+e, b+t) up the right edge then (a+e-(t-e), b+e) along the
  // top, tracking L(y(t), n) via reflection
  auto chain_from = [&](double px, double py) {
    std::vector<Pt> tail;
    for (const auto& p : ext)
      if (p.x > px && p.y > py) tail.push_back(p);
    std::vector<double> ys;
    for (const auto& p : tail) ys.push_back(p.y);  // still x-sorted
    return patience_length(ys);
  };
  bf.ne_steps.emplace_back(0.0, chain_from(a + e, b));
  for (const auto& p : ext) {
    if (p.x > a + e && p.y > b && p.y < b + e)
      bf.ne_steps.emplace_back(p.y - b, chain_from(a + e, p.y));
  }
  bf.ne_steps.emplace_back(e, chain_from(a + e, b + e));
  for (const auto& p : ext) {
    if (p.y > b + e && p.x > a && p.x < a + e)
      bf.ne_steps.emplace_back(e + (a + e - p.x),
                               chain_from(std::nextafter(p.x, -1e300), b + e));
  }
  bf.ne_steps.emplace_back(2 * e, chain_from(a, b + e));
  std::sort(bf.ne_steps.begin(), bf.ne_steps.end());

  bf.r_v = c_int - bf.sw_max() - bf.ne_max();
  if (bf.r_v < 0)
    throw std::domain_error("boundary_fn: exterior incompatible, f_v < 0");
  return bf;
}

SaturationReport saturation_stats(const PointConfig& c, double threshold,
                                  double eps_d, double eps) {
  const int c_int = static_cast<int>(std::floor(threshold));
  BoxGrid grid = make_box_grid(c.side, eps_d);
  if (lis_all(c) > c_int)
    throw std::domain_error("saturation_stats: configuration infeasible");
  CornerChains cc = corner_chains(c, grid);
  const int m = grid.m;
  // central box-diagonal indices: |i - m| <= (1 - sqrt(eps)/4) m
  const double bound = (1.0 - std::sqrt(eps) / 4.0) * m;

  // per-box point counts
  std::vector<int64_t> box_pts((m + 1) * (m + 1), 0);
  for (const auto& p : c.pts) {
    int bx = std::min(static_cast<int>(p.x / eps_d), m);
    int by = std::min(static_cast<int>(p.y / eps_d), m);
    ++box_pts[bx * (m + 1) + by];
  }

  SaturationReport rep;
  for (int i = 0; i <= 2 * m; ++i) {
    if (std::abs(i - m) > bound + 1e-9) continue;
    DiagonalReport dr;
    dr.i = i;
    for (int bx = std::max(0, i - m); bx <= std::min(m, i); ++bx) {
      int by = i - bx;
      ++dr.boxes;
      dr.points += box_pts[bx * (m + 1) + by];
      int r = box_slack(cc, bx, by, c_int);
      if (r >= 1) {
        ++dr.slack_boxes;
      } else if (r == 0) {
        ++dr.zero_slack_boxes;
        rep.zero_boxes.emplace_back(bx, by);
      } else {
        throw std::logic_error("saturation_stats: negative box slack");
      }
    }
    dr.saturated = dr.slack_boxes <= (1.0 - eps) * dr.boxes;
    rep.diagonals.push_back(dr);
  }
  return rep;
}

std::string saturation_to_csv(const SaturationReport& rep) {
  std::ostringstream os;
  os << "i,boxes,slack_boxes,zero_slack_boxes,points,saturated\n";
  for (const auto& d : rep.diagonals)
    os << d.i << "," << d.boxes << "," << d.slack_boxes << ","
       << d.zero_slack_boxes << "," << d.points << "," << (d.saturated ? 1 : 0)
       << "\n";
  return os.str();
}

BoxResampleResult box_resample(PointConfig& c, const BoxGrid& grid, int bx,
                               int by, int c_int, uint64_t budget,
                               SiteRng& rng) {
  if (budget < 1) throw std::invalid_argument("box_resample: budget >= 1");
  const double e = grid.eps_d;
  const double a = bx * e, b = by * e;
  std::vector<Pt> ext;
  ext.reserve(c.pts.size());
  for (const auto& p : c.pts)
    if (!(p.x > a && p.x < a + e && p.y > b && p.y < b + e)) ext.push_back(p);

  BoxResampleResult res;
  for (uint64_t t = 0; t < budget; ++t) {
    res.tries = t + 1;
    int64_t k = poisson_count(e * e, rng);
    std::vector<Pt> trial;
    trial.reserve(k);
    for (int64_t j = 0; j < k; ++j)
      trial.push_back({a + e * rng.next(), b + e * rng.next()});
    // merged feasibility: chains avoiding the box are unchanged and were
    // feasible, so a full patience pass decides acceptance
    std::vector<Pt> merged = ext;
    merged.insert(merged.end(), trial.begin(), trial.end());
    sort_by_x(merged);
    std::vector<double> ys;
    ys.reserve(merged.size());
    for (const auto& p : merged) ys.push_back(p.y);
    if (patience_length(ys) <= c_int) {
      c.pts = std::move(merged);
      res.accepted = true;
      return res;
    }
  }
  return res;
}

int64_t poisson_gibbs_sweep(PointConfig& c, const BoxGrid& grid, int c_int,
                            uint64_t per_box_budget, RngKey key,
                            uint64_t sweep_index) {
  int64_t exhausted = 0;
  for (int i = 0; i <= 2 * grid.m; ++i) {
    for (int bx = std::max(0, i - grid.m); bx <= std::min(grid.m, i); ++bx) {
      int by = i - bx;
      SiteRng rng(key, Stream::box_gibbs, sweep_index,
                  static_cast<uint64_t>(bx) * (grid.m + 1) + by);
      auto r = box_resample(c, grid, bx, by, c_int, per_box_budget, rng);
      if (!r.accepted) ++exhausted;
    }
  }
  return exhausted;
}

PoissonOracleResult poisson_rejection_conditional(double side,
                                                  double threshold,
                                                  uint64_t budget, RngKey key,
                                                  uint64_t try_offset) {
  const int c_int = static_cast<int>(std::floor(threshold));
  PoissonOracleResult res;
  for (uint64_t t = 0; t < budget; ++t) {
    uint64_t epoch = try_offset + t;
    SiteRng rng(key, Stream::ppp, epoch, 0);
    PointConfig cfg = sample_ppp(side, 1.0, rng);
    res.tries = t + 1;
    if (lis_all(cfg) <= c_int) {
      res.config = std::move(cfg);
      return res;
    }
  }
  return res;
}

}  // namespace lptail
