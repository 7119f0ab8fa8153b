#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lptail/rng.hpp"

namespace lptail {

struct Pt {
  double x = 0, y = 0;
};

// Planar point set on [0, side]^2 kept sorted by x; no two points share an x
// or y coordinate (ties are jittered on ingestion).
struct PointConfig {
  double side = 0;
  std::vector<Pt> pts;

  int64_t count() const { return static_cast<int64_t>(pts.size()); }
};

PointConfig make_config(double side, std::vector<Pt> pts);
PointConfig config_from_csv(double side, const std::string& csv);
std::string config_to_csv(const PointConfig& c);

// Poisson(rate * side^2) points placed uniformly.
PointConfig sample_ppp(double side, double rate, SiteRng& rng);
int64_t poisson_count(double lambda, SiteRng& rng);

// Longest strictly-increasing chain of configuration points inside the
// closed rectangle [lo, hi]; the corners themselves are not counted unless
// they are configuration points. Patience sorting, O(N log N).
int lis(const PointConfig& c, Pt lo, Pt hi);
int lis_all(const PointConfig& c);

// O(N^2) DP oracle for tests.
int lis_quadratic(const PointConfig& c, Pt lo, Pt hi);

// ---- box discretization ------------------------------------------------

// Boxes of side eps_d tile [0, side]^2 and map to the vertices of the
// [0, m]^2 grid, m = side/eps_d - 1.
struct BoxGrid {
  double side = 0;
  double eps_d = 1.0;
  int m = 0;
};

BoxGrid make_box_grid(double side, double eps_d);
// Lemma-style discretization check: conditioning a Poisson(eps_d^2) count to
// {<=1} must keep at least (1 - eps/4) of its mean.
bool discretization_fine_enough(double eps_d, double eps);

// Chain counts from the origin into every box corner (forward) and from
// every corner to the far corner (backward); corner (gx, gy) sits at
// (gx * eps_d, gy * eps_d), gx, gy in [0, m+1].
struct CornerChains {
  int m = 0;
  std::vector<int> fwd;  // (m+2)^2, row-major gx*(m+2)+gy
  std::vector<int> bwd;

  int f(int gx, int gy) const { return fwd[gx * (m + 2) + gy]; }
  int b(int gx, int gy) const { return bwd[gx * (m + 2) + gy]; }
};

CornerChains corner_chains(const PointConfig& c, const BoxGrid& grid);

// Integer slack of box (bx, by): c_int minus the best exterior chain split
// around the box. Zero slack certifies a full-length chain through the box
// corners.
int box_slack(const CornerChains& cc, int bx, int by, int c_int);

// f_v(x, y) = c_int - L(0,x) - L(y,n) over the SW/NE box boundaries as step
// functions; R_v = min f_v.
struct BoundaryFn {
  int bx = 0, by = 0;
  int c_int = 0;
  // step values along the SW boundary parameterized from (a, b+eps) around
  // the corner to (a+eps, b); first entry is the value on [0, t_1)
  std::vector<std::pair<double, int>> sw_steps;  // (param t, L(0, x(t)))
  std::vector<std::pair<double, int>> ne_steps;  // (param t, L(y(t), n))
  int r_v = 0;

  int sw_max() const;
  int ne_max() const;
};

BoundaryFn boundary_fn(const PointConfig& c, const BoxGrid& grid, int bx,
                       int by, int c_int);

// Per-diagonal saturation report over the central box-diagonal indices.
struct DiagonalReport {
  int i = 0;
  int boxes = 0;
  int slack_boxes = 0;       // R_v >= 1
  int zero_slack_boxes = 0;  // R_v == 0
  int64_t points = 0;
  bool saturated = false;    // #slack <= (1 - eps) * boxes
};

struct SaturationReport {
  std::vector<DiagonalReport> diagonals;
  std::vector<std::pair<int, int>> zero_boxes;  // (bx, by) with R_v = 0
};

SaturationReport saturation_stats(const PointConfig& c, double threshold,
                                  double eps_d, double eps);

std::string saturation_to_csv(const SaturationReport& rep);

// Resample one box's points from the exact conditional law by rejection:
// fresh Poisson content, accepted iff the merged configuration still
// satisfies LIS <= c_int.
struct BoxResampleResult {
  bool accepted = false;
  uint64_t tries = 0;
};

BoxResampleResult box_resample(PointConfig& c, const BoxGrid& grid, int bx,
                               int by, int c_int, uint64_t budget,
                               SiteRng& rng);

// One systematic pass of box resamples over all box anti-diagonals.
// Returns the number of boxes whose budget was exhausted (their content is
// left unchanged, which keeps the configuration feasible).
int64_t poisson_gibbs_sweep(PointConfig& c, const BoxGrid& grid, int c_int,
                            uint64_t per_box_budget, RngKey key,
                            uint64_t sweep_index);

struct PoissonOracleResult {
  std::optional<PointConfig> config;
  uint64_t tries = 0;
};

PoissonOracleResult poisson_rejection_conditional(double side, double threshold,
                                                  uint64_t budget, RngKey key,
                                                  uint64_t try_offset = 0);

}  // namespace lptail
