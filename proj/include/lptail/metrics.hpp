#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lptail/gibbs.hpp"
#include "lptail/lattice.hpp"
#include "lptail/stats.hpp"

namespace lptail {

// One recorded lattice sample: scalars plus the geodesic staircase
// (H[x] = max height visited in column x; the path occupies
// {x} x [H[x-1], H[x]]). Restricted passage values follow the mask list the
// batch was collected with.
struct SampleRecord {
  int replica = 0;
  int64_t sweep = 0;
  double passage = 0;
  double mass = 0;
  std::vector<int> geo_heights;       // d = 2 only, length n+1
  std::vector<double> restricted;     // per configured mask
  int events_b = 0;                   // #{i in I: B_i} at the batch's eps
  int events_m = 0;
};

struct SampleBatch {
  std::string model = "lattice";
  int n = 0;
  int d = 2;
  std::string law_name = "exp";
  double law_mean = 1.0;
  double c = 0;          // resolved threshold; +inf for unconditioned
  bool conditioned = false;
  std::string sampler = "gibbs";
  uint64_t seed = 0;
  std::vector<SampleRecord> records;
  std::vector<int64_t> occupancy;     // per-vertex geodesic visit counts (dm)

  std::vector<double> passages() const;
  std::vector<double> masses() const;
};

// fraction of samples whose geodesic lies inside the eps' cylinder
struct Estimate {
  double value = 0;
  double stderr_value = 0;
  int64_t count = 0;
};

Estimate containment_probability(const SampleBatch& batch,
                                 const MonotoneCurve& curve, double eps_prime);

// per-column median geodesic height over the batch, monotonized into a curve
MonotoneCurve batch_median_curve(const SampleBatch& batch);

// total mass normalized by its unconditional mean law_mean * (n+1)^d
Summary mass_deficit(const SampleBatch& batch);
std::vector<double> mass_ratios(const SampleBatch& batch);

// per-sample n^{d-1} (c - L_n)
std::vector<double> concentration_statistic(const SampleBatch& batch);

struct AnticoncentrationRow {
  double mask_fraction = 0;  // |A| / n^2
  double eps_prime = 0;
  Estimate prob;             // P(L_n(A) >= c - H/n)
};

// batch.records[].restricted[j] must hold L_n(A_j) for the given masks
std::vector<AnticoncentrationRow> anticoncentration_curve(
    const SampleBatch& batch, const std::vector<RegionMask>& masks,
    const std::vector<double>& eps_primes, double H);

// strip-restricted passage values (free endpoints, paper convention)
struct StripProfile {
  int K = 0;
  std::vector<int> indices;
  std::vector<double> values;
  double central_fraction_meeting_bar = 0;  // >= (mu - delta/2) n among central strips
};

StripProfile strip_profile(const WeightField& f, int K, double mu,
                           double delta);

// smallest K with empirical E[L_K] >= (mu - delta/8) K, estimated from
// batches of iid unconditioned fields; capped at n
int choose_strip_K(const LawPtr& law, double delta, double mu, int n_cap,
                   RngKey key, int fields_per_K = 64);

struct ShapeRow {
  double x = 0, y = 0;
  double expected = 0;  // G(x,y)
  Estimate measured;    // E L_{nx,ny} / n
};

// unconditioned lattice shape sweep over aspect ratios
ShapeRow shape_check_lattice(const LawPtr& law, double x, double y, int n,
                             int replicas, RngKey key);
// Poisson LIS shape: expected 2 sqrt(xy)
ShapeRow shape_check_poisson(double x, double y, int n, int replicas,
                             RngKey key);

double shape_limit_exponential(double x, double y);  // (sqrt x + sqrt y)^2
double shape_limit_poisson(double x, double y);      // 2 sqrt(xy)

// rectangular-grid passage value with iid law weights; weights generated on
// the fly (two-row DP)
double lpp_value_rect(int nx, int ny, const WeightLaw& law, RngKey key,
                      uint64_t epoch);

// geodesic occupancy as a grayscale SVG (downsampled to at most 128 cells a
// side); deterministic bytes
std::string occupancy_svg(const SampleBatch& batch);

// collect the staircase representation of a d=2 geodesic
std::vector<int> geodesic_heights(const Geodesic& g, const GridSpec& grid);
bool staircase_in_cylinder(const std::vector<int>& heights,
                           const std::vector<std::pair<int, int>>& bounds);

}  // namespace lptail
