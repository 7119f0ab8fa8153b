#include "lptail/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lptail/poisson.hpp"

namespace lptail {

std::vector<double> SampleBatch::passages() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (auto& r : records) v.push_back(r.passage);
  return v;
}

std::vector<double> SampleBatch::masses() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (auto& r : records) v.push_back(r.mass);
  return v;
}

std::vector<int> geodesic_heights(const Geodesic& g, const GridSpec& grid) {
  if (grid.d != 2)
    throw std::invalid_argument("geodesic_heights requires d = 2");
  std::vector<int> h(grid.n + 1, 0);
  for (int64_t dmr : g.dm) {
    auto c = grid.coords_of_dm(dmr);
    h[c[0]] = std::max(h[c[0]], c[1]);
  }
  return h;
}

bool staircase_in_cylinder(const std::vector<int>& heights,
                           const std::vector<std::pair<int, int>>& bounds) {
  int prev = 0;
  for (size_t x = 0; x < heights.size(); ++x) {
    // the path occupies {x} x [prev, heights[x]]
    if (prev < bounds[x].first || heights[x] > bounds[x].second) return false;
    prev = heights[x];
  }
  return true;
}

Estimate containment_probability(const SampleBatch& batch,
                                 const MonotoneCurve& curve,
                                 double eps_prime) {
  if (batch.records.empty())
    throw std::invalid_argument("containment: empty batch");
  auto bounds = cylinder_bounds(curve, eps_prime, batch.n);
  int64_t hits = 0;
  for (const auto& r : batch.records)
    if (staircase_in_cylinder(r.geo_heights, bounds)) ++hits;
  Estimate e;
  e.count = batch.records.size();
  e.value = double(hits) / e.count;
  e.stderr_value = std::sqrt(e.value * (1 - e.value) / e.count);
  return e;
}

MonotoneCurve batch_median_curve(const SampleBatch& batch) {
  if (batch.records.empty())
    throw std::invalid_argument("median curve: empty batch");
  const int n = batch.n;
  std::vector<std::pair<double, double>> samples;
  for (int x = 0; x <= n; ++x) {
    std::vector<double> hs;
    hs.reserve(batch.records.size());
    for (const auto& r : batch.records) hs.push_back(r.geo_heights[x]);
    samples.emplace_back(double(x) / n, median_of(std::move(hs)) / n);
  }
  return MonotoneCurve::from_samples(samples);
}

std::vector<double> mass_ratios(const SampleBatch& batch) {
  double denom = batch.law_mean;
  for (int j = 0; j < batch.d; ++j) denom *= (batch.n + 1);
  std::vector<double> out;
  out.reserve(batch.records.size());
  for (const auto& r : batch.records) out.push_back(r.mass / denom);
  return out;
}

Summary mass_deficit(const SampleBatch& batch) {
  return summarize(mass_ratios(batch));
}

std::vector<double> concentration_statistic(const SampleBatch& batch) {
  if (!batch.conditioned)
    throw std::invalid_argument("concentration statistic needs a conditioned batch");
  double scale = std::pow(double(batch.n), batch.d - 1);
  std::vector<double> out;
  out.reserve(batch.records.size());
  for (const auto& r : batch.records)
    out.push_back(scale * (batch.c - r.passage));
  return out;
}

std::vector<AnticoncentrationRow> anticoncentration_curve(
    const SampleBatch& batch, const std::vector<RegionMask>& masks,
    const std::vector<double>& eps_primes, double H) {
  if (masks.size() != eps_primes.size())
    throw std::invalid_argument("anticoncentration: masks/eps size mismatch");
  std::vector<AnticoncentrationRow> rows;
  const double bar = batch.c - H / batch.n;
  for (size_t j = 0; j < masks.size(); ++j) {
    AnticoncentrationRow row;
    row.eps_prime = eps_primes[j];
    row.mask_fraction =
        double(masks[j].cardinality()) / (double(batch.n) * batch.n);
    int64_t hits = 0;
    for (const auto& r : batch.records) {
      if (j >= r.restricted.size())
        throw std::invalid_argument("anticoncentration: restricted values missing");
      if (r.restricted[j] >= bar) ++hits;
    }
    row.prob.count = batch.records.size();
    row.prob.value = double(hits) / row.prob.count;
    row.prob.stderr_value =
        std::sqrt(row.prob.value * (1 - row.prob.value) / row.prob.count);
    rows.push_back(row);
  }
  return rows;
}

StripProfile strip_profile(const WeightField& f, int K, double mu,
                           double delta) {
  const GridSpec& g = *f.grid;
  if (g.d != 2) throw std::invalid_argument("strip_profile requires d = 2");
  StripProfile prof;
  prof.K = K;
  const int n = g.n;
  const double bar = (mu - delta / 2) * n;
  int central = 0, meeting = 0;
  // strips intersect the box iff |4iK| <= n + K
  int imax = (n + K) / (4 * K);
  for (int i = -imax; i <= imax; ++i) {
    RegionMask m = strip(f.grid, i, K);
    if (m.cardinality() == 0) continue;
    double v = best_path_within(f, m);
    prof.indices.push_back(i);
    prof.values.push_back(v);
    // central strips keep a full-length diagonal segment well inside the box
    if (std::abs(4 * i * K) + K <= n / 4) {
      ++central;
      if (v >= bar) ++meeting;
    }
  }
  prof.central_fraction_meeting_bar =
      central > 0 ? double(meeting) / central : 0.0;
  return prof;
}

int choose_strip_K(const LawPtr& law, double delta, double mu, int n_cap,
                   RngKey key, int fields_per_K) {
  uint64_t epoch = 0;
  for (int K = 2; K < n_cap; K *= 2) {
    GridPtr gk = make_grid(K, 2);
    double sum = 0;
    for (int r = 0; r < fields_per_K; ++r) {
      WeightField f = sample_iid_field(gk, *law, key, Stream::metrics, epoch++);
      sum += passage_value(f);
    }
    double mean_lk = sum / fields_per_K;
    if (mean_lk >= (mu - delta / 8) * K) return K;
  }
  return n_cap;
}

double shape_limit_exponential(double x, double y) {
  return (std::sqrt(x) + std::sqrt(y)) * (std::sqrt(x) + std::sqrt(y));
}

double shape_limit_poisson(double x, double y) { return 2.0 * std::sqrt(x * y); }

double lpp_value_rect(int nx, int ny, const WeightLaw& law, RngKey key,
                      uint64_t epoch) {
  // two-row DP over the rectangle [0,nx] x [0,ny]
  std::vector<double> prev(ny + 1), cur(ny + 1);
  for (int x = 0; x <= nx; ++x) {
    for (int y = 0; y <= ny; ++y) {
      uint64_t site = static_cast<uint64_t>(x) * (ny + 1) + y;
      double w = law.sample(uniform_at(key, Stream::shape, epoch, site, 0));
      double best = 0.0;
      if (x > 0 && y > 0) best = std::max(prev[y], cur[y - 1]);
      else if (x > 0) best = prev[y];
      else if (y > 0) best = cur[y - 1];
      cur[y] = w + best;
    }
    std::swap(prev, cur);
  }
  return prev[ny];
}

ShapeRow shape_check_lattice(const LawPtr& law, double x, double y, int n,
                             int replicas, RngKey key) {
  ShapeRow row;
  row.x = x;
  row.y = y;
  row.expected = shape_limit_exponential(x, y);  // caller interprets for law
  int nx = static_cast<int>(std::floor(n * x));
  int ny = static_cast<int>(std::floor(n * y));
  std::vector<double> vals;
  vals.reserve(replicas);
  for (int r = 0; r < replicas; ++r)
    vals.push_back(lpp_value_rect(nx, ny, *law, key, r) / n);
  auto s = summarize(vals);
  row.measured.value = s.mean;
  row.measured.stderr_value = s.stderr_mean;
  row.measured.count = replicas;
  return row;
}

ShapeRow shape_check_poisson(double x, double y, int n, int replicas,
                             RngKey key) {
  ShapeRow row;
  row.x = x;
  row.y = y;
  row.expected = shape_limit_poisson(x, y);
  std::vector<double> vals;
  vals.reserve(replicas);
  for (int r = 0; r < replicas; ++r) {
    SiteRng rng(key, Stream::shape, r, 1);
    // LIS in [0, nx] x [0, ny] with rate 1: Poisson(nx*ny) uniform points
    double nx = n * x, ny = n * y;
    int64_t cnt = poisson_count(nx * ny, rng);
    std::vector<double> ys_sorted;
    std::vector<std::pair<double, double>> pts(cnt);
    for (auto& p : pts) p = {rng.next(), rng.next()};
    std::sort(pts.begin(), pts.end());
    std::vector<double> tails;
    for (auto& p : pts) {
      auto it = std::lower_bound(tails.begin(), tails.end(), p.second);
      if (it == tails.end()) tails.push_back(p.second); else *it = p.second;
    }
    vals.push_back(double(tails.size()) / n);
  }
  auto s = summarize(vals);
  row.measured.value = s.mean;
  row.measured.stderr_value = s.stderr_mean;
  row.measured.count = replicas;
  return row;
}

std::string occupancy_svg(const SampleBatch& batch) {
  const int n = batch.n;
  const int cells = std::min(n + 1, 128);
  const int block = (n + cells) / cells;  // ceil((n+1)/cells)
  const int grid_cells = (n + block) / block;
  std::vector<int64_t> agg(grid_cells * grid_cells, 0);
  GridPtr g = make_grid(n, 2);
  int64_t maxv = 1;
  for (int64_t dm = 0; dm < g->vertex_count; ++dm) {
    if (dm >= static_cast<int64_t>(batch.occupancy.size())) break;
    auto c = g->coords_of_dm(dm);
    int cx = c[0] / block, cy = c[1] / block;
    agg[cx * grid_cells + cy] += batch.occupancy[dm];
  }
  for (int64_t v : agg) maxv = std::max(maxv, v);
  const int px = 4;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
     << grid_cells * px << "\" height=\"" << grid_cells * px << "\">\n";
  for (int cx = 0; cx < grid_cells; ++cx) {
    for (int cy = 0; cy < grid_cells; ++cy) {
      int64_t v = agg[cx * grid_cells + cy];
      if (v == 0) continue;
      int shade = 255 - static_cast<int>(255.0 * v / maxv);
      // y axis points up: flip rows
      os << "<rect x=\"" << cx * px << "\" y=\"" << (grid_cells - 1 - cy) * px
         << "\" width=\"" << px << "\" height=\"" << px << "\" fill=\"rgb("
         << shade << "," << shade << "," << shade << ")\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lptail
