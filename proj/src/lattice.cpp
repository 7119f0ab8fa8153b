#include "lptail/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lptail {

int64_t GridSpec::rm_index(const std::vector<int>& coords) const {
  if (static_cast<int>(coords.size()) != d)
    throw std::invalid_argument("coords dimension mismatch");
  int64_t rm = 0;
  for (int j = 0; j < d; ++j) {
    if (coords[j] < 0 || coords[j] > n)
      throw std::out_of_range("vertex outside grid box");
    rm += coords[j] * stride[j];
  }
  return rm;
}

std::vector<int> GridSpec::coords_of_rm(int64_t rm) const {
  std::vector<int> c(d);
  for (int j = 0; j < d; ++j) {
    c[j] = static_cast<int>((rm / stride[j]) % (n + 1));
  }
  return c;
}

int GridSpec::coord_sum_of_dm(int64_t dm) const {
  // diag_offset is monotone; binary search for the diagonal containing dm
  int lo = 0, hi = diag_count - 1;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (diag_offset[mid] <= dm) lo = mid; else hi = mid - 1;
  }
  return lo;
}

GridPtr make_grid(int n, int d) {
  if (n < 0) throw std::invalid_argument("grid n must be >= 0");
  if (d < 2) throw std::invalid_argument("grid dimension must be >= 2");
  auto g = std::make_shared<GridSpec>();
  g->n = n;
  g->d = d;
  int64_t count = 1;
  for (int j = 0; j < d; ++j) {
    count *= (n + 1);
    if (count > (int64_t(1) << 31))
      throw std::invalid_argument("grid too large for 32-bit vertex ranks");
  }
  g->vertex_count = count;
  g->diag_count = d * n + 1;
  g->stride.assign(d, 1);
  for (int j = d - 2; j >= 0; --j) g->stride[j] = g->stride[j + 1] * (n + 1);

  std::vector<int64_t> sizes(g->diag_count, 0);
  std::vector<int> sums(count);
  for (int64_t rm = 0; rm < count; ++rm) {
    int s = 0;
    int64_t r = rm;
    for (int j = 0; j < d; ++j) {
      s += static_cast<int>(r / g->stride[j]);
      r %= g->stride[j];
    }
    sums[rm] = s;
    ++sizes[s];
  }
  g->diag_offset.assign(g->diag_count + 1, 0);
  for (int i = 0; i < g->diag_count; ++i)
    g->diag_offset[i + 1] = g->diag_offset[i] + sizes[i];

  g->dm_of_rm.assign(count, 0);
  g->rm_of_dm.assign(count, 0);
  std::vector<int64_t> fill(g->diag_count);
  std::copy(g->diag_offset.begin(), g->diag_offset.end() - 1, fill.begin());
  // rm order is lexicographic, so within each diagonal dm order is too
  for (int64_t rm = 0; rm < count; ++rm) {
    int64_t dm = fill[sums[rm]]++;
    g->dm_of_rm[rm] = static_cast<int32_t>(dm);
    g->rm_of_dm[dm] = static_cast<int32_t>(rm);
  }
  return g;
}

std::vector<std::vector<int>> anti_diagonal(const GridSpec& grid,
                                            DiagonalIndex i) {
  if (i < 0 || i >= grid.diag_count)
    throw std::out_of_range("anti-diagonal index out of range");
  std::vector<std::vector<int>> out;
  out.reserve(grid.diag_size(i));
  for (int64_t dm = grid.diag_offset[i]; dm < grid.diag_offset[i + 1]; ++dm)
    out.push_back(grid.coords_of_rm(grid.rm_of_dm[dm]));
  return out;
}

double WeightField::total_mass() const {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

WeightField make_field(GridPtr grid, double fill) {
  WeightField f;
  f.grid = std::move(grid);
  f.w.assign(f.grid->vertex_count, fill);
  return f;
}

RegionMask make_mask(GridPtr grid) {
  RegionMask m;
  m.grid = std::move(grid);
  m.bits.assign(m.grid->vertex_count, 0);
  m.count = 0;
  return m;
}

RegionMask full_mask(GridPtr grid) {
  RegionMask m;
  m.grid = std::move(grid);
  m.bits.assign(m.grid->vertex_count, 1);
  m.count = m.grid->vertex_count;
  return m;
}

void mask_set(RegionMask& m, int64_t dm, bool on) {
  uint8_t v = on ? 1 : 0;
  if (m.bits[dm] != v) {
    m.count += on ? 1 : -1;
    m.bits[dm] = v;
  }
}

RegionMask mask_union(const RegionMask& a, const RegionMask& b) {
  RegionMask m = a;
  for (int64_t i = 0; i < static_cast<int64_t>(m.bits.size()); ++i)
    if (b.bits[i] && !m.bits[i]) { m.bits[i] = 1; ++m.count; }
  return m;
}

bool mask_subset(const RegionMask& a, const RegionMask& b) {
  for (int64_t i = 0; i < static_cast<int64_t>(a.bits.size()); ++i)
    if (a.bits[i] && !b.bits[i]) return false;
  return true;
}

MonotoneCurve::MonotoneCurve(std::vector<std::pair<double, double>> knots)
    : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw std::invalid_argument("curve needs >= 2 knots");
  if (knots_.front().first != 0.0 || knots_.front().second != 0.0 ||
      knots_.back().first != 1.0 || knots_.back().second != 1.0)
    throw std::invalid_argument("curve must run from (0,0) to (1,1)");
  for (size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k].first > knots_[k - 1].first) ||
        !(knots_[k].second > knots_[k - 1].second))
      throw std::invalid_argument("curve knots must strictly increase");
  }
}

MonotoneCurve MonotoneCurve::identity() {
  return MonotoneCurve({{0.0, 0.0}, {1.0, 1.0}});
}

MonotoneCurve MonotoneCurve::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curve file: " + path);
  std::vector<std::pair<double, double>> knots;
  double t, y;
  while (in >> t >> y) knots.emplace_back(t, y);
  return MonotoneCurve(std::move(knots));
}

MonotoneCurve MonotoneCurve::from_samples(
    const std::vector<std::pair<double, double>>& samples) {
  std::vector<std::pair<double, double>> k = samples;
  std::sort(k.begin(), k.end());
  std::vector<std::pair<double, double>> out;
  out.emplace_back(0.0, 0.0);
  const double step = 1e-9;
  for (auto& [t, y] : k) {
    double tt = std::max(std::min(t, 1.0 - step), out.back().first + step);
    double yy = std::max(std::min(y, 1.0 - step), out.back().second + step);
    if (tt >= 1.0 || yy >= 1.0) continue;
    out.emplace_back(tt, yy);
  }
  out.emplace_back(1.0, 1.0);
  return MonotoneCurve(std::move(out));
}

double MonotoneCurve::eval(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  auto it = std::upper_bound(
      knots_.begin(), knots_.end(), std::make_pair(t, 2.0));
  auto hi = it;
  auto lo = it - 1;
  double frac = (t - lo->first) / (hi->first - lo->first);
  return lo->second + frac * (hi->second - lo->second);
}

RegionMask strip(GridPtr grid, int i, int K) {
  if (grid->d != 2) throw std::invalid_argument("strip requires d = 2");
  if (K <= 0) throw std::invalid_argument("strip width K must be positive");
  RegionMask m = make_mask(grid);
  const int n = grid->n;
  const int64_t off = 4LL * i * K;
  for (int x = 0; x <= n; ++x) {
    // |x - y - 4iK| <= K  =>  y in [x - 4iK - K, x - 4iK + K]
    int ylo = static_cast<int>(std::max<int64_t>(0, x - off - K));
    int yhi = static_cast<int>(std::min<int64_t>(n, x - off + K));
    for (int y = ylo; y <= yhi; ++y) {
      mask_set(m, grid->dm_of_rm[static_cast<int64_t>(x) * (n + 1) + y], true);
    }
  }
  return m;
}

std::vector<std::pair<int, int>> cylinder_bounds(const MonotoneCurve& curve,
                                                 double eps, int n) {
  if (!(eps > 0.0)) throw std::invalid_argument("cylinder eps must be > 0");
  std::vector<std::pair<int, int>> bounds(n + 1);
  for (int x = 0; x <= n; ++x) {
    double center = n * curve.eval(n == 0 ? 0.0 : static_cast<double>(x) / n);
    double lo = center - eps * n;
    double hi = center + eps * n;
    int ylo = static_cast<int>(std::ceil(lo - kTieTol));
    int yhi = static_cast<int>(std::floor(hi + kTieTol));
    bounds[x] = {std::max(0, ylo), std::min(n, yhi)};
  }
  return bounds;
}

RegionMask cylinder(const MonotoneCurve& curve, double eps, GridPtr grid) {
  if (grid->d != 2) throw std::invalid_argument("cylinder requires d = 2");
  RegionMask m = make_mask(grid);
  const int n = grid->n;
  auto bounds = cylinder_bounds(curve, eps, n);
  for (int x = 0; x <= n; ++x) {
    for (int y = bounds[x].first; y <= bounds[x].second; ++y)
      mask_set(m, grid->dm_of_rm[static_cast<int64_t>(x) * (n + 1) + y], true);
  }
  return m;
}

std::vector<DiagonalIndex> central_indices(const GridSpec& grid, double eps) {
  if (grid.d != 2)
    throw std::invalid_argument("central_indices requires d = 2");
  if (!(eps > 0.0 && eps < 1.0 / 16.0))
    throw std::invalid_argument("central_indices needs eps in (0, 1/16)");
  const int n = grid.n;
  const double bound = (1.0 - std::sqrt(eps) / 4.0) * n;
  std::vector<DiagonalIndex> out;
  for (int i = 0; i <= 2 * n; ++i) {
    if (std::abs(i - n) <= bound + kTieTol) out.push_back(i);
  }
  return out;
}

std::string mask_to_rle(const RegionMask& m) {
  std::ostringstream os;
  const GridSpec& g = *m.grid;
  if (g.d == 2) {
    const int n = g.n;
    os << "rle2 " << n << "\n";
    for (int y = 0; y <= n; ++y) {
      os << y << ":";
      bool first = true;
      int x = 0;
      while (x <= n) {
        int64_t rm = static_cast<int64_t>(x) * (n + 1) + y;
        if (m.bits[g.dm_of_rm[rm]]) {
          int x0 = x;
          while (x <= n &&
                 m.bits[g.dm_of_rm[static_cast<int64_t>(x) * (n + 1) + y]])
            ++x;
          if (!first) os << ",";
          os << x0 << "-" << (x - 1);
          first = false;
        } else {
          ++x;
        }
      }
      os << "\n";
    }
  } else {
    os << "raw " << g.n << " " << g.d << "\n";
    for (int64_t dm = 0; dm < g.vertex_count; ++dm)
      if (m.bits[dm]) os << dm << "\n";
  }
  return os.str();
}

RegionMask mask_from_rle(GridPtr grid, const std::string& rle) {
  std::istringstream is(rle);
  std::string tag;
  is >> tag;
  RegionMask m = make_mask(grid);
  if (tag == "rle2") {
    int n;
    is >> n;
    if (n != grid->n || grid->d != 2)
      throw std::invalid_argument("mask RLE does not match grid");
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto colon = line.find(':');
      int y = std::stoi(line.substr(0, colon));
      std::string runs = line.substr(colon + 1);
      std::istringstream rs(runs);
      std::string run;
      while (std::getline(rs, run, ',')) {
        auto dash = run.find('-');
        int x0 = std::stoi(run.substr(0, dash));
        int x1 = std::stoi(run.substr(dash + 1));
        for (int x = x0; x <= x1; ++x)
          mask_set(m, grid->dm_of_rm[static_cast<int64_t>(x) * (n + 1) + y],
                   true);
      }
    }
  } else if (tag == "raw") {
    int n, d;
    is >> n >> d;
    if (n != grid->n || d != grid->d)
      throw std::invalid_argument("mask RLE does not match grid");
    int64_t dm;
    while (is >> dm) mask_set(m, dm, true);
  } else {
    throw std::invalid_argument("unknown mask serialization tag");
  }
  return m;
}

}  // namespace lptail
