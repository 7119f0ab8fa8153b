#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace lptail {

using DiagonalIndex = int;

// Vertex box [0,n]^d. Vertices are stored in diagonal-major order: sorted by
// coordinate sum, lexicographic within an anti-diagonal. All derived index
// maps are immutable after construction and safe to share across threads.
struct GridSpec {
  int n = 0;
  int d = 2;

  int64_t vertex_count = 0;     // (n+1)^d
  int diag_count = 0;           // d*n + 1
  std::vector<int64_t> diag_offset;  // size diag_count+1
  std::vector<int64_t> stride;       // row-major strides, stride[d-1] = 1
  std::vector<int32_t> dm_of_rm;     // row-major index -> diagonal-major rank
  std::vector<int32_t> rm_of_dm;     // inverse map

  int64_t diag_size(int i) const { return diag_offset[i + 1] - diag_offset[i]; }
  int64_t origin_dm() const { return 0; }
  int64_t corner_dm() const { return vertex_count - 1; }

  int64_t rm_index(const std::vector<int>& coords) const;
  std::vector<int> coords_of_rm(int64_t rm) const;
  std::vector<int> coords_of_dm(int64_t dm) const {
    return coords_of_rm(rm_of_dm[dm]);
  }
  int coord_sum_of_dm(int64_t dm) const;
};

using GridPtr = std::shared_ptr<const GridSpec>;

GridPtr make_grid(int n, int d = 2);

// All vertices with coordinate sum i, lexicographic order.
std::vector<std::vector<int>> anti_diagonal(const GridSpec& grid,
                                            DiagonalIndex i);

struct WeightField {
  GridPtr grid;
  std::vector<double> w;  // diagonal-major

  double at(const std::vector<int>& coords) const {
    return w[grid->dm_of_rm[grid->rm_index(coords)]];
  }
  double& at(const std::vector<int>& coords) {
    return w[grid->dm_of_rm[grid->rm_index(coords)]];
  }
  double total_mass() const;
};

WeightField make_field(GridPtr grid, double fill = 0.0);

struct RegionMask {
  GridPtr grid;
  std::vector<uint8_t> bits;  // diagonal-major
  int64_t count = 0;

  bool contains_dm(int64_t dm) const { return bits[dm] != 0; }
  bool contains(const std::vector<int>& coords) const {
    return contains_dm(grid->dm_of_rm[grid->rm_index(coords)]);
  }
  int64_t cardinality() const { return count; }
};

RegionMask make_mask(GridPtr grid);
RegionMask full_mask(GridPtr grid);
void mask_set(RegionMask& m, int64_t dm, bool on);
RegionMask mask_union(const RegionMask& a, const RegionMask& b);
bool mask_subset(const RegionMask& a, const RegionMask& b);

// Piecewise-linear increasing curve through (0,0) and (1,1); knots strictly
// increasing in both coordinates.
class MonotoneCurve {
 public:
  explicit MonotoneCurve(std::vector<std::pair<double, double>> knots);
  static MonotoneCurve identity();
  static MonotoneCurve from_file(const std::string& path);
  // Builds a valid curve from arbitrary (t, y) samples: sorts, monotonizes,
  // pins the endpoints. Used for the batch median curve.
  static MonotoneCurve from_samples(const std::vector<std::pair<double, double>>& samples);

  double eval(double t) const;
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_;
};

// Comparison slack for set-membership inequalities (|y - c| <= eps*n and the
// central-index bound): exact ties stated in integer/rational form must land
// inside the set even when the float evaluation is off by an ulp.
inline constexpr double kTieTol = 1e-9;

// {(x,y): |x - y - 4iK| <= K}. Distinct i give disjoint strips. d = 2 only.
RegionMask strip(GridPtr grid, int i, int K);

// {(x,y): |y - n*curve(x/n)| <= eps*n}. d = 2 only, 0 < eps <= 1.
RegionMask cylinder(const MonotoneCurve& curve, double eps, GridPtr grid);

// Column bounds of the cylinder without materializing a mask: for each x the
// inclusive [lo, hi] y-range (empty ranges cannot occur).
std::vector<std::pair<int, int>> cylinder_bounds(const MonotoneCurve& curve,
                                                 double eps, int n);

// I = {i: |i - n| <= (1 - sqrt(eps)/4) * n}, d = 2, eps in (0, 1/16).
std::vector<DiagonalIndex> central_indices(const GridSpec& grid, double eps);

// Run-length-encoded rows for d = 2 masks; raw dm ranks otherwise.
std::string mask_to_rle(const RegionMask& m);
RegionMask mask_from_rle(GridPtr grid, const std::string& rle);

}  // namespace lptail
