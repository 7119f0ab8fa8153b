#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "lptail/lattice.hpp"

namespace lptail {

inline constexpr double kNoPath = -std::numeric_limits<double>::infinity();

// Forward table L(0,v) / backward table L(v,n), both including the endpoint
// weights, plus validity watermarks for incremental recomputation.
// fwd_mark = highest diagonal with valid forward values (-1 = none).
// bwd_mark = lowest diagonal with valid backward values (diag_count = none).
struct PassageTables {
  GridPtr grid;
  std::vector<double> fwd;
  std::vector<double> bwd;
  int fwd_mark = -1;
  int bwd_mark = 0;

  bool fwd_full() const { return fwd_mark == grid->diag_count - 1; }
  bool bwd_full() const { return bwd_mark == 0; }
};

PassageTables make_tables(GridPtr grid);

// Extend forward validity to diagonal i (requires fwd_mark == i-1); the
// result is bit-identical to a batch recomputation.
void advance_forward(PassageTables& t, const WeightField& f, DiagonalIndex i);
// Extend backward validity down to diagonal i (requires bwd_mark == i+1).
void retreat_backward(PassageTables& t, const WeightField& f, DiagonalIndex i);

void forward_table(PassageTables& t, const WeightField& f);
void backward_table(PassageTables& t, const WeightField& f);
PassageTables full_tables(const WeightField& f);

double passage_value(const WeightField& f);  // L_n via a fresh forward pass

// Max over in-neighbors of fwd (0 for the origin) and max over out-neighbors
// of bwd (0 for the far corner). These are what diagonal-i resampling needs:
// best path through v = in_max(v) + X_v + out_max(v).
double fwd_in_max(const PassageTables& t, int64_t dm);
double bwd_out_max(const PassageTables& t, int64_t dm);

// Directed path 0 -> n; each step increments one coordinate.
struct Geodesic {
  std::vector<int64_t> dm;  // vertex ranks in path order
  std::vector<std::vector<int>> coords(const GridSpec& grid) const;
  double weight(const WeightField& f) const;
};

// Backtracks the forward table from the far corner. Ties prefer the step in
// the lowest coordinate index (in path orientation), so discrete-weight runs
// are reproducible.
Geodesic geodesic(const WeightField& f, const PassageTables& t);

std::string geodesic_to_csv(const Geodesic& g, const GridSpec& grid);

struct RestrictedResult {
  double value = kNoPath;  // -inf when no admissible path exists
  std::optional<Geodesic> path;
};

// Best directed 0 -> n path with every vertex inside A.
RestrictedResult restricted_passage(const WeightField& f, const RegionMask& A,
                                    bool want_path = false);

// Best directed path (free endpoints) contained in A; 0 when A is empty.
// This is the strip-profile notion of restricted passage.
double best_path_within(const WeightField& f, const RegionMask& A);

// Slack R_v = c - (fwd(v) + bwd(v) - 2 X_v) for v on diagonal i, computed
// from the neighbor maxima so it only needs fwd below i and bwd above i.
// Returned in dm order along the diagonal.
std::vector<double> slack_field(const WeightField& f, const PassageTables& t,
                                double c, DiagonalIndex i);

}  // namespace lptail
