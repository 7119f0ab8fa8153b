#pragma once

#include <cstdint>
#include <optional>

#include "lptail/distributions.hpp"
#include "lptail/lattice.hpp"
#include "lptail/passage.hpp"
#include "lptail/rng.hpp"

namespace lptail {

// A weight field guaranteed to satisfy L_n <= c, with the DP tables and RNG
// counters needed to run diagonal sweeps. One state is owned by one worker.
struct GibbsState {
  WeightField field;
  double c = 0.0;
  LawPtr law;
  PassageTables tables;
  int64_t sweep_count = 0;
  int64_t move_count = 0;  // region-sum moves consume their own counter lane
  RngKey key;

  double current_passage() const { return tables.bwd[field.grid->origin_dm()]; }
};

// Feasible start by global scaling: field0 * (s0 * c / L_n(field0)). With
// keep_if_feasible set, a field already satisfying L_n <= s0*c is returned
// unscaled.
GibbsState init_state(const WeightField& field0, double c, LawPtr law,
                      RngKey key, double s0 = 0.99,
                      bool keep_if_feasible = false);

// One systematic ascending diagonal sweep resampling every site from its
// exact conditional law (the weight law truncated at the slack R_v), then a
// descending pass restoring backward validity. Leaves L_n <= c.
void gibbs_sweep(GibbsState& state);

// Resample the total mass of region A holding the direction vector X_A/Z_A
// and the complement fixed. theta_max is located by bisection on the monotone
// map z -> L_n(z) to relative tolerance tol. Exponential law draws the
// truncated Gamma(|A|) in closed machinery; other laws invert the density
// z^{|A|-1} prod f(z y_v) numerically, with the support capped at
// 2*mean*|A|.
void region_sum_move(GibbsState& state, const RegionMask& A, double tol = 1e-9);

// Conditioned chain coupled to an unconditioned iid-refresh chain through
// shared per-site uniforms; star weights never exceed free weights.
struct CoupledState {
  GibbsState star;
  WeightField free_field;
  int64_t sweep_count = 0;
};

CoupledState make_coupled(GibbsState star);
void coupled_sweep(CoupledState& cs);

// Exact conditional sampler by rejection; exhaustion is a result, not an
// error. try_offset makes resumed runs continue the try counter.
struct OracleResult {
  std::optional<WeightField> field;
  uint64_t tries = 0;  // total tries consumed including the accepted one
};

OracleResult rejection_oracle(GridPtr grid, const LawPtr& law, double c,
                              uint64_t max_tries, RngKey key,
                              uint64_t try_offset = 0);

WeightField sample_iid_field(GridPtr grid, const WeightLaw& law, RngKey key,
                             Stream stream, uint64_t epoch);

// Diagnostic events on the conditioned state. event_B: the diagonal's mass
// deficit; event_M: enough sites with slack below M. Non-unit-mean laws
// compare against mean * |D_i|.
bool event_B(const GibbsState& state, DiagonalIndex i, double eps);
bool event_M(const GibbsState& state, DiagonalIndex i, double eps, double M);

// L_n of the field with region A rescaled so its total is z (directions and
// complement fixed); the monotone map bisected by region_sum_move.
double passage_at_region_total(const WeightField& f, const RegionMask& A,
                               double z);

// Largest region total keeping the state feasible (the bisection itself,
// exposed for tests).
double region_theta_max(const WeightField& f, const RegionMask& A, double c,
                        double tol = 1e-9);

}  // namespace lptail
