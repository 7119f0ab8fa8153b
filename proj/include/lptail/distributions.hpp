#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lptail/rng.hpp"

namespace lptail {

// ---- truncated exponential -------------------------------------------------

// Inverse-CDF sample of Exp(1) conditioned to [0,R]; exact closed form,
// monotone nondecreasing in both u and R. R = +inf is the untruncated law.
double sample_trunc_exp(double R, double u);

// E[Exp(1) | X <= R] = 1 - R/(e^R - 1).
double trunc_exp_mean(double R);

// The unique M with trunc_exp_mean(M) = 1 - eps/4, bisected to 1e-12.
double solve_M(double eps);

// ---- gamma -----------------------------------------------------------------

// Exact Gamma(shape, 1) draw (Marsaglia-Tsang, shape >= 1), consuming
// uniforms from the given cursor only.
double gamma_sample(double shape, SiteRng& rng);

// Exact draw of Gamma(m) conditioned to [0, theta_max]. Plain rejection while
// P(Z <= theta_max) >= 1e-3, otherwise numeric inversion of the regularized
// incomplete gamma restricted to [0, theta_max].
double sample_trunc_gamma(int64_t m, double theta_max, SiteRng& rng);

double gamma_cdf(double shape, double x);        // regularized lower gamma
double gamma_cdf_inv(double shape, double p);

// ---- weight-law plugin -----------------------------------------------------

enum class LawClass { p1, p2, other };

// A positive continuous density on [0,inf) with CMF machinery. Class tags are
// asserted by the caller and spot-verified on a grid; laws failing the
// integrability condition int (1-F)^{1/d} < inf are rejected at construction.
class WeightLaw {
 public:
  virtual ~WeightLaw() = default;

  virtual std::string name() const = 0;
  virtual double density(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double inv_cdf(double p) const = 0;
  virtual double mean() const = 0;
  virtual LawClass law_class() const { return LawClass::other; }

  double sample(double u) const { return inv_cdf(u); }

  // F^{-1}(u * F(R)): the law conditioned to [0,R], pathwise monotone in both
  // u and R. R = 0 returns 0.
  virtual double sample_truncated(double R, double u) const;

  // -inf V' for log-concave densities e^{-V}; only meaningful for P2 laws.
  virtual double p2_growth_constant() const;
};

using LawPtr = std::shared_ptr<const WeightLaw>;

LawPtr make_exp_law();
LawPtr make_gamma_law(double k);                   // shape k >= 1
LawPtr make_half_normal_law(double sigma);         // mean sigma*sqrt(2/pi)
// Two-component exponential mixture with rates 1 and 1/2 (closed-form
// inverse); nonincreasing density, the stand-in for a uniform-like P1 law.
LawPtr make_expmix_law(double w1);
LawPtr make_tabulated_law(const std::string& path, LawClass declared);

// e^{C (1-t) z_A} with C = -inf V'; upper bound for prod f(x_v)/prod f(t x_v)
// over vectors with sum z_A (P2 laws only).
double logconcave_ratio_bound(const WeightLaw& law, double t, double z_A);

// Spot verification used at construction: P1 => density nonincreasing on a
// grid; P2 => log-density concave by second differences; all laws => positive
// density near the origin and an integrable (1-F)^{1/2} tail.
void validate_law(const WeightLaw& law);

}  // namespace lptail
