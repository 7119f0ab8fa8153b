#include "lptail/distributions.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace lptail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double sample_trunc_exp(double R, double u) {
  if (!(R > 0.0)) throw std::domain_error("sample_trunc_exp: R must be > 0");
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("sample_trunc_exp: u must lie in (0,1)");
  if (std::isinf(R)) return -std::log1p(-u);
  // -log(1 - u(1 - e^-R)) evaluated as -log1p(u * expm1(-R))
  return -std::log1p(u * std::expm1(-R));
}

double trunc_exp_mean(double R) {
  if (!(R > 0.0)) throw std::domain_error("trunc_exp_mean: R must be > 0");
  if (std::isinf(R)) return 1.0;
  return 1.0 - R / std::expm1(R);
}

double solve_M(double eps) {
  if (!(eps > 0.0 && eps < 1.0 / 16.0))
    throw std::domain_error("solve_M: eps must lie in (0, 1/16)");
  const double target = 1.0 - eps / 4.0;
  double lo = 1e-12, hi = 80.0;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    if (trunc_exp_mean(mid) < target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double gamma_sample(double shape, SiteRng& rng) {
  if (!(shape >= 1.0)) throw std::domain_error("gamma_sample: shape >= 1");
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    // Box-Muller normal from two counter uniforms
    double u1 = rng.next(), u2 = rng.next();
    double x = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng.next();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double gamma_cdf(double shape, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, x);
}

double gamma_cdf_inv(double shape, double p) {
  return boost::math::gamma_p_inv(shape, p);
}

double sample_trunc_gamma(int64_t m, double theta_max, SiteRng& rng) {
  if (m < 1) throw std::domain_error("sample_trunc_gamma: m >= 1");
  if (!(theta_max > 0.0))
    throw std::domain_error("sample_trunc_gamma: theta_max > 0");
  if (std::isinf(theta_max)) return gamma_sample(static_cast<double>(m), rng);
  const double p_acc = gamma_cdf(static_cast<double>(m), theta_max);
  if (p_acc >= 1e-3) {
    for (;;) {
      double z = gamma_sample(static_cast<double>(m), rng);
      if (z <= theta_max) return z;
    }
  }
  // deep truncation: invert the restricted CDF
  double u = rng.next();
  double z = gamma_cdf_inv(static_cast<double>(m), u * p_acc);
  return std::min(z, theta_max);
}

// ---- WeightLaw -------------------------------------------------------------

double WeightLaw::sample_truncated(double R, double u) const {
  if (R == 0.0) return 0.0;
  if (!(R > 0.0)) throw std::domain_error("sample_truncated: R must be >= 0");
  double fr = std::isinf(R) ? 1.0 : cdf(R);
  if (fr <= 0.0)
    throw std::domain_error("sample_truncated: degenerate support F(R) = 0");
  return std::min(inv_cdf(u * fr), R);
}

double WeightLaw::p2_growth_constant() const {
  if (law_class() != LawClass::p2)
    throw std::logic_error("p2_growth_constant: law not tagged P2");
  // estimate inf V' with central differences of -log f on a grid
  const double hi = inv_cdf(0.999999);
  const int grid = 10000;
  const double h = hi / grid;
  double inf_vp = kInf;
  for (int k = 1; k < grid; ++k) {
    double x = k * h;
    double vp = -(std::log(density(x + h)) - std::log(density(x - h))) / (2 * h);
    inf_vp = std::min(inf_vp, vp);
  }
  if (!(inf_vp > -1e6))
    throw std::domain_error("p2_growth_constant: V' unbounded below, not P2");
  return -inf_vp;
}

double logconcave_ratio_bound(const WeightLaw& law, double t, double z_A) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::domain_error("logconcave_ratio_bound: t in (0,1]");
  const double C = law.p2_growth_constant();
  return std::exp(C * (1.0 - t) * z_A);
}

namespace {

class ExpLaw final : public WeightLaw {
 public:
  std::string name() const override { return "exp"; }
  double density(double x) const override { return x < 0 ? 0.0 : std::exp(-x); }
  double cdf(double x) const override { return x <= 0 ? 0.0 : -std::expm1(-x); }
  double inv_cdf(double p) const override { return -std::log1p(-p); }
  double mean() const override { return 1.0; }
  LawClass law_class() const override { return LawClass::p2; }
  double sample_truncated(double R, double u) const override {
    if (R == 0.0) return 0.0;
    return sample_trunc_exp(R, u);
  }
  double p2_growth_constant() const override { return -1.0; }  // V' = 1
};

class GammaLaw final : public WeightLaw {
 public:
  explicit GammaLaw(double k) : k_(k) {
    if (!(k >= 1.0))
      throw std::invalid_argument("gamma law needs shape k >= 1");
  }
  std::string name() const override { return "gamma(" + std::to_string(k_) + ")"; }
  double density(double x) const override {
    if (x < 0) return 0.0;
    if (x == 0) return k_ == 1.0 ? 1.0 : 0.0;
    return std::exp((k_ - 1) * std::log(x) - x - std::lgamma(k_));
  }
  double cdf(double x) const override { return gamma_cdf(k_, x); }
  double inv_cdf(double p) const override { return gamma_cdf_inv(k_, p); }
  double mean() const override { return k_; }
  // k > 1 has V'(0) = -inf, which fails the P2 requirement
  LawClass law_class() const override {
    return k_ == 1.0 ? LawClass::p2 : LawClass::other;
  }

 private:
  double k_;
};

class HalfNormalLaw final : public WeightLaw {
 public:
  explicit HalfNormalLaw(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("half-normal sigma > 0");
  }
  std::string name() const override {
    return "half-normal(" + std::to_string(sigma_) + ")";
  }
  double density(double x) const override {
    if (x < 0) return 0.0;
    const double c = std::sqrt(2.0 / 3.141592653589793) / sigma_;
    return c * std::exp(-x * x / (2 * sigma_ * sigma_));
  }
  double cdf(double x) const override {
    if (x <= 0) return 0.0;
    return boost::math::erf(x / (sigma_ * std::sqrt(2.0)));
  }
  double inv_cdf(double p) const override {
    return sigma_ * std::sqrt(2.0) * boost::math::erf_inv(p);
  }
  double mean() const override {
    return sigma_ * std::sqrt(2.0 / 3.141592653589793);
  }
  LawClass law_class() const override { return LawClass::p2; }
  double p2_growth_constant() const override { return 0.0; }  // V' = x/s^2 >= 0

 private:
  double sigma_;
};

// w1 Exp(1) + (1-w1) Exp(1/2); CDF is quadratic in s = e^{-x/2}, so the
// inverse is closed form.
class ExpMixLaw final : public WeightLaw {
 public:
  explicit ExpMixLaw(double w1) : w1_(w1) {
    if (!(w1 > 0.0 && w1 < 1.0))
      throw std::invalid_argument("expmix weight in (0,1)");
  }
  std::string name() const override {
    return "expmix(" + std::to_string(w1_) + ")";
  }
  double density(double x) const override {
    if (x < 0) return 0.0;
    return w1_ * std::exp(-x) + (1 - w1_) * 0.5 * std::exp(-0.5 * x);
  }
  double cdf(double x) const override {
    if (x <= 0) return 0.0;
    return 1.0 - w1_ * std::exp(-x) - (1 - w1_) * std::exp(-0.5 * x);
  }
  double inv_cdf(double p) const override {
    // 1-p = w1 s^2 + w2 s with s = e^{-x/2}
    const double w2 = 1 - w1_;
    double s = (-w2 + std::sqrt(w2 * w2 + 4 * w1_ * (1 - p))) / (2 * w1_);
    return -2.0 * std::log(s);
  }
  double mean() const override { return w1_ + (1 - w1_) * 2.0; }
  LawClass law_class() const override { return LawClass::p1; }

 private:
  double w1_;
};

// Linear-interpolated density from a two-column (x, f) file starting at
// x = 0, with a rate-1 exponential continuation beyond the last knot so the
// support is all of [0, inf). Normalization includes the tail mass.
class TabulatedLaw final : public WeightLaw {
 public:
  TabulatedLaw(const std::string& path, LawClass declared) : class_(declared) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open density file: " + path);
    double x, f;
    while (in >> x >> f) {
      xs_.push_back(x);
      fs_.push_back(f);
    }
    if (xs_.size() < 3)
      throw std::runtime_error("density table needs >= 3 points");
    if (xs_.front() != 0.0)
      throw std::runtime_error("density table must start at x = 0");
    for (size_t k = 1; k < xs_.size(); ++k)
      if (xs_[k] <= xs_[k - 1])
        throw std::runtime_error("density table x must strictly increase");
    for (double v : fs_)
      if (!(v > 0.0)) throw std::runtime_error("density values must be > 0");
    cum_.assign(xs_.size(), 0.0);
    for (size_t k = 1; k < xs_.size(); ++k)
      cum_[k] = cum_[k - 1] +
                0.5 * (fs_[k] + fs_[k - 1]) * (xs_[k] - xs_[k - 1]);
    const double z = cum_.back() + fs_.back();  // tail integral = f(xmax)
    for (auto& v : fs_) v /= z;
    for (auto& v : cum_) v /= z;
    mean_ = 0.0;
    for (size_t k = 1; k < xs_.size(); ++k)
      mean_ += 0.5 * (xs_[k] * fs_[k] + xs_[k - 1] * fs_[k - 1]) *
               (xs_[k] - xs_[k - 1]);
    mean_ += fs_.back() * (xs_.back() + 1.0);
    // 1024-point lookup grid seeding the monotone bisection
    seed_x_.resize(1025);
    seed_p_.resize(1025);
    const double hi = xs_.back() + 60.0;
    for (int k = 0; k <= 1024; ++k) {
      seed_x_[k] = hi * k / 1024.0;
      seed_p_[k] = cdf_raw(seed_x_[k]);
    }
  }

  std::string name() const override { return "tabulated"; }
  double density(double x) const override {
    if (x < 0) return 0.0;
    if (x >= xs_.back()) return fs_.back() * std::exp(-(x - xs_.back()));
    size_t k = seg(x);
    double t = (x - xs_[k]) / (xs_[k + 1] - xs_[k]);
    return fs_[k] + t * (fs_[k + 1] - fs_[k]);
  }
  double cdf(double x) const override { return cdf_raw(x); }
  double inv_cdf(double p) const override {
    auto it = std::lower_bound(seed_p_.begin(), seed_p_.end(), p);
    size_t k = std::min<size_t>(it - seed_p_.begin(), 1024);
    double lo = k == 0 ? 0.0 : seed_x_[k - 1];
    double hi = seed_x_[k];
    if (p > seed_p_.back()) { lo = seed_x_.back(); hi = seed_x_.back() + 700; }
    for (int it2 = 0; it2 < 200; ++it2) {
      double mid = 0.5 * (lo + hi);
      if (cdf_raw(mid) < p) lo = mid; else hi = mid;
      if (std::abs(cdf_raw(0.5 * (lo + hi)) - p) <= 1e-10) break;
    }
    return 0.5 * (lo + hi);
  }
  double mean() const override { return mean_; }
  LawClass law_class() const override { return class_; }

 private:
  double cdf_raw(double x) const {
    if (x <= 0) return 0.0;
    if (x >= xs_.back())
      return cum_.back() + fs_.back() * -std::expm1(-(x - xs_.back()));
    size_t k = seg(x);
    double h = x - xs_[k];
    return cum_[k] + 0.5 * (fs_[k] + density(x)) * h;
  }
  size_t seg(double x) const {
    return std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin() - 1;
  }
  std::vector<double> xs_, fs_, cum_, seed_x_, seed_p_;
  double mean_;
  LawClass class_;
};

}  // namespace

void validate_law(const WeightLaw& law) {
  // density positive where the conditional sweeps will evaluate it
  const double M = solve_M(1.0 / 16.0 - 1e-6);
  for (int k = 1; k <= 64; ++k) {
    double x = M * k / 64.0;
    if (!(law.density(x) >= 1e-12))
      throw std::domain_error(law.name() + ": density not bounded away from 0");
  }
  // tail integrability: int (1-F)^{1/2} converges iff the tail decays faster
  // than x^{-2}; ratio-test the survival function at doubling points
  {
    double x = std::max(law.inv_cdf(0.99), 1e-6);
    double tail = 1.0 - law.cdf(x);
    for (int k = 0; k < 60 && tail > 1e-13; ++k) {
      double tail2 = 1.0 - law.cdf(2 * x);
      if (tail2 > tail * std::pow(2.0, -2.05) && tail2 > 1e-13)
        throw std::domain_error(
            law.name() + ": tail too heavy, (1-F)^{1/2} not integrable");
      x *= 2;
      tail = tail2;
    }
  }
  // spot-check the class tag on a grid
  const double hi = law.inv_cdf(0.9999);
  const int grid = 10000;
  if (law.law_class() == LawClass::p1) {
    double prev = law.density(0.0);
    for (int k = 1; k <= grid; ++k) {
      double f = law.density(hi * k / grid);
      if (f > prev * (1 + 1e-9) + 1e-12)
        throw std::domain_error(law.name() + ": density not nonincreasing, not P1");
      prev = f;
    }
  } else if (law.law_class() == LawClass::p2) {
    double h = hi / grid;
    for (int k = 1; k < grid; ++k) {
      double a = std::log(law.density((k - 1) * h + 1e-12));
      double b = std::log(law.density(k * h));
      double c = std::log(law.density((k + 1) * h));
      if (a + c - 2 * b > 1e-7)
        throw std::domain_error(law.name() + ": log-density not concave, not P2");
    }
    law.p2_growth_constant();  // throws when V' diverges
  }
}

LawPtr make_exp_law() {
  auto law = std::make_shared<ExpLaw>();
  validate_law(*law);
  return law;
}

LawPtr make_gamma_law(double k) {
  auto law = std::make_shared<GammaLaw>(k);
  validate_law(*law);
  return law;
}

LawPtr make_half_normal_law(double sigma) {
  auto law = std::make_shared<HalfNormalLaw>(sigma);
  validate_law(*law);
  return law;
}

LawPtr make_expmix_law(double w1) {
  auto law = std::make_shared<ExpMixLaw>(w1);
  validate_law(*law);
  return law;
}

LawPtr make_tabulated_law(const std::string& path, LawClass declared) {
  auto law = std::make_shared<TabulatedLaw>(path, declared);
  validate_law(*law);
  return law;
}

}  // namespace lptail
