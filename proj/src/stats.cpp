#include "lptail/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lptail {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {
// Asymptotic KS survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 l^2}.
double ks_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}
}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size(), nb = b.size();
  size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::abs(ia / na - ib / nb));
  }
  double ne = std::sqrt(na * nb / (na + nb));
  KsResult r;
  r.statistic = d;
  r.p_value = ks_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

KsResult ks_uniform(std::vector<double> u) {
  if (u.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(u.begin(), u.end());
  const double n = u.size();
  double d = 0.0;
  for (size_t k = 0; k < u.size(); ++k) {
    d = std::max(d, std::abs((k + 1) / n - u[k]));
    d = std::max(d, std::abs(u[k] - k / n));
  }
  double ne = std::sqrt(n);
  KsResult r;
  r.statistic = d;
  r.p_value = ks_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

double mann_whitney_less_p(const std::vector<double>& a,
                           const std::vector<double>& b) {
  // U = #{(i,j): a_i > b_j} + ties/2; small U favors "a less than b"
  std::vector<double> sb = b;
  std::sort(sb.begin(), sb.end());
  double u_stat = 0.0;
  for (double x : a) {
    auto lo = std::lower_bound(sb.begin(), sb.end(), x) - sb.begin();
    auto hi = std::upper_bound(sb.begin(), sb.end(), x) - sb.begin();
    u_stat += lo + 0.5 * (hi - lo);
  }
  const double n1 = a.size(), n2 = b.size();
  const double mu = n1 * n2 / 2.0;
  const double sd = std::sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0);
  double z = (u_stat - mu) / sd;
  return normal_cdf(z);
}

double welch_less_p(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = mean_of(a), mb = mean_of(b);
  double va = stddev_of(a), vb = stddev_of(b);
  double se = std::sqrt(va * va / a.size() + vb * vb / b.size());
  if (se == 0.0) return ma < mb ? 0.0 : 1.0;
  return normal_cdf((ma - mb) / se);
}

double proportion_less_p(int64_t k1, int64_t n1, int64_t k2, int64_t n2) {
  double p1 = double(k1) / n1, p2 = double(k2) / n2;
  double pool = double(k1 + k2) / double(n1 + n2);
  double se = std::sqrt(pool * (1 - pool) * (1.0 / n1 + 1.0 / n2));
  if (se == 0.0) return p1 < p2 ? 0.0 : 1.0;
  return normal_cdf((p1 - p2) / se);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

double median_of(std::vector<double> v) { return quantile_of(std::move(v), 0.5); }

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(v.begin(), v.end());
  int64_t idx = static_cast<int64_t>(std::floor(q * v.size()));
  idx = std::max<int64_t>(0, std::min<int64_t>(idx, v.size() - 1));
  return v[idx];
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = mean_of(v);
  s.stderr_mean = stddev_of(v) / std::sqrt(double(v.size()));
  s.q05 = quantile_of(v, 0.05);
  s.q25 = quantile_of(v, 0.25);
  s.median = quantile_of(v, 0.5);
  s.q75 = quantile_of(v, 0.75);
  s.q95 = quantile_of(v, 0.95);
  return s;
}

}  // namespace lptail
