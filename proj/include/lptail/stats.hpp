#pragma once

#include <vector>

namespace lptail {

double normal_cdf(double z);

// Two-sample Kolmogorov-Smirnov; asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// One-sample KS against U(0,1).
KsResult ks_uniform(std::vector<double> u);

// Mann-Whitney U with normal approximation; p-value for the one-sided
// alternative "a stochastically less than b".
double mann_whitney_less_p(const std::vector<double>& a,
                           const std::vector<double>& b);

// Welch z-test; p-value for the one-sided alternative mean(a) < mean(b).
double welch_less_p(const std::vector<double>& a, const std::vector<double>& b);

// One-sided two-proportion z-test: p-value for alt p1 < p2 given successes
// k1/n1 vs k2/n2.
double proportion_less_p(int64_t k1, int64_t n1, int64_t k2, int64_t n2);

double mean_of(const std::vector<double>& v);
double stddev_of(const std::vector<double>& v);
double median_of(std::vector<double> v);
// Deterministic empirical quantile: sorted[clamp(floor(q*k), 0, k-1)].
double quantile_of(std::vector<double> v, double q);

struct Summary {
  int64_t count = 0;
  double mean = 0, stderr_mean = 0, q05 = 0, q25 = 0, median = 0, q75 = 0,
         q95 = 0;
};
Summary summarize(const std::vector<double>& v);

}  // namespace lptail
