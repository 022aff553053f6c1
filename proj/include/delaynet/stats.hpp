#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace delaynet {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}.
inline double kolmogorov_survival(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test. Ties are handled by comparing the
/// empirical CDFs only after each distinct value, so for discrete data the
/// statistic is exact and the asymptotic p-value is conservative.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = nx * ny / (nx + ny);
  const double root = std::sqrt(ne);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

/// Kolmogorov distance between the empirical CDF of `sample` and `cdf`.
template <class Cdf>
double ks_distance(std::span<const double> sample, const Cdf& cdf) {
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size();) {
    const double v = x[i];
    const double below = static_cast<double>(i) / n;
    while (i < x.size() && x[i] == v) ++i;
    const double F = cdf(v);
    const double F_left = cdf(std::nextafter(v, -INFINITY));
    d = std::max({d, std::abs(static_cast<double>(i) / n - F), std::abs(below - F_left)});
  }
  return d;
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

template <class T>
MeanEstimate mean_and_error(std::span<const T> sample) {
  const double n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (T x : sample) mean += static_cast<double>(x);
  mean /= n;
  double ss = 0.0;
  for (T x : sample) ss += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

/// Empirical pmf of an integer sample.
template <class T>
std::map<std::uint64_t, double> empirical_pmf(std::span<const T> sample) {
  std::map<std::uint64_t, double> pmf;
  for (T x : sample) pmf[static_cast<std::uint64_t>(x)] += 1.0;
  for (auto& [k, p] : pmf) p /= static_cast<double>(sample.size());
  return pmf;
}

/// TV between an empirical pmf and a reference pmf on {1, 2, ...}. Mass of
/// the reference beyond `k_max` is counted as unmatched.
template <class Ref>
double tv_to_reference(const std::map<std::uint64_t, double>& pmf, const Ref& reference, std::uint64_t k_max) {
  double sum = 0.0;
  double ref_total = 0.0;
  for (std::uint64_t k = 1; k <= k_max; ++k) {
    const double r = reference(k);
    ref_total += r;
    auto it = pmf.find(k);
    sum += std::abs((it == pmf.end() ? 0.0 : it->second) - r);
  }
  for (auto it = pmf.upper_bound(k_max); it != pmf.end(); ++it) sum += it->second;
  auto z = pmf.find(0);
  if (z != pmf.end()) sum += z->second;
  sum += std::max(0.0, 1.0 - ref_total);
  return 0.5 * sum;
}

}  // namespace delaynet
