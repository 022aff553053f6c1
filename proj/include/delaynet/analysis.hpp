#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delaynet/delays.hpp"

namespace delaynet {

class NoMalthusianRoot : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LambdaResult {
  enum class Method { ClosedForm, Bisection };
  double lambda = 0.0;
  double residual = 0.0;
  Method method = Method::Bisection;
  int iterations = 0;

  double tail_exponent() const { return 1.0 / lambda; }
};

inline const char* to_string(LambdaResult::Method m) {
  return m == LambdaResult::Method::ClosedForm ? "closed-form" : "bisection";
}

/// Root of Phi(1 - lambda) = (2 + alpha) lambda on (1/(2+alpha), 1).
///
/// The left side decreases and the right side increases in lambda, so the
/// root is bracketed whenever the difference changes sign across the interval.
/// A divergent moment counts as +infinity. The no-delay law (eta = 0 almost
/// surely) sits on the boundary and is returned in closed form.
inline LambdaResult solve_lambda(const DelayDistribution& delay) {
  const double alpha = delay.alpha();
  const double floor = 1.0 / (2.0 + alpha);

  const auto atoms = delay.eta_atoms();
  if (delay.q() == 0.0 && atoms.size() == 1 && atoms[0].first == 0.0 && delay.finite_mass() >= 1.0 - 1e-15)
    return {floor, 0.0, LambdaResult::Method::ClosedForm, 0};

  auto excess = [&](double lambda) {
    const Moment m = delay.exp_moment(1.0 - lambda);
    if (!m.finite) return std::numeric_limits<double>::infinity();
    return m.value - (2.0 + alpha) * lambda;
  };

  double lo = floor + 1e-9;
  double hi = 1.0 - 1e-9;
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(f_lo > 0.0) || !(f_hi < 0.0))
    throw NoMalthusianRoot("no Malthusian root on (1/(2+alpha), 1): excess " + std::to_string(f_lo) +
                           " at lower end, " + std::to_string(f_hi) + " at upper end");
  int it = 0;
  for (; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (excess(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  return {lambda, std::abs(excess(lambda)), LambdaResult::Method::Bisection, it};
}

/// Closed-form Malthusian parameter for eta ~ Exponential(theta).
inline double lambda_exponential(double theta, double alpha) {
  if (!(theta > 0.0) || !(alpha >= 0.0)) throw std::invalid_argument("lambda_exponential: need theta > 0, alpha >= 0");
  const double c = 1.0 - theta;
  return 0.5 * (c + std::sqrt(c * c + 4.0 * theta / (2.0 + alpha)));
}

struct MeanDegree {
  double mean = 0.0;
  bool condensation = false;
};

/// Mean of the limit degree law given P(eta < inf); condensation iff < 2.
inline MeanDegree mean_degree(double alpha, double p_finite) {
  if (!(p_finite > 0.0 && p_finite <= 1.0)) throw std::invalid_argument("mean_degree: p_finite must lie in (0,1]");
  const double mean = ((2.0 + alpha) + alpha * p_finite) / (2.0 + alpha - p_finite);
  return {mean, p_finite < 1.0};
}

struct PmfValue {
  double pmf = 0.0;
  double tail = 0.0;  // P(D >= k + 1)
};

/// Limit degree law for Bernoulli delays at alpha = 0.
///
/// Gaps are independent Exp(jp/2) for the j-th child, so
/// P(D >= k + 1) = prod_{j=1}^k jp/(jp + 2) and pmf(k) = tail(k-1) - tail(k).
/// Beyond small k the product is evaluated as Gamma(k+1) Gamma(1+c) / Gamma(k+1+c), c = 2/p.
inline PmfValue bernoulli_pmf(double p, std::uint64_t k) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli_pmf: p must lie in (0,1]");
  if (k < 1) throw std::invalid_argument("bernoulli_pmf: k must be >= 1");
  constexpr std::uint64_t kProductLimit = 64;
  double log_prev = 0.0;  // log tail(k - 1)
  if (k <= kProductLimit) {
    for (std::uint64_t j = 1; j < k; ++j) {
      const double jp = static_cast<double>(j) * p;
      log_prev += std::log(jp) - std::log(jp + 2.0);
    }
  } else {
    const double c = 2.0 / p, kk = static_cast<double>(k);
    log_prev = std::lgamma(kk) + std::lgamma(1.0 + c) - std::lgamma(kk + c);
  }
  const double kp = static_cast<double>(k) * p;
  const double tail_prev = std::exp(log_prev);
  return {tail_prev * 2.0 / (kp + 2.0), tail_prev * kp / (kp + 2.0)};
}

/// Limit degree law without delay.
inline double no_delay_pmf(double alpha, std::uint64_t k) {
  if (k < 1) throw std::invalid_argument("no_delay_pmf: k must be >= 1");
  const double kk = static_cast<double>(k);
  return (2.0 + alpha) * std::exp(std::lgamma(kk + alpha) + std::lgamma(3.0 + 2.0 * alpha) -
                                  std::lgamma(kk + 3.0 + 2.0 * alpha) - std::lgamma(1.0 + alpha));
}

enum class TailMethod { Hill, LogLogCcdf };

inline const char* to_string(TailMethod m) { return m == TailMethod::Hill ? "hill" : "loglog-ccdf"; }

struct TailFit {
  double exponent = 0.0;
  double std_error = 0.0;
  TailMethod method = TailMethod::Hill;
  double k_min = 0.0;
  std::size_t tail_size = 0;
  std::size_t sample_size = 0;
};

class InsufficientTail : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TailOptions {
  TailMethod method = TailMethod::Hill;
  /// Threshold; <= 0 selects the empirical 0.99-quantile.
  double k_min = 0.0;
  std::size_t min_tail = 1000;
  /// Treat data as integer valued (continuity correction k_min - 1/2).
  /// Unset: detected from the sample.
  std::optional<bool> discrete;
};

/// Estimate the exponent a of P(X >= x) ~ x^{-a}.
///
/// hill: maximum likelihood over observations >= k_min; for integer data the
/// reference point is k_min - 1/2. loglog-ccdf: least squares of log CCDF on
/// log x over a geometric grid from k_min to the sample maximum.
inline TailFit estimate_tail_exponent(std::span<const double> sample, const TailOptions& options = {}) {
  if (sample.empty()) throw InsufficientTail("empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw InsufficientTail("degenerate tail: all observations equal");
  const bool discrete =
      options.discrete.value_or(std::all_of(sorted.begin(), sorted.end(), [](double x) { return x == std::floor(x); }));

  double k_min = options.k_min;
  if (!(k_min > 0.0)) {
    const auto idx = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(sorted.size() - 1)));
    k_min = sorted[idx];
  }
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), k_min);
  const std::size_t tail = static_cast<std::size_t>(sorted.end() - first);
  if (tail < options.min_tail)
    throw InsufficientTail("insufficient tail data: " + std::to_string(tail) + " observations >= k_min = " +
                           std::to_string(k_min));
  if (*first == sorted.back()) throw InsufficientTail("degenerate tail: all tail observations equal");

  TailFit fit;
  fit.method = options.method;
  fit.k_min = k_min;
  fit.tail_size = tail;
  fit.sample_size = sorted.size();

  if (options.method == TailMethod::Hill) {
    const double ref = discrete ? k_min - 0.5 : k_min;
    double sum = 0.0;
    for (auto it = first; it != sorted.end(); ++it) sum += std::log(*it / ref);
    fit.exponent = static_cast<double>(tail) / sum;
    fit.std_error = fit.exponent / std::sqrt(static_cast<double>(tail));
    return fit;
  }

  // log P(X >= x) against log x on a grid with ratio 2^{1/4}.
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> points;
  for (double x = k_min; x <= sorted.back(); x *= std::pow(2.0, 0.25)) {
    const double at = discrete ? std::ceil(x) : x;
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), at);
    const double count = static_cast<double>(sorted.end() - pos);
    if (count < 10) break;
    points.emplace_back(std::log(at), std::log(count / n));
    if (discrete && at != x) x = at;
  }
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) throw InsufficientTail("insufficient tail data: fewer than 3 grid points");
  double mx = 0, my = 0;
  for (auto [x, y] : points) mx += x, my += y;
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0, sxy = 0;
  for (auto [x, y] : points) sxx += (x - mx) * (x - mx), sxy += (x - mx) * (y - my);
  const double slope = sxy / sxx;
  double rss = 0;
  for (auto [x, y] : points) {
    const double r = y - (my + slope * (x - mx));
    rss += r * r;
  }
  fit.exponent = -slope;
  fit.std_error = std::sqrt(rss / static_cast<double>(points.size() - 2) / sxx);
  return fit;
}

struct ScalingFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::size_t sizes = 0;
};

class InsufficientSpan : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScalingOptions {
  std::size_t min_sizes = 4;
  /// Required ratio n_max / n_min.
  double min_span = 64.0;
  std::size_t min_seeds = 20;
};

/// Least-squares slope of the per-size mean of log M against log n.
inline ScalingFit root_scaling_fit(std::span<const std::pair<double, double>> samples,
                                   const ScalingOptions& options = {}) {
  std::map<double, std::pair<double, std::size_t>> by_size;
  for (auto [n, m] : samples) {
    if (!(n > 0.0) || !(m > 0.0)) throw std::invalid_argument("root_scaling_fit: n and M must be positive");
    auto& [sum, count] = by_size[n];
    sum += std::log(m);
    ++count;
  }
  if (by_size.size() < options.min_sizes)
    throw InsufficientSpan("insufficient span: " + std::to_string(by_size.size()) + " distinct sizes");
  if (by_size.rbegin()->first / by_size.begin()->first < options.min_span)
    throw InsufficientSpan("insufficient span: sizes cover a ratio below " + std::to_string(options.min_span));
  for (const auto& [n, entry] : by_size)
    if (entry.second < options.min_seeds)
      throw InsufficientSpan("insufficient span: size " + std::to_string(n) + " has " +
                             std::to_string(entry.second) + " seeds");

  std::vector<std::pair<double, double>> points;
  for (const auto& [n, entry] : by_size) points.emplace_back(std::log(n), entry.first / static_cast<double>(entry.second));
  double mx = 0, my = 0;
  for (auto [x, y] : points) mx += x, my += y;
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0, sxy = 0;
  for (auto [x, y] : points) sxx += (x - mx) * (x - mx), sxy += (x - mx) * (y - my);
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (auto [x, y] : points) {
    const double r = y - (fit.intercept + fit.slope * x);
    rss += r * r;
  }
  fit.std_error = std::sqrt(rss / static_cast<double>(points.size() - 2) / sxx);
  fit.sizes = points.size();
  return fit;
}

}  // namespace delaynet
