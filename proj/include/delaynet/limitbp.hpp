#pragma once

// Samplers for the limit objects of the delayed model.
//
// Memory route: an individual's children arrive at sigma_1 < sigma_2 < ...,
// and given sigma_0 = 0, ..., sigma_i the next gap has hazard
//   sum_{j<=i} h(x + sigma_i - sigma_j) + alpha h(x + sigma_i).
// Gaps are drawn by inverting the integrated hazard against Exp(1).
//
// Edge route: every edge reproduces as an independent Poisson process of
// rate r(age); the new vertex joins the parent end with probability
// 1/(2+alpha), the child end otherwise. The degree of the initial child is
// the size of a branching process with immigration driven by h.
//
// All samplers stop at an independent T1 ~ Exp(1) drawn first.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaynet/delays.hpp"
#include "delaynet/rng.hpp"
#include "delaynet/tree.hpp"

namespace delaynet {

inline constexpr std::uint64_t kDefaultPopulationCap = 10'000'000;

class PopulationCapExceeded : public std::runtime_error {
 public:
  explicit PopulationCapExceeded(std::uint64_t cap)
      : std::runtime_error("population exceeded cap of " + std::to_string(cap)) {}
};

class RootBracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Smallest x in [lo, hi] with f(x) >= target for nondecreasing f, by
/// bisection to 1e-12 relative width (at most 200 halvings).
template <class F>
double invert_increasing(const F& f, double target, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * hi) break;
  }
  return hi;
}

/// Root of f(x) = target on [lo, hi] for convex nondecreasing f with
/// f(hi) >= target and f' a right derivative. Newton steps from the right
/// stay right of the root by convexity; a step that fails to shrink the
/// bracket falls back to bisection. Returns x with f(x) >= target and
/// f(x) - target <= 1e-13 (1 + target) unless the bracket collapses first.
template <class F, class DF>
double invert_convex(const F& f, const DF& df, double target, double lo, double hi) {
  double x = hi;
  double fx = f(x);
  const double tol = 1e-13 * (1.0 + std::abs(target));
  for (int it = 0; it < 200 && fx - target > tol; ++it) {
    const double slope = df(x);
    double next = slope > 0.0 ? x - (fx - target) / slope : lo;
    if (!(next > lo && next < x)) next = 0.5 * (lo + x);
    if (next <= lo || next >= x) break;
    const double fn = f(next);
    if (fn >= target) {
      x = next;
      fx = fn;
    } else {
      lo = next;
      // Rounding put the Newton iterate left of the root; bisect once.
      const double mid = 0.5 * (lo + x);
      if (mid <= lo || mid >= x) break;
      const double fm = f(mid);
      if (fm >= target) {
        x = mid;
        fx = fm;
      } else {
        lo = mid;
      }
    }
    if (x - lo <= 1e-15 * x) break;
  }
  return x;
}

}  // namespace detail

/// Integrated hazard of the next gap of the memory point process given the
/// arrival times so far. sigma starts at {0}.
class MemoryHazard {
 public:
  explicit MemoryHazard(const DelayDistribution& delay) : delay_(&delay), alpha_(delay.alpha()) {
    sigma_.push_back(0.0);
    refresh_offset();
  }

  const std::vector<double>& sigma() const noexcept { return sigma_; }
  std::size_t arrivals() const noexcept { return sigma_.size() - 1; }
  double last() const noexcept { return sigma_.back(); }

  /// Lambda_i(x) = sum_j [H(x + s_i - s_j) - H(s_i - s_j)] + alpha [H(x + s_i) - H(s_i)].
  double cumulative(double x) const {
    const double si = sigma_.back();
    double total = 0.0;
    for (double sj : sigma_) total += delay_->big_h(x + si - sj);
    if (alpha_ != 0.0) total += alpha_ * delay_->big_h(x + si);
    return total - offset_;
  }

  /// Instantaneous rate: sum_j h(x + s_i - s_j) + alpha h(x + s_i).
  double rate(double x) const {
    const double si = sigma_.back();
    double total = 0.0;
    for (double sj : sigma_) total += delay_->hazard(x + si - sj);
    if (alpha_ != 0.0) total += alpha_ * delay_->hazard(x + si);
    return total;
  }

  /// lim_{x -> inf} Lambda_i(x): infinite unless eta has no finite part.
  double limit() const {
    return delay_->finite_mass() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }

  /// Record the next arrival `gap` after the current last one.
  void push(double gap) {
    sigma_.push_back(sigma_.back() + gap);
    refresh_offset();
  }

  /// Gap solving Lambda_i(x) = u on [0, horizon], or nullopt if
  /// Lambda_i(horizon) < u.
  std::optional<double> solve_within(double u, double horizon) const {
    if (cumulative(horizon) < u) return std::nullopt;
    return invert(u, horizon);
  }

  /// Gap solving Lambda_i(x) = u without horizon; brackets by doubling from 1.
  double solve(double u) const {
    if (limit() < u) return std::numeric_limits<double>::infinity();
    double hi = 1.0;
    int doublings = 0;
    while (cumulative(hi) < u) {
      hi *= 2.0;
      if (++doublings > 1000 || !std::isfinite(hi))
        throw RootBracketError("integrated hazard failed to reach " + std::to_string(u) + " by x = " +
                               std::to_string(hi) + " after " + std::to_string(arrivals()) +
                               " arrivals");
    }
    return invert(u, hi);
  }

 private:
  double invert(double u, double hi) const {
    return detail::invert_convex([this](double x) { return cumulative(x); }, [this](double x) { return rate(x); },
                                 u, 0.0, hi);
  }

  void refresh_offset() {
    const double si = sigma_.back();
    offset_ = 0.0;
    for (double sj : sigma_) offset_ += delay_->big_h(si - sj);
    if (alpha_ != 0.0) offset_ += alpha_ * delay_->big_h(si);
  }

  const DelayDistribution* delay_;
  double alpha_;
  std::vector<double> sigma_;
  double offset_ = 0.0;
};

/// Direct evaluation of the hazard of the (i+1)-st gap from the piecewise
/// integrals over the sigma grid (numeric quadrature against F_eta).
inline double memory_rate_direct(const DelayDistribution& delay, std::span<const double> sigma, double x) {
  const double alpha = delay.alpha();
  const std::size_t i = sigma.size() - 1;
  const double si = sigma[i];
  double total = 0.0;
  for (std::size_t j = 1; j <= i; ++j) {
    const double lo = x + si - sigma[j];
    const double hi = x + si - sigma[j - 1];
    total += (static_cast<double>(j) + alpha) * exp_stieltjes_numeric(delay, lo, hi);
  }
  total += (static_cast<double>(i) + 1.0 + alpha) * exp_stieltjes_numeric(delay, 0.0, x);
  return total / (2.0 + alpha);
}

struct InterarrivalSample {
  std::vector<double> gaps;  // +inf marks a defective arrival
  std::size_t defective = 0;
};

template <class Rng>
InterarrivalSample sample_interarrivals(const DelayDistribution& delay, std::size_t k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_interarrivals: k must be >= 1");
  MemoryHazard hazard(delay);
  InterarrivalSample out;
  out.gaps.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double gap = hazard.solve(standard_exponential(rng));
    out.gaps.push_back(gap);
    if (std::isfinite(gap))
      hazard.push(gap);
    else
      ++out.defective;
  }
  return out;
}

/// One draw from the limit degree law: 1 + #{i >= 1 : sigma_i <= T1}.
template <class Rng>
std::uint64_t sample_degree_hazard(const DelayDistribution& delay, Rng& rng,
                                   std::uint64_t cap = kDefaultPopulationCap) {
  const double t1 = standard_exponential(rng);
  MemoryHazard hazard(delay);
  std::uint64_t degree = 1;
  while (auto gap = hazard.solve_within(standard_exponential(rng), t1 - hazard.last())) {
    hazard.push(*gap);
    if (++degree > cap) throw PopulationCapExceeded(cap);
  }
  return degree;
}

namespace detail {

/// Arrivals in (0, horizon] of a Poisson process with cumulative intensity G.
template <class G, class DG, class Rng, class Emit>
void poisson_arrivals(const G& cumulative, const DG& intensity, double horizon, Rng& rng, Emit&& emit) {
  if (!(horizon > 0.0)) return;
  const double total = cumulative(horizon);
  double level = 0.0;
  double at = 0.0;
  for (;;) {
    level += standard_exponential(rng);
    if (level > total) return;
    at = invert_convex(cumulative, intensity, level, at, horizon);
    if (!emit(at)) return;
  }
}

}  // namespace detail

/// |BP_e(T1)|: one initial individual plus immigrants at rate alpha h(t);
/// each individual reproduces at rate h(age).
template <class Rng>
std::uint64_t sample_edge_bp_degree(const DelayDistribution& delay, Rng& rng,
                                    std::uint64_t cap = kDefaultPopulationCap) {
  const double t1 = standard_exponential(rng);
  const double alpha = delay.alpha();
  std::vector<double> pending{0.0};
  std::uint64_t population = 1;
  auto admit = [&](double birth) {
    if (++population > cap) throw PopulationCapExceeded(cap);
    pending.push_back(birth);
    return true;
  };
  if (alpha > 0.0)
    detail::poisson_arrivals([&](double t) { return alpha * delay.big_h(t); },
                            [&](double t) { return alpha * delay.hazard(t); }, t1, rng, admit);
  while (!pending.empty()) {
    const double birth = pending.back();
    pending.pop_back();
    detail::poisson_arrivals([&](double a) { return delay.big_h(a); }, [&](double a) { return delay.hazard(a); },
                             t1 - birth, rng,
                             [&](double age) { return admit(birth + age); });
  }
  return population;
}

/// A sampled genealogical tree, vertices relabelled in birth order.
struct SampledTree {
  Tree tree;
  std::vector<double> birth;  // indexed by vertex, birth[0] unused
};

namespace detail {

inline SampledTree relabel_by_birth(const std::vector<Vertex>& parent0, const std::vector<double>& birth0) {
  // parent0 / birth0 are 0-indexed with individual 0 the root.
  const std::size_t n = parent0.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return birth0[a] < birth0[b]; });
  std::vector<Vertex> label(n);
  for (std::size_t k = 0; k < n; ++k) label[order[k]] = static_cast<Vertex>(k + 1);
  std::vector<Vertex> parents(n + 1, 0);
  std::vector<double> birth(n + 1, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t who = order[k];
    parents[k + 1] = label[parent0[who]];
    birth[k + 1] = birth0[who];
  }
  return {Tree(std::move(parents)), std::move(birth)};
}

/// BP_Mac run to time t1, stopping early once the population exceeds `limit`.
template <class Rng>
std::optional<SampledTree> grow_memory_bp(const DelayDistribution& delay, Rng& rng, std::uint64_t limit, double t1) {
  std::vector<Vertex> parent{0};
  std::vector<double> birth{0.0};
  for (std::size_t who = 0; who < parent.size(); ++who) {
    const double born = birth[who];
    MemoryHazard hazard(delay);
    while (auto gap = hazard.solve_within(standard_exponential(rng), t1 - born - hazard.last())) {
      hazard.push(*gap);
      if (parent.size() >= limit) return std::nullopt;
      parent.push_back(static_cast<Vertex>(who));
      birth.push_back(born + hazard.last());
    }
  }
  return relabel_by_birth(parent, birth);
}

struct EdgeEvent {
  double time;
  std::uint32_t edge;
  friend bool operator>(const EdgeEvent& a, const EdgeEvent& b) { return a.time > b.time; }
};

/// BP_Mac,e run to time t1; returns the descendants of the initial child.
template <class Rng>
std::optional<SampledTree> grow_edge_bp(const DelayDistribution& delay, Rng& rng, std::uint64_t limit, double t1) {
  const double to_parent = 1.0 / (2.0 + delay.alpha());
  struct Edge {
    Vertex child, parent;  // vertex 0 is the initial parent, outside the fringe
    double birth;
    double level;  // R(age) consumed so far
    double age;    // age at the last reproduction
  };
  std::vector<Edge> edges{{1, 0, 0.0, 0.0, 0.0}};
  std::vector<Vertex> parents{0, 0};  // 1-indexed, vertex 1 = initial child
  std::vector<double> births{0.0, 0.0};
  std::priority_queue<EdgeEvent, std::vector<EdgeEvent>, std::greater<>> events;

  auto schedule = [&](std::uint32_t id) {
    Edge& e = edges[id];
    const double horizon = t1 - e.birth;
    const double target = e.level + standard_exponential(rng);
    if (!(horizon > 0.0) || delay.r_cumulative(horizon) < target) return;
    const double age =
        invert_convex([&](double a) { return delay.r_cumulative(a); },
                      [&](double a) { return delay.rate_integral(a); }, target, e.age, horizon);
    e.level = target;
    e.age = age;
    events.push({e.birth + age, id});
  };

  schedule(0);
  while (!events.empty()) {
    const EdgeEvent ev = events.top();
    events.pop();
    const Edge e = edges[ev.edge];
    const Vertex target = bernoulli_trial(rng, to_parent) ? e.parent : e.child;
    if (target != 0) {
      if (parents.size() > limit) return std::nullopt;
      const auto fresh = static_cast<Vertex>(parents.size());
      parents.push_back(target);
      births.push_back(ev.time);
      edges.push_back({fresh, target, ev.time, 0.0, 0.0});
      schedule(static_cast<std::uint32_t>(edges.size() - 1));
    }
    schedule(ev.edge);
  }
  return SampledTree{Tree(std::move(parents)), std::move(births)};
}

/// The same runs with T1 ~ Exp(1) drawn first.
template <class Rng>
std::optional<SampledTree> grow_memory_bp(const DelayDistribution& delay, Rng& rng, std::uint64_t limit) {
  const double t1 = standard_exponential(rng);
  return grow_memory_bp(delay, rng, limit, t1);
}

template <class Rng>
std::optional<SampledTree> grow_edge_bp(const DelayDistribution& delay, Rng& rng, std::uint64_t limit) {
  const double t1 = standard_exponential(rng);
  return grow_edge_bp(delay, rng, limit, t1);
}

}  // namespace detail

/// Genealogy of BP_Mac at T1 (each individual runs its own memory process).
template <class Rng>
SampledTree sample_fringe(const DelayDistribution& delay, Rng& rng, std::uint64_t cap = kDefaultPopulationCap) {
  if (cap < 1) throw std::invalid_argument("sample_fringe: cap must be >= 1");
  auto tree = detail::grow_memory_bp(delay, rng, cap);
  if (!tree) throw PopulationCapExceeded(cap);
  return std::move(*tree);
}

/// Descendants of the initial child in the edge branching process at T1.
template <class Rng>
SampledTree sample_edge_bp_fringe(const DelayDistribution& delay, Rng& rng,
                                  std::uint64_t cap = kDefaultPopulationCap) {
  if (cap < 1) throw std::invalid_argument("sample_edge_bp_fringe: cap must be >= 1");
  auto tree = detail::grow_edge_bp(delay, rng, cap);
  if (!tree) throw PopulationCapExceeded(cap);
  return std::move(*tree);
}

}  // namespace delaynet
