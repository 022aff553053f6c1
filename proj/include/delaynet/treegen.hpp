#pragma once

// Growth of the delayed preferential attachment tree with attachment weight
// deg + alpha, and its alpha = 0 edge-copying form.
//
// At size n an arriving vertex draws a delay xi and sees the snapshot T(m),
// m = floor(n - n xi). In T(m) the total weight is 2(m - 1) + alpha m. The
// degree part is sampled by picking one of the m - 1 edges present at size m
// uniformly and then one of its two endpoints; the alpha part by picking a
// vertex of [m] uniformly. Snapshots with m <= 1 attach to the root.

#include <concepts>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "delaynet/delays.hpp"
#include "delaynet/rng.hpp"
#include "delaynet/tree.hpp"

namespace delaynet {

enum class GrowthMode { Direct, Copying };

struct GrowthConfig {
  Vertex n = 2;
  double alpha = 0.0;
  DelayDistribution delay{DelaySpec{PointMass{0.0}}, 0.0};
  std::uint64_t seed = 0;
  GrowthMode mode = GrowthMode::Direct;
  /// Copying mode only: use the edge-range of the literal copying pmf,
  /// floor(E(1 - xi)) of the E current edges, falling back to e_1.
  bool literal_pjss = false;
  std::vector<Vertex> checkpoints;
};

/// Random choices made by one attachment step. RngChoices draws them; tests
/// substitute an enumerating source to walk every branch of the same code.
template <class S>
concept ChoiceSource = requires(S& s, const DelayDistribution& d, double p, std::uint64_t k) {
  { s.delay(d) } -> std::convertible_to<double>;
  { s.bernoulli(p) } -> std::convertible_to<bool>;
  { s.index(k) } -> std::convertible_to<std::uint64_t>;
};

template <class Rng>
class RngChoices {
 public:
  explicit RngChoices(Rng& rng) : rng_(&rng) {}
  double delay(const DelayDistribution& d) { return d.sample(*rng_); }
  bool bernoulli(double p) { return bernoulli_trial(*rng_, p); }
  std::uint64_t index(std::uint64_t k) { return uniform_index(*rng_, k); }

 private:
  Rng* rng_;
};

/// floor(n - n xi), computed exactly for a binary64 xi in [0, 1].
inline std::uint64_t snapshot_size(std::uint64_t n, double xi) {
  if (!(xi > 0.0)) return n;
  if (xi >= 1.0) return 0;
  int exponent = 0;
  const double mantissa = std::frexp(xi, &exponent);  // xi = mantissa * 2^exponent
  const auto digits = static_cast<std::uint64_t>(std::ldexp(mantissa, 53));
  // n xi = n * digits / 2^shift, shift >= 53
  const int shift = 53 - exponent;
  if (shift >= 120) return n - 1;  // 0 < n xi < 1
  const unsigned __int128 product = static_cast<unsigned __int128>(n) * digits;
  const unsigned __int128 one = static_cast<unsigned __int128>(1) << shift;
  const auto ceiling = static_cast<std::uint64_t>((product + one - 1) >> shift);
  return n - ceiling;
}

inline std::pair<Vertex, Vertex> edge_endpoints(std::span<const Vertex> parents, std::uint64_t j) {
  const auto child = static_cast<Vertex>(j + 1);
  return {child, parents[child]};
}

/// Target for vertex n + 1 under weight deg(v, m) + alpha.
template <ChoiceSource S>
Vertex attach_target(std::span<const Vertex> parents, Vertex n, const DelayDistribution& delay,
                     double alpha, S& choices) {
  const double xi = choices.delay(delay);
  const std::uint64_t m = snapshot_size(n, xi);
  if (m <= 1) return 1;
  const std::uint64_t edges = m - 1;
  const bool by_edge =
      alpha == 0.0 || choices.bernoulli(2.0 * static_cast<double>(edges) /
                                        (2.0 * static_cast<double>(edges) + alpha * static_cast<double>(m)));
  if (!by_edge) return static_cast<Vertex>(1 + choices.index(m));
  const auto [child, parent] = edge_endpoints(parents, 1 + choices.index(edges));
  return choices.index(2) == 0 ? child : parent;
}

/// Target for vertex n + 1 in the copying construction (alpha = 0).
template <ChoiceSource S>
Vertex copying_target(std::span<const Vertex> parents, Vertex n, const DelayDistribution& delay,
                      bool literal_pjss, S& choices) {
  const double xi = choices.delay(delay);
  std::uint64_t j = 1;
  if (literal_pjss) {
    const std::uint64_t visible = snapshot_size(n - 1, xi);
    if (visible >= 1) j = 1 + choices.index(visible);
  } else {
    const std::uint64_t m = snapshot_size(n, xi);
    if (m <= 1) return 1;
    j = 1 + choices.index(m - 1);
  }
  const auto [child, parent] = edge_endpoints(parents, j);
  return choices.index(2) == 0 ? child : parent;
}

namespace detail {

inline void check_growth(const GrowthConfig& config) {
  if (config.n < 2) throw std::invalid_argument("grow: n must be >= 2");
  if (!(config.alpha >= 0.0)) throw std::invalid_argument("grow: alpha must be >= 0");
  if (config.mode == GrowthMode::Copying && config.alpha != 0.0)
    throw std::invalid_argument("grow: copying mode requires alpha = 0");
}

}  // namespace detail

/// Grow T(config.n) from T(2) drawing every random choice from `choices`.
template <ChoiceSource S>
Tree grow_with(const GrowthConfig& config, S& choices) {
  detail::check_growth(config);
  std::vector<Vertex> parents;
  parents.reserve(config.n + 1);
  parents.assign({0, 0, 1});
  for (Vertex n = 2; n < config.n; ++n)
    parents.push_back(config.mode == GrowthMode::Copying
                          ? copying_target(parents, n, config.delay, config.literal_pjss, choices)
                          : attach_target(parents, n, config.delay, config.alpha, choices));
  return Tree(std::move(parents));
}

/// Grow T(config.n) according to config.mode, seeded by config.seed.
inline Tree grow(const GrowthConfig& config) {
  Engine rng(config.seed);
  RngChoices choices(rng);
  return grow_with(config, choices);
}

inline Tree grow_direct(GrowthConfig config) {
  config.mode = GrowthMode::Direct;
  return grow(config);
}

inline Tree grow_copying(GrowthConfig config) {
  config.mode = GrowthMode::Copying;
  return grow(config);
}

/// Histogram k -> N_k(m) of snapshot degrees.
struct DegreeCounts {
  Vertex n = 0;
  std::map<Vertex, std::uint64_t> histogram;

  std::uint64_t count(Vertex k) const {
    auto it = histogram.find(k);
    return it == histogram.end() ? 0 : it->second;
  }
};

inline DegreeCounts degree_counts(const Tree& tree, Vertex m) {
  if (m < 2 || m > tree.size()) throw std::out_of_range("degree_counts: need 2 <= m <= n");
  std::vector<Vertex> degree(m + 1, 1);
  degree[1] = 0;
  for (Vertex i = 2; i <= m; ++i) ++degree[tree.parent(i)];
  DegreeCounts counts{m, {}};
  for (Vertex v = 1; v <= m; ++v) ++counts.histogram[degree[v]];
  return counts;
}

inline DegreeCounts degree_counts(const Tree& tree) { return degree_counts(tree, tree.size()); }

/// Snapshot degrees deg(v, n) as a flat sample, one entry per vertex.
inline std::vector<Vertex> degree_sequence(const Tree& tree) {
  const Vertex n = tree.size();
  std::vector<Vertex> degree(n + 1, 1);
  degree[0] = 0;
  degree[1] = 0;
  for (Vertex i = 2; i <= n; ++i) ++degree[tree.parent(i)];
  return {degree.begin() + 1, degree.end()};
}

/// (m, M(root, m)) for each checkpoint, M = number of children of vertex 1.
inline std::vector<std::pair<Vertex, Vertex>> root_degree_trajectory(const Tree& tree,
                                                                     std::span<const Vertex> checkpoints) {
  std::vector<std::pair<Vertex, Vertex>> out;
  out.reserve(checkpoints.size());
  Vertex seen = 1;
  Vertex root_children = 0;
  Vertex previous = 0;
  for (Vertex m : checkpoints) {
    if (m < previous) throw std::invalid_argument("root_degree_trajectory: checkpoints must be sorted");
    if (m > tree.size()) throw std::out_of_range("root_degree_trajectory: checkpoint beyond tree size");
    previous = m;
    while (seen < m) {
      ++seen;
      if (tree.parent(seen) == 1) ++root_children;
    }
    out.emplace_back(m, root_children);
  }
  return out;
}

}  // namespace delaynet
