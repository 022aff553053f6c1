#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "delaynet/treegen.hpp"

namespace delaynet::testing {

/// Choice source that replays a tape of branch indices and extends it with
/// branch 0 on first visit. Advancing the tape like an odometer visits every
/// path of a growth run exactly once.
class EnumeratingChoices {
 public:
  struct Entry {
    std::uint64_t branch;
    std::uint64_t arity;
  };

  void begin_path() {
    pos_ = 0;
    weight_ = 1.0;
  }

  double weight() const { return weight_; }

  double delay(const DelayDistribution& d) {
    const auto atoms = d.xi_atoms();
    if (!atoms) throw std::invalid_argument("enumeration needs a purely atomic delay");
    const auto i = take(atoms->size());
    weight_ *= (*atoms)[i].second;
    return (*atoms)[i].first;
  }

  bool bernoulli(double p) {
    const bool yes = take(2) == 0;
    weight_ *= yes ? p : 1.0 - p;
    return yes;
  }

  std::uint64_t index(std::uint64_t k) {
    weight_ /= static_cast<double>(k);
    return take(k);
  }

  /// Move to the next path; false once every path has been visited.
  bool advance() {
    tape_.resize(pos_);
    while (!tape_.empty() && tape_.back().branch + 1 == tape_.back().arity) tape_.pop_back();
    if (tape_.empty()) return false;
    ++tape_.back().branch;
    return true;
  }

 private:
  std::uint64_t take(std::uint64_t arity) {
    if (pos_ == tape_.size()) tape_.push_back({0, arity});
    if (tape_[pos_].arity != arity) throw std::logic_error("tape arity changed on replay");
    return tape_[pos_++].branch;
  }

  std::vector<Entry> tape_;
  std::size_t pos_ = 0;
  double weight_ = 1.0;
};

using TreeLaw = std::map<std::vector<Vertex>, double>;

/// Exact law of T(n) from running grow_with over every choice path.
inline TreeLaw enumerate_growth(const GrowthConfig& config) {
  TreeLaw law;
  EnumeratingChoices choices;
  do {
    choices.begin_path();
    const Tree tree = grow_with(config, choices);
    if (choices.weight() > 0.0) {
      const auto p = tree.parents();
      law[{p.begin(), p.end()}] += choices.weight();
    }
  } while (choices.advance());
  return law;
}

/// Exact law of T(n) computed from the attachment rule itself: for each xi
/// atom, m = floor(n - n xi) by plain arithmetic, then P(v) proportional to
/// deg(v, m) + alpha over the snapshot, or the root when m <= 1.
inline TreeLaw brute_force_law(Vertex n_final, double alpha, const std::vector<std::pair<double, double>>& xi_atoms) {
  TreeLaw current{{{0, 0, 1}, 1.0}};
  for (Vertex n = 2; n < n_final; ++n) {
    TreeLaw next;
    for (const auto& [parents, prob] : current) {
      std::vector<double> target(n + 1, 0.0);
      for (const auto& [xi, w] : xi_atoms) {
        const auto m = static_cast<Vertex>(std::floor(static_cast<double>(n) - static_cast<double>(n) * xi));
        if (m <= 1) {
          target[1] += w;
          continue;
        }
        std::vector<double> weight(m + 1, alpha);
        for (Vertex i = 2; i <= m; ++i) {
          weight[i] += 1.0;
          weight[parents[i]] += 1.0;
        }
        double total = 0.0;
        for (Vertex v = 1; v <= m; ++v) total += weight[v];
        for (Vertex v = 1; v <= m; ++v) target[v] += w * weight[v] / total;
      }
      for (Vertex v = 1; v <= n; ++v) {
        if (target[v] == 0.0) continue;
        auto grown = parents;
        grown.push_back(v);
        next[grown] += prob * target[v];
      }
    }
    current = std::move(next);
  }
  return current;
}

inline double max_deviation(const TreeLaw& a, const TreeLaw& b) {
  double worst = 0.0;
  for (const auto& [t, p] : a) {
    auto it = b.find(t);
    worst = std::max(worst, std::abs(p - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [t, p] : b)
    if (!a.contains(t)) worst = std::max(worst, p);
  return worst;
}

}  // namespace delaynet::testing
