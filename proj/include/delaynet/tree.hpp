#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace delaynet {

using Vertex = std::uint32_t;

/// Rooted tree on vertices 1..n in birth order. Vertex i >= 2 hangs from
/// parent(i) < i; edge e_j joins j + 1 to parent(j + 1). Edges never change
/// once added, so the first m - 1 edges are exactly the tree at size m.
class Tree {
 public:
  Tree() : parent_{0, 0} {}

  /// `parents[i]` for i in [2, n]; entries 0 and 1 are ignored.
  explicit Tree(std::vector<Vertex> parents) : parent_(std::move(parents)) {
    if (parent_.size() < 2) throw std::invalid_argument("tree needs at least one vertex");
    parent_[0] = 0;
    parent_[1] = 0;
    for (std::size_t i = 2; i < parent_.size(); ++i)
      if (parent_[i] < 1 || parent_[i] >= i)
        throw std::invalid_argument("parent of vertex " + std::to_string(i) + " must lie in [1, i-1]");
  }

  static Tree single_vertex() { return Tree(); }

  Vertex size() const noexcept { return static_cast<Vertex>(parent_.size() - 1); }
  Vertex edge_count() const noexcept { return size() - 1; }

  Vertex parent(Vertex v) const { return parent_.at(v); }

  /// Edge e_j as (child, parent), j in [1, n - 1].
  std::pair<Vertex, Vertex> edge(Vertex j) const { return {j + 1, parent_[j + 1]}; }

  void reserve(std::size_t n) { parent_.reserve(n + 1); }

  /// Append vertex size()+1 under `p`.
  Vertex attach(Vertex p) {
    if (p < 1 || p > size()) throw std::invalid_argument("attach target out of range");
    parent_.push_back(p);
    return size();
  }

  /// parent array indexed by vertex (index 0 unused, parent of root is 0).
  std::span<const Vertex> parents() const noexcept { return parent_; }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<Vertex> parent_;
};

/// Children of every vertex in birth order (CSR layout).
class ChildIndex {
 public:
  explicit ChildIndex(const Tree& tree) : offsets_(tree.size() + 2, 0) {
    const Vertex n = tree.size();
    for (Vertex i = 2; i <= n; ++i) ++offsets_[tree.parent(i) + 1];
    for (Vertex v = 1; v <= n + 1; ++v) offsets_[v] += offsets_[v - 1];
    children_.resize(n > 0 ? n - 1 : 0);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (Vertex i = 2; i <= n; ++i) children_[fill[tree.parent(i)]++] = i;
  }

  std::span<const Vertex> children(Vertex v) const {
    return std::span<const Vertex>(children_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
  }

  /// Number of children of v among vertices 1..m.
  Vertex children_at(Vertex v, Vertex m) const {
    const auto c = children(v);
    return static_cast<Vertex>(std::upper_bound(c.begin(), c.end(), m) - c.begin());
  }

  /// Graph degree of v in the snapshot T(m); requires v <= m.
  Vertex degree_at(Vertex v, Vertex m) const {
    if (v < 1 || v > m) throw std::out_of_range("degree_at: need 1 <= v <= m");
    return children_at(v, m) + (v >= 2 ? 1 : 0);
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Vertex> children_;
};

/// Write `child parent` per edge in birth order. With `birth` supplied, a
/// third column carries the child's birth time (12 significant digits).
inline void write_edge_list(std::ostream& out, const Tree& tree,
                            std::span<const double> birth = {}) {
  char buf[64];
  for (Vertex child = 2; child <= tree.size(); ++child) {
    out << child << ' ' << tree.parent(child);
    if (!birth.empty()) {
      std::snprintf(buf, sizeof buf, "%.12g", birth[child]);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

/// Inverse of write_edge_list; '#' lines and a third column are skipped.
inline Tree read_edge_list(std::istream& in) {
  std::vector<Vertex> parents{0, 0};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    unsigned long child = 0, parent = 0;
    if (!(fields >> child >> parent))
      throw std::runtime_error("edge list line " + std::to_string(lineno) + ": expected 'child parent'");
    if (child != parents.size())
      throw std::runtime_error("edge list line " + std::to_string(lineno) + ": edges out of birth order");
    parents.push_back(static_cast<Vertex>(parent));
  }
  return Tree(std::move(parents));
}

}  // namespace delaynet
