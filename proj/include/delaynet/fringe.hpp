#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delaynet/limitbp.hpp"
#include "delaynet/tree.hpp"

namespace delaynet {

/// Root-preserving isomorphism class of a rooted tree: '(' followed by the
/// sorted codes of the children and ')'.
struct CanonicalCode {
  std::string bytes;
  Vertex size = 0;

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * bytes.size());
    for (unsigned char c : bytes) {
      out.push_back(digits[c >> 4]);
      out.push_back(digits[c & 15]);
    }
    return out;
  }

  friend bool operator==(const CanonicalCode&, const CanonicalCode&) = default;
  friend auto operator<=>(const CanonicalCode& a, const CanonicalCode& b) { return a.bytes <=> b.bytes; }
};

/// Sets `code[v]` for every v whose subtree has at most `size_cap` vertices;
/// larger subtrees are left empty. Children come after parents, so one
/// reverse sweep suffices.
inline void canonical_codes(const Tree& tree, const ChildIndex& kids, Vertex size_cap,
                            std::vector<std::string>& code, std::vector<Vertex>& subtree_size) {
  const Vertex n = tree.size();
  subtree_size.assign(n + 1, 1);
  for (Vertex v = n; v >= 2; --v) subtree_size[tree.parent(v)] += subtree_size[v];
  code.assign(n + 1, {});
  std::vector<const std::string*> parts;
  for (Vertex v = n; v >= 1; --v) {
    if (subtree_size[v] > size_cap) continue;
    parts.clear();
    for (Vertex c : kids.children(v)) parts.push_back(&code[c]);
    std::sort(parts.begin(), parts.end(), [](const std::string* a, const std::string* b) { return *a < *b; });
    std::string& out = code[v];
    out.reserve(2 * subtree_size[v]);
    out.push_back('(');
    for (const std::string* p : parts) out += *p;
    out.push_back(')');
  }
}

inline CanonicalCode canonical_code(const Tree& tree) {
  ChildIndex kids(tree);
  std::vector<std::string> code;
  std::vector<Vertex> sizes;
  canonical_codes(tree, kids, tree.size(), code, sizes);
  return {code[1], tree.size()};
}

/// A subtree with its vertices relabelled 1..k in birth order; `original`
/// maps new labels back (original[0] unused).
struct Subtree {
  Tree tree;
  std::vector<Vertex> original;
};

namespace detail {

/// Vertices of the subtree of `root` (optionally skipping the branch at
/// `excluded`), relabelled in increasing original order.
inline Subtree collect_subtree(const Tree& tree, const ChildIndex& kids, Vertex root, Vertex excluded = 0) {
  std::vector<Vertex> members{root};
  for (std::size_t i = 0; i < members.size(); ++i)
    for (Vertex c : kids.children(members[i]))
      if (c != excluded) members.push_back(c);
  std::sort(members.begin(), members.end());
  std::map<Vertex, Vertex> label;
  for (std::size_t i = 0; i < members.size(); ++i) label[members[i]] = static_cast<Vertex>(i + 1);
  std::vector<Vertex> parents(members.size() + 1, 0);
  for (std::size_t i = 1; i < members.size(); ++i) parents[i + 1] = label.at(tree.parent(members[i]));
  std::vector<Vertex> original{0};
  original.insert(original.end(), members.begin(), members.end());
  return {Tree(std::move(parents)), std::move(original)};
}

}  // namespace detail

/// f_0(v): the descendants of v, rooted at v.
inline Subtree fringe_at(const Tree& tree, Vertex v) {
  if (v < 1 || v > tree.size()) throw std::out_of_range("fringe_at: vertex out of range");
  return detail::collect_subtree(tree, ChildIndex(tree), v);
}

/// (f_0, ..., f_k): f_i is rooted at the i-th ancestor of v and excludes the
/// branch through the (i-1)-st.
inline std::vector<Subtree> extended_fringe(const Tree& tree, Vertex v, Vertex k) {
  if (v < 1 || v > tree.size()) throw std::out_of_range("extended_fringe: vertex out of range");
  ChildIndex kids(tree);
  std::vector<Subtree> out;
  out.push_back(detail::collect_subtree(tree, kids, v));
  Vertex below = v;
  for (Vertex i = 1; i <= k; ++i) {
    const Vertex up = tree.parent(below);
    if (up == 0) throw std::invalid_argument("extended_fringe: vertex closer than k to the root");
    out.push_back(detail::collect_subtree(tree, kids, up, below));
    below = up;
  }
  return out;
}

class FringeHistogram {
 public:
  explicit FringeHistogram(Vertex size_cap = 6) : size_cap_(size_cap) {
    if (size_cap < 1) throw std::invalid_argument("fringe histogram: size cap must be >= 1");
  }

  Vertex size_cap() const noexcept { return size_cap_; }
  std::uint64_t samples() const noexcept { return total_; }
  std::uint64_t overflow_count() const noexcept { return overflow_; }
  const std::map<std::string, std::uint64_t>& counts() const noexcept { return counts_; }

  void add(const std::string& code) {
    ++counts_[code];
    ++total_;
  }
  void add_overflow() {
    ++overflow_;
    ++total_;
  }

  double probability(const std::string& code) const {
    auto it = counts_.find(code);
    return it == counts_.end() || total_ == 0 ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total_);
  }
  double overflow() const { return total_ == 0 ? 0.0 : static_cast<double>(overflow_) / static_cast<double>(total_); }

  void merge(const FringeHistogram& other) {
    if (other.size_cap_ != size_cap_) throw std::invalid_argument("fringe histogram: size cap mismatch");
    for (const auto& [code, c] : other.counts_) counts_[code] += c;
    overflow_ += other.overflow_;
    total_ += other.total_;
  }

  /// CSV `code_hex,probability`, overflow row labelled OVERFLOW.
  void write_csv(std::ostream& out) const {
    out << "code_hex,probability\n";
    char buf[64];
    for (const auto& [code, c] : counts_) {
      std::snprintf(buf, sizeof buf, "%.12g", probability(code));
      out << CanonicalCode{code, 0}.hex() << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "%.12g", overflow());
    out << "OVERFLOW," << buf << '\n';
  }

 private:
  Vertex size_cap_;
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t overflow_ = 0;
  std::uint64_t total_ = 0;
};

/// Fringe law at a uniform vertex of `tree`.
inline FringeHistogram empirical_fringe(const Tree& tree, Vertex size_cap) {
  FringeHistogram hist(size_cap);
  ChildIndex kids(tree);
  std::vector<std::string> code;
  std::vector<Vertex> sizes;
  canonical_codes(tree, kids, size_cap, code, sizes);
  for (Vertex v = 1; v <= tree.size(); ++v) {
    if (sizes[v] > size_cap)
      hist.add_overflow();
    else
      hist.add(code[v]);
  }
  return hist;
}

/// Histogram of `reps` draws of the limit fringe (memory route). Draws are
/// abandoned as overflow as soon as they exceed the size cap.
template <class Rng>
FringeHistogram limit_fringe_histogram(const DelayDistribution& delay, std::uint64_t reps, Vertex size_cap,
                                       Rng& rng) {
  if (reps < 1) throw std::invalid_argument("limit_fringe_histogram: reps must be >= 1");
  FringeHistogram hist(size_cap);
  for (std::uint64_t r = 0; r < reps; ++r) {
    auto sample = detail::grow_memory_bp(delay, rng, size_cap);
    if (!sample)
      hist.add_overflow();
    else
      hist.add(canonical_code(sample->tree).bytes);
  }
  return hist;
}

/// Half the L1 distance over the union of codes plus the overflow bucket.
inline double tv_distance(const FringeHistogram& a, const FringeHistogram& b) {
  if (a.size_cap() != b.size_cap()) throw std::invalid_argument("tv_distance: size cap mismatch");
  double sum = std::abs(a.overflow() - b.overflow());
  for (const auto& [code, c] : a.counts()) sum += std::abs(a.probability(code) - b.probability(code));
  for (const auto& [code, c] : b.counts())
    if (!a.counts().contains(code)) sum += b.probability(code);
  return 0.5 * sum;
}

}  // namespace delaynet
