#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace delaynet {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
/// Points in `breaks` falling inside (a, b) split the range so that jumps of
/// f at known locations never sit inside a panel.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-10,
                 std::span<const double> breaks = {}, int max_depth = 50) {
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a};
  for (double c : breaks)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double panel_tol = tol / static_cast<double>(cuts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // Nudge the endpoints inward so one-sided limits are used at the cuts.
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    const double eps = 1e-14 * std::max(1.0, std::abs(hi));
    const double la = (i == 0) ? lo : std::nextafter(lo, hi);
    const double lb = (i + 2 == cuts.size()) ? hi : hi - eps;
    const double fa = f(la);
    const double fb = f(lb);
    const double fm = f(0.5 * (la + lb));
    const double whole = (lb - la) / 6.0 * (fa + 4.0 * fm + fb);
    total += detail::simpson_step(f, la, lb, fa, fm, fb, whole, panel_tol, max_depth);
  }
  return total;
}

}  // namespace delaynet
