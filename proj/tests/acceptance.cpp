// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "delaynet/delaynet.hpp"
#include "enumeration.hpp"

using namespace delaynet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

DelayDistribution make(const std::string& text, double alpha = 0.0) { return build(parse_delay(text), alpha); }

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Tree grow_tree(Vertex n, const std::string& delay, double alpha, std::uint64_t seed) {
  GrowthConfig c;
  c.n = n;
  c.alpha = alpha;
  c.delay = make(delay, alpha);
  c.seed = seed;
  return grow(c);
}

std::map<std::uint64_t, double> degree_pmf(const Tree& tree) {
  std::map<std::uint64_t, double> pmf;
  for (auto [k, count] : degree_counts(tree).histogram) pmf[k] = static_cast<double>(count) / tree.size();
  return pmf;
}

Verdict criterion_1() {
  Verdict v;
  const auto t0 = Clock::now();
  const Tree tree = grow_tree(100000, "point(0)", 0.0, stream_seed(1, 0));
  const double tv = tv_to_reference(degree_pmf(tree), [](std::uint64_t k) { return no_delay_pmf(0.0, k); }, 1000000);
  const double elapsed = seconds_since(t0);
  v.check(tv <= 0.01, "TV " + fmt("%.4f", tv) + " <= 0.01");
  v.check(elapsed < 5.0, "runtime " + fmt("%.2f", elapsed) + " s < 5 s");
  return v;
}

Verdict criterion_2() {
  Verdict v;
  for (double p : {0.3, 0.5, 1.0}) {
    const auto d = make("bernoulli(p=" + fmt("%g", p) + ")");
    auto rng = make_stream(2, static_cast<std::uint64_t>(p * 10));
    std::vector<std::uint64_t> draws(1000000);
    for (auto& x : draws) x = sample_degree_hazard(d, rng);
    auto reference = [p](std::uint64_t k) { return bernoulli_pmf(p, k).pmf; };
    const double tv_limit = tv_to_reference(empirical_pmf<std::uint64_t>(draws), reference, 1000000);
    const Tree tree = grow_tree(100000, "bernoulli(p=" + fmt("%g", p) + ")", 0.0, stream_seed(2, 100 + p * 10));
    const double tv_tree = tv_to_reference(degree_pmf(tree), reference, 1000000);
    v.check(tv_limit <= 0.005, "p=" + fmt("%g", p) + " sampler TV " + fmt("%.4f", tv_limit) + " <= 0.005");
    v.check(tv_tree <= 0.02, "tree TV " + fmt("%.4f", tv_tree) + " <= 0.02");
  }
  return v;
}

struct DualityCase {
  double alpha;
  std::string delay;
};

const std::vector<DualityCase> kDualityCases = {{0.0, "bernoulli(p=0.5)"}, {0.0, "unifpow(theta=1)"},
                                                {0.0, "unifpow(theta=2)"}, {1.0, "bernoulli(p=0.5)"},
                                                {1.0, "unifpow(theta=1)"}, {1.0, "unifpow(theta=2)"}};

// Criterion 4 reuses the edge-route degree draws of criterion 3.
std::vector<std::vector<double>> edge_degree_draws;

Verdict criterion_3() {
  Verdict v;
  edge_degree_draws.clear();
  const std::size_t draws = 100000;
  for (std::size_t c = 0; c < kDualityCases.size(); ++c) {
    const auto& [alpha, delay] = kDualityCases[c];
    const auto d = make(delay, alpha);
    auto rng_a = make_stream(3, 4 * c), rng_b = make_stream(3, 4 * c + 1);
    auto rng_c = make_stream(3, 4 * c + 2), rng_d = make_stream(3, 4 * c + 3);
    std::vector<double> hazard(draws), edge(draws), memory_size(draws), edge_size(draws);
    for (auto& x : hazard) x = static_cast<double>(sample_degree_hazard(d, rng_a));
    for (auto& x : edge) x = static_cast<double>(sample_edge_bp_degree(d, rng_b));
    for (auto& x : memory_size) x = sample_fringe(d, rng_c).tree.size();
    for (auto& x : edge_size) x = sample_edge_bp_fringe(d, rng_d).tree.size();
    const double p_degree = ks_two_sample(hazard, edge).p_value;
    const double p_size = ks_two_sample(memory_size, edge_size).p_value;
    const std::string tag = "a=" + fmt("%g", alpha) + " " + delay;
    v.check(p_degree >= 0.01, tag + " degree p " + fmt("%.3f", p_degree));
    v.check(p_size >= 0.01, "size p " + fmt("%.3f", p_size));
    edge_degree_draws.push_back(std::move(edge));
  }
  return v;
}

Verdict criterion_4() {
  Verdict v;
  for (std::size_t c = 0; c < kDualityCases.size(); ++c) {
    const auto& [alpha, delay] = kDualityCases[c];
    const auto d = make(delay, alpha);
    const auto m = mean_and_error<double>(edge_degree_draws.at(c));
    const double expected = mean_degree(alpha, d.finite_mass()).mean;
    const double z = (m.mean - expected) / m.std_error;
    v.check(std::abs(z) <= 3.0, "a=" + fmt("%g", alpha) + " " + delay + " mean " + fmt("%.4f", m.mean) + " vs " +
                                    fmt("%.4f", expected) + " (z " + fmt("%.2f", z) + ")");
  }
  int inside = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Tree tree = grow_tree(100000, "bernoulli(p=0.5)", 0.0, stream_seed(4, s));
    const std::vector<Vertex> end = {100000};
    const double share = root_degree_trajectory(tree, end)[0].second / 100000.0;
    inside += share >= 0.45 && share <= 0.75;
  }
  v.check(inside >= 95, "root share in [0.45,0.75] for " + std::to_string(inside) + "/100 seeds");
  return v;
}

Verdict criterion_5() {
  Verdict v;
  for (double theta : {0.5, 1.0, 2.0}) {
    const double solved = solve_lambda(build(DelaySpec{UniformPower{theta}}, 0.0)).lambda;
    const double closed = lambda_exponential(theta, 0.0);
    v.check(std::abs(solved - closed) <= 1e-9, "theta=" + fmt("%g", theta) + " |diff| " + fmt("%.1e", std::abs(solved - closed)));
  }
  const double at_one = solve_lambda(make("unifpow(theta=1)")).lambda;
  v.check(fmt("%.10f", at_one) == fmt("%.10f", std::sqrt(0.5)), "theta=1 gives " + fmt("%.10f", at_one));
  return v;
}

Verdict criterion_6() {
  Verdict v;
  const auto t0 = Clock::now();
  for (double theta : {0.5, 1.0, 2.0}) {
    std::vector<double> degrees;
    const std::string delay = "unifpow(theta=" + fmt("%g", theta) + ")";
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto seq = degree_sequence(grow_tree(200000, delay, 0.0, stream_seed(6, 10 * theta + s)));
      degrees.insert(degrees.end(), seq.begin(), seq.end());
    }
    const double fit = estimate_tail_exponent(degrees).exponent;
    const double predicted = 2.0 / (1.0 - theta + std::sqrt(1.0 + theta * theta));
    v.check(std::abs(fit - predicted) <= 0.2,
            "theta=" + fmt("%g", theta) + " Hill " + fmt("%.3f", fit) + " vs " + fmt("%.3f", predicted));
  }
  const double elapsed = seconds_since(t0);
  v.check(elapsed < 120.0, "runtime " + fmt("%.1f", elapsed) + " s < 120 s");
  return v;
}

Verdict criterion_7() {
  Verdict v;
  const auto t0 = Clock::now();
  std::vector<std::pair<double, double>> samples;
  for (Vertex e = 12; e <= 18; ++e) {
    for (std::uint64_t s = 0; s < 30; ++s) {
      const Tree tree = grow_tree(1u << e, "unifpow(theta=1)", 0.0, stream_seed(7, 100 * e + s));
      const std::vector<Vertex> end = {1u << e};
      samples.emplace_back(1u << e, root_degree_trajectory(tree, end)[0].second);
    }
  }
  const auto fit = root_scaling_fit(samples);
  const double elapsed = seconds_since(t0);
  v.check(std::abs(fit.slope - std::sqrt(0.5)) <= 0.1, "slope " + fmt("%.4f", fit.slope) + " vs 0.7071");
  v.check(elapsed < 300.0, "runtime " + fmt("%.1f", elapsed) + " s < 300 s");
  return v;
}

Verdict criterion_8() {
  Verdict v;
  for (const char* delay : {"bernoulli(p=0.5)", "unifpow(theta=1)"}) {
    const auto d = make(delay);
    const auto empirical = empirical_fringe(grow_tree(100000, delay, 0.0, stream_seed(8, 0)), 6);
    auto rng_a = make_stream(8, 1), rng_b = make_stream(8, 2);
    const auto limit_a = limit_fringe_histogram(d, 100000, 6, rng_a);
    const auto limit_b = limit_fringe_histogram(d, 100000, 6, rng_b);
    const double tv = tv_distance(empirical, limit_a);
    const double self = tv_distance(limit_a, limit_b);
    v.check(tv <= 0.05, std::string(delay) + " TV " + fmt("%.4f", tv) + " <= 0.05");
    v.check(self <= 0.02, "self-TV " + fmt("%.4f", self) + " <= 0.02");
  }
  return v;
}

Verdict criterion_9() {
  Verdict v;
  double worst = 0.0;
  for (Vertex n = 2; n <= 5; ++n) {
    GrowthConfig c;
    c.n = n;
    c.delay = make("bernoulli(p=0.5)");
    const auto direct = testing::enumerate_growth(c);
    c.mode = GrowthMode::Copying;
    const auto copying = testing::enumerate_growth(c);
    const auto oracle = testing::brute_force_law(n, 0.0, *c.delay.xi_atoms());
    worst = std::max({worst, testing::max_deviation(direct, copying), testing::max_deviation(direct, oracle)});
  }
  v.check(worst <= 1e-12, "max deviation " + fmt("%.1e", worst) + " <= 1e-12");
  return v;
}

Verdict criterion_10(int argc, char** argv) {
  Verdict v;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    DelaySpec spec;
    switch (c % 4) {
      case 0:
        spec = {Bernoulli{0.05 + 0.95 * u(rng)}};
        break;
      case 1:
        spec = {UniformPower{0.1 + 4.0 * u(rng)}};
        break;
      case 2: {
        const double a = 0.9 * u(rng);
        spec = {BoundedInterval{a, a + (1.0 - a) * u(rng)}};
        break;
      }
      default: {
        Mixture m;
        const double w = 0.1 + 0.8 * u(rng);
        m.parts.push_back({w, DelaySpec{UniformPower{0.2 + 2.0 * u(rng)}}});
        m.parts.push_back({1.0 - w, DelaySpec{PointMass{0.6 * u(rng)}}});
        spec = {m};
      }
    }
    const auto d = build(spec, (c % 3 == 0) ? 0.0 : 2.0 * u(rng));
    MemoryHazard h(d);
    for (int i = 0, k = static_cast<int>(rng() % 6); i < k; ++i) h.push(2.0 * u(rng));
    for (double x : {0.05, 0.5, 1.3, 2.9}) {
      const double direct = memory_rate_direct(d, h.sigma(), x);
      worst = std::max(worst, std::abs(h.rate(x) - direct) / std::max(1.0, direct));
    }
  }
  v.check(worst <= 1e-8, "hazard identity worst " + fmt("%.1e", worst) + " <= 1e-8 over 200 configs");

  // The module property suites are the unit test binaries passed on the command line.
  int green = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string cmd = std::string(argv[i]) + " --gtest_brief=1 > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    green += ok;
    if (!ok) v.check(false, std::string(argv[i]) + " failed");
  }
  v.check(green == argc - 1 && argc > 1, std::to_string(green) + "/" + std::to_string(argc - 1) + " property suites green");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"no-delay baseline", criterion_1},
      {"bernoulli closed form", criterion_2},
      {"duality of samplers", criterion_3},
      {"mean degree and condensation", criterion_4},
      {"malthusian exponent", criterion_5},
      {"tail exponent", criterion_6},
      {"root-degree scaling", criterion_7},
      {"local weak limit", criterion_8},
      {"exact small-instance enumeration", criterion_9},
      {"property suites", [&] { return criterion_10(argc, argv); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.check(false, std::string("error: ") + e.what());
    }
    failures += !v.pass;
    std::printf("%s %2zu %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), seconds_since(t0),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
