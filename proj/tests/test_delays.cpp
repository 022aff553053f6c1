#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "delaynet/delays.hpp"
#include "delaynet/stats.hpp"

using namespace delaynet;

namespace {

const std::vector<std::string> kFamilies = {
    "point(0)",          "point(0.5)",        "bernoulli(p=0.3)",
    "bernoulli(p=1)",    "unifpow(theta=0.5)", "unifpow(theta=1)",
    "unifpow(theta=2)",  "interval(a=0.2,b=1.5)",
    "mix(0.7*point(0),0.3*point(1))",
    "mix(0.5*unifpow(theta=2),0.25*interval(a=0,b=1),0.25*bernoulli(p=0.5))",
};

DelayDistribution make(const std::string& text, double alpha = 0.0) { return build(parse_delay(text), alpha); }

// Independent route to R(t): Gauss-Kronrod over the continuous part of
// int_0^t (t - u) e^u dF_eta(u), plus the atoms.
double r_cumulative_oracle(const DelayDistribution& d, double t) {
  double total = 0.0;
  for (auto [loc, mass] : d.eta_atoms())
    if (loc <= t) total += mass * (t - loc) * std::exp(loc);
  if (t > 0) {
    auto f = [&](double u) { return (t - u) * std::exp(u) * d.eta_density(u); };
    std::vector<double> cuts{0.0};
    for (double c : d.breakpoints())
      if (c > 0 && c < t) cuts.push_back(c);
    cuts.push_back(t);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-13);
  }
  return total;
}

}  // namespace

TEST(ParseDelay, GrammarCases) {
  EXPECT_EQ(parse_delay("bernoulli(p=0.5)"), (DelaySpec{Bernoulli{0.5}}));
  EXPECT_EQ(parse_delay("unifpow(theta=2)"), (DelaySpec{UniformPower{2.0}}));
  EXPECT_EQ(parse_delay("interval(a=0.5, b=2)"), (DelaySpec{BoundedInterval{0.5, 2.0}}));
  const DelaySpec mix = parse_delay("mix(0.7*point(0),0.3*point(1))");
  const auto& parts = std::get<Mixture>(mix.family).parts;
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].weight, 0.7);
  EXPECT_EQ(parts[0].spec, (DelaySpec{PointMass{0.0}}));
  EXPECT_EQ(parts[1].weight, 0.3);
  EXPECT_EQ(parts[1].spec, (DelaySpec{PointMass{1.0}}));
}

TEST(ParseDelay, RoundTripsThroughFormat) {
  for (const auto& text : kFamilies) {
    const DelaySpec spec = parse_delay(text);
    EXPECT_EQ(parse_delay(format_delay(spec)), spec) << text;
  }
  // Awkward literals survive too.
  const DelaySpec odd = parse_delay("mix(0.1*unifpow(theta=3.3333333333333335),0.9*point(1e-3))");
  EXPECT_EQ(parse_delay(format_delay(odd)), odd);
}

TEST(ParseDelay, SyntaxErrorsCarryPosition) {
  try {
    parse_delay("bernoulli(q=0.5)");
    FAIL();
  } catch (const DelayParseError& e) {
    EXPECT_EQ(e.position(), 10u);
  }
  EXPECT_THROW(parse_delay("bernoulli(p=0.5"), DelayParseError);
  EXPECT_THROW(parse_delay("gamma(k=2)"), DelayParseError);
  EXPECT_THROW(parse_delay("point(0) extra"), DelayParseError);
  EXPECT_THROW(parse_delay("mix(0.5*point(0)"), DelayParseError);
  EXPECT_THROW(parse_delay("unifpow(theta=abc)"), DelayParseError);
}

TEST(ParseDelay, RangeErrors) {
  EXPECT_THROW(parse_delay("bernoulli(p=0)"), DelayParseError);
  EXPECT_THROW(parse_delay("bernoulli(p=1.5)"), DelayParseError);
  EXPECT_THROW(parse_delay("point(1.2)"), DelayParseError);
  EXPECT_THROW(parse_delay("unifpow(theta=-1)"), DelayParseError);
  EXPECT_THROW(parse_delay("interval(a=2,b=1)"), DelayParseError);
  EXPECT_THROW(parse_delay("mix(0.5*point(0),0.4*point(1))"), DelayParseError);
  EXPECT_THROW(parse_delay("mix(1.5*point(0),-0.5*point(1))"), DelayParseError);
}

TEST(Build, BernoulliRateIntegralIsConstant) {
  for (double p : {0.2, 0.5, 1.0}) {
    const auto d = build(DelaySpec{Bernoulli{p}}, 0.0);
    EXPECT_DOUBLE_EQ(d.q(), 1.0 - p);
    for (double x : {0.0, 0.3, 1.0, 7.5}) EXPECT_DOUBLE_EQ(d.rate_integral(x), p);
    EXPECT_NEAR(r_cumulative(d, 2.0), 2.0 * p, 1e-15);
  }
}

TEST(Build, UniformPowerMoment) {
  const auto d = make("unifpow(theta=2)");
  const Moment m = d.exp_moment(1.0);
  ASSERT_TRUE(m.finite);
  EXPECT_NEAR(m.value, 2.0, 1e-14);
  EXPECT_FALSE(d.exp_moment(2.0).finite);
  EXPECT_FALSE(d.exp_moment(3.0).finite);
}

TEST(Build, PointZeroIsNoDelay) {
  const auto d = make("point(0)");
  EXPECT_EQ(d.q(), 0.0);
  for (double x : {0.0, 1.0, 4.0}) EXPECT_DOUBLE_EQ(d.rate_integral(x), 1.0);
  for (double s : {-1.0, 0.0, 0.5, 3.0}) EXPECT_DOUBLE_EQ(d.exp_moment(s).value, 1.0);
}

TEST(Build, PointOneIsAllInfinite) {
  const auto d = make("point(1)");
  EXPECT_EQ(d.q(), 1.0);
  EXPECT_EQ(d.finite_mass(), 0.0);
  EXPECT_EQ(d.rate_integral(10.0), 0.0);
  std::mt19937_64 rng(1);
  EXPECT_EQ(d.sample(rng), 1.0);
}

TEST(RCumulative, ZeroAtOrigin) {
  for (const auto& text : kFamilies) EXPECT_EQ(r_cumulative(make(text), 0.0), 0.0) << text;
}

TEST(RCumulative, UniformPowerTwoAtOne) {
  // Frozen from the symbolic integral int_0^1 (1-u) e^u 2 e^{-2u} du = 2/e.
  const double frozen = 0.7357588823428846;
  const auto d = make("unifpow(theta=2)");
  EXPECT_NEAR(r_cumulative_oracle(d, 1.0), frozen, 1e-13);
  EXPECT_NEAR(r_cumulative(d, 1.0), frozen, 1e-13);
}

TEST(RCumulative, MatchesQuadratureOracle) {
  for (const auto& text : kFamilies) {
    const auto d = make(text);
    for (double t : {0.05, 0.5, 1.0, 2.5, 6.0})
      EXPECT_NEAR(d.r_cumulative(t), r_cumulative_oracle(d, t), 1e-9 * (1.0 + d.r_cumulative(t)))
          << text << " t=" << t;
  }
}

TEST(Invariants, CdfShape) {
  for (const auto& text : kFamilies) {
    const auto d = make(text);
    EXPECT_EQ(d.cdf(1.0), 1.0);
    EXPECT_NEAR(d.q() + d.finite_mass(), 1.0, 1e-15) << text;
    EXPECT_GE(1.0 - d.cdf(std::nextafter(1.0, 0.0)), d.q() - 1e-12) << text;
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double f = d.cdf(i / 1000.0);
      EXPECT_GE(f, prev - 1e-15);
      prev = f;
    }
    EXPECT_NEAR(d.exp_moment(0.0).value, 1.0 - d.q(), 1e-14) << text;
  }
}

TEST(Invariants, RateIntegralBoundedMonotone) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  for (const auto& text : kFamilies) {
    const auto d = make(text, 0.5);
    EXPECT_EQ(d.rate_integral(0.0) >= 0.0, true);
    std::vector<double> xs(200);
    for (auto& x : xs) x = unif(rng);
    std::sort(xs.begin(), xs.end());
    double prev_r = 0.0, prev_h = 0.0;
    for (double x : xs) {
      const double r = d.rate_integral(x);
      const double H = d.big_h(x);
      EXPECT_GE(r, prev_r - 1e-12);
      EXPECT_GE(H, prev_h - 1e-12);
      EXPECT_LE(r, std::exp(x) * (1.0 + 1e-12));
      prev_r = r;
      prev_h = H;
    }
  }
}

TEST(Invariants, BigHDerivativeIsHazard) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  for (double alpha : {0.0, 1.0}) {
    for (const auto& text : kFamilies) {
      const auto d = make(text, alpha);
      const auto atoms = d.breakpoints();
      for (int i = 0; i < 100; ++i) {
        const double x = unif(rng);
        const double step = 1e-5;
        bool near_atom = false;
        for (double a : atoms) near_atom |= std::abs(x - a) < 3 * step;
        if (near_atom) continue;
        const double numeric = (d.big_h(x + step) - d.big_h(x - step)) / (2 * step);
        const double expected = d.rate_integral(x) / (2.0 + alpha);
        EXPECT_NEAR(numeric, expected, 1e-6 * std::max(1.0, expected)) << text << " x=" << x;
      }
    }
  }
}

TEST(Invariants, BigHConvex) {
  for (const auto& text : kFamilies) {
    const auto d = make(text);
    for (double x = 0.1; x < 8.0; x += 0.1) {
      const double mid = d.big_h(x);
      EXPECT_LE(mid, 0.5 * (d.big_h(x - 0.1) + d.big_h(x + 0.1)) + 1e-12) << text;
    }
  }
}

TEST(Invariants, MixtureIsLinear) {
  const auto a = make("unifpow(theta=2)");
  const auto b = make("interval(a=0,b=1)");
  const auto c = make("bernoulli(p=0.5)");
  const auto mix = make("mix(0.5*unifpow(theta=2),0.25*interval(a=0,b=1),0.25*bernoulli(p=0.5))");
  for (double x = 0.0; x < 10.0; x += 0.37) {
    EXPECT_NEAR(mix.rate_integral(x),
                0.5 * a.rate_integral(x) + 0.25 * b.rate_integral(x) + 0.25 * c.rate_integral(x),
                1e-12 * std::max(1.0, mix.rate_integral(x)));
    EXPECT_NEAR(mix.r_cumulative(x), 0.5 * a.r_cumulative(x) + 0.25 * b.r_cumulative(x) + 0.25 * c.r_cumulative(x),
                1e-12 * std::max(1.0, mix.r_cumulative(x)));
  }
  EXPECT_DOUBLE_EQ(mix.q(), 0.125);
}

TEST(Sampler, EmpiricalCdfWithinKolmogorovTolerance) {
  for (const auto& text : {"unifpow(theta=0.5)", "unifpow(theta=2)", "interval(a=0.2,b=1.5)",
                           "mix(0.5*unifpow(theta=2),0.25*interval(a=0,b=1),0.25*bernoulli(p=0.5))",
                           "bernoulli(p=0.3)"}) {
    const auto d = make(text);
    auto rng = make_stream(2024, 0);
    std::vector<double> xs(1'000'000);
    for (auto& x : xs) x = d.sample(rng);
    EXPECT_LT(ks_distance(xs, [&](double x) { return d.cdf(x); }), 0.005) << text;
  }
}

TEST(Quadrature, NumericStieltjesMatchesClosedForm) {
  for (const auto& text : kFamilies) {
    const auto d = make(text);
    for (double x : {0.1, 1.0, 3.0}) EXPECT_NEAR(exp_stieltjes_numeric(d, 0.0, x), d.rate_integral(x), 1e-9) << text;
  }
}
