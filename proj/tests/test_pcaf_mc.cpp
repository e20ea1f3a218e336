#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "potkit/ladder.hpp"
#include "potkit/measure_classes.hpp"
#include "potkit/pcaf_mc.hpp"
#include "test_support.hpp"

using namespace potkit;
using potkit::testing::random_chain;
using potkit::testing::random_measure;

namespace {

bool within(double estimate, double exact, double se, double k = 4.0) {
  return std::abs(estimate - exact) <= k * se + 1e-12 * std::max(1.0, std::abs(exact));
}

}  // namespace

TEST(Rng, SplitmixReferenceValues) {
  // Published splitmix64 outputs for state 0.
  std::uint64_t s = 0;
  EXPECT_EQ(splitmix64(s), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64(s), 0x6E789E6AA1B965F4ULL);
  EXPECT_NE(path_seed(42, 0), path_seed(42, 1));
  EXPECT_NE(path_seed(42, 0), path_seed(43, 0));
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(1);
  double su = 0, sn = 0, sn2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sn / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Simulate, ZeroRatesGiveConstantPath) {
  Matrix q(2, 2);
  q << 0, 1, 1, 0;
  const Chain c = build_chain(Vector::Ones(2), Vector::Zero(2), q);
  const PathSample p = simulate_ctmc(c, 1, 5.0, 3);
  ASSERT_EQ(p.segments(), 1u);
  EXPECT_EQ(p.states[0], 1u);
  EXPECT_EQ(p.times[0], 0.0);
  EXPECT_EQ(p.end, 5.0);
  EXPECT_FALSE(p.killed);
}

TEST(Simulate, LadderHoldingTimeIsExponential) {
  const Chain c = ladder::build_ladder({10});
  for (std::size_t n : {1u, 3u, 6u}) {
    const std::size_t paths = 10000;
    std::vector<double> hold(paths);
    for (std::size_t i = 0; i < paths; ++i) {
      const PathSample p = simulate_ctmc(c, n, 20.0, path_seed(9, i));
      ASSERT_GE(p.segments(), 2u);
      EXPECT_EQ(p.states[1], 0u);
      hold[i] = p.times[1];
    }
    const McEstimate e = summarize(hold, 9);
    EXPECT_TRUE(within(e.mean, std::ldexp(1.0, -static_cast<int>(n)), e.std_error)) << n;
  }
}

TEST(Simulate, OccupationMatchesSemigroup) {
  std::mt19937_64 gen(4);
  const Chain c = random_chain(gen, 4, true);
  const double t = 0.7;
  const std::size_t paths = 100000;
  for (std::size_t y = 0; y < 4; ++y) {
    Vector indicator = Vector::Zero(4);
    indicator[static_cast<Eigen::Index>(y)] = 1.0;
    const double exact = semigroup_apply(c, t, indicator)[0];
    const McEstimate e = run_paths(paths, 77, [&](std::size_t, Rng& rng) {
      const PathSample p = JumpSampler(c).simulate(0, t, rng);
      return p.state_at(t) == y ? 1.0 : 0.0;
    });
    EXPECT_TRUE(within(e.mean, exact, e.std_error)) << y << " " << e.mean << " " << exact;
  }
}

TEST(Pcaf, AxiomsOnSampledPaths) {
  std::mt19937_64 gen(8);
  const Chain c = random_chain(gen, 5, true);
  const Vector rho = c.density(random_measure(gen, 5));
  for (std::uint64_t s = 0; s < 200; ++s) {
    const PathSample p = simulate_ctmc(c, s % 5, 3.0, s);
    EXPECT_EQ(pcaf_accumulate(p, rho, 0.0, 0.0), 0.0);
    double prev = 0.0;
    for (double t = 0.25; t <= 3.0; t += 0.25) {
      const double a = pcaf_accumulate(p, rho, 0.0, t);
      EXPECT_GE(a, prev);
      prev = a;
    }
    const double whole = pcaf_accumulate(p, rho);
    const double split = pcaf_accumulate(p, rho, 0.0, 1.3) + pcaf_accumulate(p, rho, 1.3, 3.0);
    EXPECT_NEAR(whole, split, 1e-14 * std::max(1.0, whole));
    EXPECT_DOUBLE_EQ(pcaf_accumulate(p, Vector::Ones(5)), p.end);
    EXPECT_EQ(pcaf_accumulate(p, Vector::Zero(5)), 0.0);
    if (p.killed) {
      EXPECT_EQ(p.state_at(p.lifetime + 1.0), kCemetery);
      EXPECT_LT(p.end, 3.0);
    }
  }
}

TEST(Pcaf, LadderExpectationMatchesKatoCurve) {
  const Chain c = ladder::build_ladder({12});
  const DiscreteMeasure mu = ladder::ladder_measure(12);
  for (double t : {1e-1, 1e-2}) {
    const Vector exact = expected_pcaf(c, mu, t);
    for (std::size_t x : {0u, 2u, 8u}) {
      const McEstimate e = mc_expectation(c, mu, x, t, 20000, 5);
      EXPECT_TRUE(within(e.mean, exact[static_cast<Eigen::Index>(x)], e.std_error)) << x << " " << t;
    }
  }
  const std::vector<double> curve = kato_test(c, mu, {1e-2});
  const McEstimate top = mc_expectation(c, mu, 12, 1e-2, 5000, 6);
  EXPECT_TRUE(within(top.mean, curve[0], top.std_error));
}

TEST(McExpectation, ZeroMeasureAndDeterminism) {
  const Chain c = ladder::build_ladder({8});
  const McEstimate z = mc_expectation(c, DiscreteMeasure(Vector::Zero(9)), 0, 1.0, 100, 1);
  EXPECT_EQ(z.mean, 0.0);
  EXPECT_EQ(z.std_error, 0.0);
  const McEstimate a = mc_expectation(c, ladder::ladder_measure(8), 0, 1.0, 3000, 99);
  const McEstimate b = mc_expectation(c, ladder::ladder_measure(8), 0, 1.0, 3000, 99);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.seed, 99u);
  EXPECT_EQ(a.n_paths, 3000u);
  EXPECT_THROW(mc_expectation(c, ladder::ladder_measure(8), 0, 1.0, 10, 1), InvalidArgument);
}

TEST(McExpectation, LadderResolventMatchesClosedForm) {
  const Chain c = ladder::build_ladder({40});
  const McEstimate e =
      mc_expectation(c, ladder::ladder_measure(40), 0, std::numeric_limits<double>::infinity(), 40000, 12, 1.0);
  EXPECT_TRUE(within(e.mean, ladder::closed_form_u0(60), e.std_error)) << e.mean;
}

TEST(McExpectation, BrownianInverseDistanceIsStable) {
  const BmEstimate a = mc_expectation_bm(1.0, {1.0, 0.0, 0.0}, 0.1, 4000, 3, 1e-2, 4);
  const BmEstimate b = mc_expectation_bm(1.0, {1.0, 0.0, 0.0}, 0.05, 4000, 3, 1e-2, 4);
  EXPECT_TRUE(std::isfinite(a.estimate.mean));
  EXPECT_TRUE(a.stable);
  EXPECT_GT(a.estimate.mean, b.estimate.mean);
  // E_x int_0^t |X|^{-1} ds = int_0^t erf(|x|/sqrt(2s))/|x| ds in d = 3.
  double exact = 0.0;
  const int steps = 20000;
  for (int k = 0; k < steps; ++k) {
    const double s = (k + 0.5) * 0.1 / steps;
    exact += std::erf(1.0 / std::sqrt(2.0 * s)) * 0.1 / steps;
  }
  EXPECT_TRUE(within(a.estimate.mean, exact, a.estimate.std_error, 5.0)) << a.estimate.mean << " " << exact;
  EXPECT_THROW(mc_expectation_bm(2.0, {1.0, 0.0, 0.0}, 0.1, 100, 1), InvalidArgument);
  EXPECT_NEAR(bm_expected_pcaf(1.0, 1.0, 0.1), exact, 1e-9);
}

TEST(BmOracle, AgreesWithErfFormulaAndOrigin) {
  for (double a : {0.05, 0.3, 2.0}) {
    for (double t : {0.01, 0.5}) {
      double exact = 0.0;
      const int steps = 200000;
      for (int k = 0; k < steps; ++k) {
        const double s = (k + 0.5) * t / steps;
        exact += std::erf(a / std::sqrt(2.0 * s)) / a * t / steps;
      }
      EXPECT_NEAR(bm_expected_pcaf(1.0, a, t) / exact, 1.0, 1e-7) << a << " " << t;
    }
  }
  // Continuity at the origin: the deficit against the closed form there is O(|x|^{2-beta}).
  for (double beta : {0.5, 1.0, 1.5}) {
    const double v0 = bm_expected_pcaf(beta, 0.0, 0.2);
    double prev = v0;
    for (double a : {1e-7, 1e-4, 1e-2}) {
      const double v = bm_expected_pcaf(beta, a, 0.2);
      EXPECT_LT(v, prev) << beta << " " << a;
      EXPECT_LE(v0 - v, 10.0 * std::pow(a, 2.0 - beta) * v0) << beta << " " << a;
      prev = v;
    }
  }
  EXPECT_NEAR(bm_expected_pcaf(0.0, 0.7, 0.3), 0.3, 1e-10);
  // MC at beta = 1.5 against the oracle.
  const BmEstimate m = mc_expectation_bm(1.5, {0.5, 0.0, 0.0}, 0.1, 4000, 11, 1e-2, 5);
  EXPECT_TRUE(within(m.estimate.mean, bm_expected_pcaf(1.5, 0.5, 0.1), m.estimate.std_error, 5.0))
      << m.estimate.mean << " " << bm_expected_pcaf(1.5, 0.5, 0.1);
}

TEST(Revuz, TrivialCases) {
  const Chain c = ladder::build_ladder({6});
  const DiscreteMeasure mu = ladder::ladder_measure(6);
  const RevuzResult r = revuz_check(c, mu, Vector::Zero(7), Vector::Ones(7), 1.0, 100, 1);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_EQ(r.z_score, 0.0);
  const RevuzResult h = revuz_check_alpha(c, mu, Vector::Ones(7), Vector::Zero(7), 1.0, 100, 1);
  EXPECT_EQ(h.lhs, 0.0);
  EXPECT_EQ(h.rhs, 0.0);
}

TEST(Revuz, LadderBothForms) {
  const Chain c = ladder::build_ladder({20});
  const DiscreteMeasure mu = ladder::ladder_measure(20);
  const RevuzResult t = revuz_check(c, mu, Vector::Ones(21), Vector::Ones(21), 1.0, 50000, 42);
  EXPECT_LE(t.z_score, 4.0) << t.lhs << " " << t.rhs;
  const RevuzResult a = revuz_check_alpha(c, mu, Vector::Ones(21), Vector::Ones(21), 1.0, 50000, 42);
  EXPECT_LE(a.z_score, 4.0) << a.lhs << " " << a.rhs;
}

TEST(Revuz, RandomChainNonConstantWeights) {
  std::mt19937_64 gen(13);
  const Chain c = random_chain(gen, 5, true);
  const DiscreteMeasure mu = random_measure(gen, 5, 0.0);
  const Vector f = Vector::LinSpaced(5, 0.2, 1.0), h = Vector::LinSpaced(5, 1.0, 0.1);
  EXPECT_LE(revuz_check(c, mu, f, h, 0.8, 40000, 5).z_score, 4.0);
  EXPECT_LE(revuz_check_alpha(c, mu, f, h, 2.0, 40000, 5).z_score, 4.0);
}

TEST(Fukushima, ResidualAndIncrementVanish) {
  const Chain c = ladder::build_ladder({20});
  const DiscreteMeasure mu = ladder::ladder_measure(20);
  const McEstimate m = fukushima_residual(c, mu, 1.0, 0, 1.0, 50000, 42);
  EXPECT_LE(std::abs(m.mean), 4.0 * m.std_error);
  const McEstimate inc = fukushima_increment(c, mu, 1.0, 0, 1.0, 2.0, 50000, 43);
  EXPECT_LE(std::abs(inc.mean), 4.0 * inc.std_error);
  const McEstimate zero = fukushima_residual(c, DiscreteMeasure(Vector::Zero(21)), 1.0, 0, 1.0, 100, 1);
  EXPECT_EQ(zero.mean, 0.0);
  std::mt19937_64 gen(2);
  const Chain r = random_chain(gen, 4, true);
  const McEstimate k = fukushima_residual(r, random_measure(gen, 4, 0.0), 2.0, 1, 1.5, 40000, 8);
  EXPECT_LE(std::abs(k.mean), 4.0 * k.std_error);
}

TEST(PcafL1, DominationAndDecrease) {
  const Chain c = ladder::build_ladder({12});
  const DiscreteMeasure mu = ladder::ladder_measure(12);
  std::vector<DiscreteMeasure> seq;
  for (std::size_t k : {2u, 5u, 8u, 12u}) seq.push_back(mu.restricted_to(state_range(0, k)));
  const std::vector<PcafL1Row> rows = pcaf_l1_convergence(c, seq, mu, 0.5, 2000, 21);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].violations, 0u);
    EXPECT_EQ(rows[i].paths_checked, 13u * 2000u);
    EXPECT_LE(rows[i].estimate, rows[i].exact_bound + 4.0 * rows[i].std_error + 1e-15);
    if (i > 0) {
      EXPECT_LE(rows[i].exact_bound, rows[i - 1].exact_bound);
    }
  }
  EXPECT_EQ(rows.back().estimate, 0.0);
  EXPECT_EQ(rows.back().exact_bound, 0.0);
}
