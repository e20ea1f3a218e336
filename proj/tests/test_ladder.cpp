#include <gtest/gtest.h>

#include <cmath>

#include "potkit/ladder.hpp"

using namespace potkit;
using namespace potkit::ladder;

TEST(BuildLadder, KillRateCarriesTailMass) {
  const Chain c = build_ladder({2, TailPolicy::Kill});
  EXPECT_DOUBLE_EQ(c.kill()[0], 0.25);
  EXPECT_DOUBLE_EQ(c.exit_rate(0), 1.0);
  const Chain r = build_ladder({2, TailPolicy::ReflectTo0});
  EXPECT_DOUBLE_EQ(r.kill()[0], 0.0);
  EXPECT_TRUE(r.is_conservative());
  EXPECT_THROW(build_ladder({1}), InvalidArgument);
}

TEST(BuildLadder, JumpMeasureIsSymmetric) {
  const Chain c = build_ladder({40});
  for (Eigen::Index n = 1; n <= 40; ++n) {
    const double expected = std::ldexp(1.0, -static_cast<int>(n));
    EXPECT_NEAR(c.jump_measure()(0, n) / expected, 1.0, 1e-14);
    EXPECT_NEAR(c.jump_measure()(n, 0) / expected, 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(c.weights()[n], std::ldexp(1.0, -2 * static_cast<int>(n)));
    EXPECT_DOUBLE_EQ(c.rates()[n], std::ldexp(1.0, static_cast<int>(n)));
  }
}

TEST(LadderMeasure, Atoms) {
  const DiscreteMeasure mu = ladder_measure(40);
  EXPECT_EQ(mu[0], 0.0);
  EXPECT_DOUBLE_EQ(mu[1], 0.5);
  EXPECT_DOUBLE_EQ(mu.total_mass(), 1.0 - std::ldexp(1.0, -40));
  EXPECT_NEAR(ladder_measure(60).total_mass(), 1.0, 1e-17);
}

TEST(ClosedForm, SeriesConstants) {
  // Independent forward summation in extended precision.
  long double c0 = 0.0L;
  for (int k = 1; k <= 60; ++k) c0 += 1.0L / (1.0L + std::ldexp(1.0L, k));
  EXPECT_NEAR(series_c0(60), static_cast<double>(c0), 2e-16);
  EXPECT_NEAR(series_c0(60), 0.76449, 1e-5);
  EXPECT_NEAR(closed_form_u0(60), static_cast<double>(c0 / (2.0L - c0)), 1e-15);
  EXPECT_NEAR(closed_form_u0(60), 0.6188, 5e-5);
  EXPECT_THROW(ladder_closed_form_potential(10, 20), InvalidArgument);
}

TEST(ClosedForm, MonotoneTowardLimit) {
  const PotentialField u = ladder_closed_form_potential(60, 60);
  const double limit = u[0] + 1.0;
  for (std::size_t x = 1; x < 60; ++x) {
    EXPECT_LE(u[x], u[x + 1]);
    EXPECT_LE(u[x], limit);
    if (x < 40) {
      EXPECT_LT(u[x], u[x + 1]);
    }
  }
  EXPECT_NEAR(u[60], limit, 1e-15);
  EXPECT_EQ(u.provenance, Provenance::ClosedForm);
  EXPECT_LT(u.err_bound, 1e-17);
}

TEST(ClosedForm, SatisfiesVariationalIdentityOnTruncation) {
  // The closed form solves (I - L)u = rho on every state n >= 1 exactly.
  const std::size_t n = 30;
  const Chain c = build_ladder({n});
  const PotentialField u = ladder_closed_form_potential(n, 60);
  const Vector resid = u.values - c.generator() * u.values - ladder_density(n);
  for (Eigen::Index x = 1; x <= static_cast<Eigen::Index>(n); ++x)
    EXPECT_LE(std::abs(resid[x]), 1e-15 * std::ldexp(1.0, static_cast<int>(x)) * 4);
}

TEST(SolvedPotential, MatchesClosedForm) {
  for (std::size_t n : {20u, 30u, 40u}) {
    const auto rows = potential_table(n);
    for (const auto& r : rows)
      if (r.state <= n / 2) {
        EXPECT_LE(r.abs_diff, 1e-5) << "n=" << n << " x=" << r.state;
      }
  }
}

TEST(SolvedPotential, TruncationConstantStable) {
  // |solved - closed form| <= C 2^{-N} on x <= N/2, with C stable in N.
  std::vector<double> constants;
  for (std::size_t n : {20u, 30u, 40u}) {
    double worst = 0.0;
    for (const auto& r : potential_table(n))
      if (r.state <= n / 2) worst = std::max(worst, r.abs_diff);
    constants.push_back(worst * std::ldexp(1.0, static_cast<int>(n)));
  }
  for (double c : constants) {
    EXPECT_GT(c, 0.1);
    EXPECT_LT(c, 10.0);
  }
  EXPECT_NEAR(constants[0] / constants[1], 1.0, 0.05);
  // Rounding enters at N=40 (2^{-40} ~ 1e-12), so the last ratio is looser.
  EXPECT_NEAR(constants[1] / constants[2], 1.0, 0.25);
}

TEST(SolvedPotential, S00Diagnostics) {
  const std::size_t n = 40;
  const Chain c = build_ladder({n});
  const DiscreteMeasure mu = ladder_measure(n);
  const PotentialField u = potential_u1(c, mu, 1.0);
  const double sup = u.sup();
  EXPECT_NEAR(sup, closed_form_u0(60) + 1.0, 1e-6);
  EXPECT_LE(mu.total_mass(), 1.0);
  const double energy = dirichlet_form_eval(c, u.values, u.values, 1.0);
  EXPECT_NEAR(energy, u.values.dot(mu.atoms()), 1e-10);
  EXPECT_LE(energy, sup * mu.total_mass() + 1e-12);
}

TEST(KatoBound, Limits) {
  EXPECT_LT(ladder_kato_bound(3, 1e-12), 1e-10);
  EXPECT_NEAR(ladder_kato_bound(30, 1e-3), 1.0, 1e-12);
  EXPECT_THROW(ladder_kato_bound(0, 1.0), InvalidArgument);
  EXPECT_THROW(ladder_kato_bound(2, 0.0), InvalidArgument);
}

TEST(KatoBound, ExactExpectationDominatesBound) {
  const std::size_t n = 30;
  const Chain c = build_ladder({n});
  const Vector rho = ladder_density(n);
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8}) {
    const Vector e = occupation_integral(c, t, rho);
    for (std::size_t x = 1; x <= n; ++x)
      EXPECT_GE(e[static_cast<Eigen::Index>(x)], ladder_kato_bound(x, t) - 1e-9) << "x=" << x << " t=" << t;
  }
}

TEST(KatoBound, SupStaysNearOne) {
  for (std::size_t n : {20u, 30u}) {
    for (double t : {1e-2, 1e-3, 1e-4}) {
      if (std::ldexp(1.0, static_cast<int>(n)) * t < 5.0) continue;
      const auto rows = kato_curve(n, {t});
      EXPECT_GE(rows[0].sup_exact, 0.99);
      EXPECT_GE(rows[0].sup_exact, rows[0].lower_bound - 1e-9);
    }
  }
}

TEST(KatoBound, SpectralAgreesWithUniformizationOnSmallLadder) {
  const std::size_t n = 8;
  const Chain c = build_ladder({n});
  const Vector rho = ladder_density(n);
  for (double t : {1e-2, 1e-1, 1.0}) {
    const Vector a = occupation_integral(c, t, rho);
    const Vector b = occupation_integral_uniformized(c, t, rho);
    EXPECT_LE(sup_norm(a - b), 1e-10);
  }
}
