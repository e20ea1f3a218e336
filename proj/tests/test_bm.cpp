#include <gtest/gtest.h>

#include <cmath>

#include "potkit/bm.hpp"

using namespace potkit;
using namespace potkit::bm;

namespace {

// Closed form of I(x, a) in d = 3 for beta < 3, beta != 2, |x| = s > 0.
double kato_oracle_d3(double beta, double s, double a) {
  const double e = 3.0 - beta;
  const double plus = (std::pow(s + a, e) - std::pow(s, e)) / e;
  const double minus = a <= s ? (std::pow(s, e) - std::pow(s - a, e)) / e : (std::pow(s, e) + std::pow(a - s, e)) / e;
  return 2.0 * kPi / (s * (2.0 - beta)) * (plus - minus);
}

double value(const KatoValue& v) { return std::get<double>(v); }

}  // namespace

TEST(Kernel, ClosedFormAtDimensionThree) {
  EXPECT_NEAR(r1_kernel(3, 1.0), 0.0386932, 1e-7);
  for (double r : {0.1, 1.0, 5.0}) EXPECT_NEAR(r1_kernel(3, r) / (std::exp(-std::sqrt(2.0) * r) / (2 * kPi * r)), 1.0, 1e-8);
  for (int d : {4, 5, 6})
    for (double r : {1e-3, 0.1, 1.0, 5.0, 20.0}) EXPECT_NEAR(r1_kernel(d, r) / r1_closed_form(d, r), 1.0, 1e-10);
  EXPECT_THROW(r1_kernel(2, 1.0), InvalidArgument);
  EXPECT_THROW(r1_kernel(3, 0.0), InvalidArgument);
}

TEST(Kernel, NewtonianNearZero) {
  for (int d : {3, 4, 5}) {
    const double c = r1_kernel(d, 1e-2) * std::pow(1e-2, d - 2);
    for (double r : {1e-3, 1e-4}) EXPECT_NEAR(r1_kernel(d, r) * std::pow(r, d - 2) / c, 1.0, 0.05);
    // The constant is the Newton kernel constant Gamma(d/2 - 1) / (2 pi^{d/2}).
    EXPECT_NEAR(r1_kernel(d, 1e-6) * std::pow(1e-6, d - 2), std::tgamma(0.5 * d - 1) / (2 * std::pow(kPi, 0.5 * d)),
                1e-4);
  }
}

TEST(Kernel, ExponentialDecay) {
  EXPECT_LE(r1_kernel(3, 10.0), std::exp(-10.0));
  EXPECT_LT(r1_kernel(3, 10.0), r1_kernel(3, 5.0));
}

TEST(Kernel, UnitMass) {
  for (int d : {3, 4, 5}) EXPECT_NEAR(kernel_mass(d), 1.0, 1e-6) << d;
}

TEST(Kato, OriginFormula) {
  for (int d : {3, 4, 5})
    for (double beta : {0.25, 1.0, 1.8})
      for (double a : {0.01, 0.5, 2.0})
        EXPECT_NEAR(value(kato_integral(d, beta, 0.0, a)) / (omega(d) * std::pow(a, 2 - beta) / (2 - beta)), 1.0, 1e-10);
}

TEST(Kato, BetaZeroIsIndependentOfX) {
  for (int d : {3, 4, 5})
    for (double x : {0.0, 1e-3, 0.4, 3.0}) EXPECT_NEAR(value(kato_integral(d, 0.0, x, 0.7)), omega(d) * 0.49 / 2, 1e-9);
}

TEST(Kato, MatchesClosedFormAwayFromOrigin) {
  for (double beta : {-1.0, 0.5, 1.5, 1.95, 2.4, 2.9})
    for (double s : {1e-4, 0.05, 0.5, 3.0})
      for (double a : {0.1, 1.0}) {
        const double ex = kato_oracle_d3(beta, s, a);
        EXPECT_NEAR(value(kato_integral(3, beta, s, a)) / ex, 1.0, 1e-8) << beta << " " << s << " " << a;
      }
}

TEST(Kato, DivergenceFlags) {
  EXPECT_TRUE(is_divergent(kato_integral(3, 2.0, 0.0, 1.0)));
  EXPECT_TRUE(is_divergent(kato_integral(3, 2.5, 0.0, 1.0)));
  EXPECT_FALSE(is_divergent(kato_integral(3, 2.5, 0.1, 1.0)));
  EXPECT_TRUE(is_divergent(kato_integral(3, 3.0, 0.1, 1.0)));
  EXPECT_TRUE(is_divergent(kato_integral(5, 5.5, 1.0, 1.0)));
  EXPECT_FALSE(std::get<DivergenceFlag>(kato_integral(4, 4.0, 0.5, 1.0)).reason.empty());
}

TEST(Kato, GenericDimensionAgreesWithIndependentRoute) {
  // Independent route in polar coordinates about x, d = 4:
  // I = int_0^a rho omega_3 int_0^pi sin^2(phi) |y|^{-beta} dphi drho.
  QuadratureSpec spec;
  spec.rel_tol = 1e-11;
  for (double s : {0.3, 1.5}) {
    const double beta = 1.0, a = 0.5;
    auto inner = [&](double rho) {
      return rho * omega(3) *
             integrate(
                 [&](double phi) {
                   const double y2 = s * s + rho * rho + 2 * s * rho * std::cos(phi);
                   return std::pow(std::sin(phi), 2) * std::pow(y2, -0.5 * beta);
                 },
                 0.0, kPi, spec, {kPi * 0.9, kPi * 0.99, kPi * 0.999})
                 .value;
    };
    const double oracle = integrate(inner, 0.0, a, spec, cluster_points(s, 0.0, a, 30)).value;
    EXPECT_NEAR(value(kato_integral(4, beta, s, a)) / oracle, 1.0, 1e-7) << s;
  }
}

TEST(Kato, Monotonicity) {
  for (double beta : {0.25, 0.75, 1.25, 1.75}) {
    double prev = 0.0;
    for (double a : {0.01, 0.1, 0.5, 1.0, 4.0}) {
      const double v = value(kato_integral(3, beta, 0.0, a));
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
  for (double a : {0.05, 0.5, 1.0}) {
    double prev = 0.0;
    for (double beta : {0.25, 0.75, 1.25, 1.75}) {
      const double v = value(kato_integral(3, beta, 0.0, a));
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(Classify, ReferenceExamples) {
  const auto c = power_law_classify(3, 1.75);
  EXPECT_TRUE(c.in_kato && c.in_s0 && c.radon);
  const auto n = power_law_classify(3, -1.0);
  EXPECT_FALSE(n.in_kato);
  EXPECT_FALSE(n.in_s0);
  EXPECT_TRUE(n.radon);
  for (double beta = -2.0; beta <= 5.0; beta += 0.05) {
    const auto k = power_law_classify(4, beta);
    EXPECT_FALSE(k.in_kato && k.in_s0) << beta;
  }
  EXPECT_FALSE(power_law_classify(3, 3.0).radon);
  EXPECT_THROW(power_law_classify(2, 1.0), InvalidArgument);
}

TEST(Classify, Grid) {
  for (int d : {3, 4, 5})
    for (double beta : {-1.0, 0.0, 1.0, 1.5, 1.75, 2.0, 2.4, 2.6, 3.0}) {
      const auto c = power_law_classify(d, beta);
      EXPECT_EQ(c.in_kato, beta >= 0 && beta < 2);
      EXPECT_EQ(c.in_s0, beta > d / 2.0 && beta < (d + 2) / 2.0);
      EXPECT_EQ(c.radon, beta < d);
    }
}

TEST(Intersection, Report) {
  const Interval i3 = intersection_report(3);
  EXPECT_DOUBLE_EQ(i3.lower, 1.5);
  EXPECT_DOUBLE_EQ(i3.upper, 2.0);
  EXPECT_FALSE(i3.empty());
  EXPECT_TRUE(intersection_report(4).empty());
  EXPECT_TRUE(intersection_report(5).empty());
}

TEST(KatoSweep, AgreesWithClassifier) {
  const std::vector<double> as{0.5, 0.25, 0.125, 0.0625, 0.03125};
  for (double beta : {0.5, 1.0, 1.5}) {
    const auto rows = kato_sweep(3, beta, as);
    std::vector<double> sup;
    for (const auto& r : rows) {
      EXPECT_FALSE(r.divergent);
      sup.push_back(r.sup);
    }
    for (std::size_t i = 1; i < sup.size(); ++i) EXPECT_LT(sup[i], sup[i - 1]);
    EXPECT_NEAR(loglog_slope(as, sup), 2.0 - beta, 0.05);
    EXPECT_TRUE(power_law_classify(3, beta).in_kato);
  }
  for (double beta : {2.0, 2.4}) {
    const auto rows = kato_sweep(3, beta, {0.5});
    EXPECT_TRUE(rows[0].divergent);
    EXPECT_EQ(rows[0].argmax, 0.0);
    EXPECT_FALSE(power_law_classify(3, beta).in_kato);
  }
  // Negative beta fails through |x| -> infinity: the sup sits at the end of the grid.
  const auto grid = default_x_grid();
  const auto neg = kato_sweep(3, -1.0, {0.1}, grid);
  EXPECT_EQ(neg[0].argmax, grid.back());
}

TEST(Energy, NumericAngleMatchesAntiderivative) {
  QuadratureSpec spec;
  spec.rel_tol = 1e-12;
  for (double beta : {0.5, 2.0, 2.8})
    for (auto [r, rho] : {std::pair{0.3, 0.2}, std::pair{0.5, 0.5}, std::pair{2.0, 0.9}}) {
      const double a = bm::detail::shell_angular(3, beta, r, rho, 0.05, 1.5, spec, false);
      const double b = bm::detail::shell_angular(3, beta, r, rho, 0.05, 1.5, spec, true);
      EXPECT_NEAR(a / b, 1.0, 1e-9) << beta << " " << r << " " << rho;
    }
}

TEST(Energy, J1DivergesWithAnalyticExponent) {
  const auto p = energy_probe(3, 2.8, Region::J1, {1e-6, 10.0});
  EXPECT_NEAR(p.slope, 3 + 2 - 2 * 2.8, 0.02);
  EXPECT_NEAR(*analytic_probe_exponent(3, 2.8, Region::J1), -0.6, 1e-12);
  // Below the threshold the inner limit converges.
  const auto q = energy_probe(3, 2.0, Region::J1, {1e-6, 10.0});
  EXPECT_LT(std::abs(q.slope), 0.01);
}

TEST(Energy, J2AndJ3) {
  const auto j2 = energy_probe(3, 2.0, Region::J2, {1e-3, 1e4});
  EXPECT_LT(std::abs(j2.slope), 0.01);
  EXPECT_GT(j2.value, 0.0);
  const auto j2d = energy_probe(3, 1.0, Region::J2, {1e-3, 1e4});
  EXPECT_NEAR(j2d.slope, 3 - 2 * 1.0, 0.05);
  const auto j3 = energy_probe(3, 1.0, Region::J3, {1e-3, 1e3});
  EXPECT_NEAR(j3.slope, 1.0, 0.05);
  const auto j3c = energy_probe(3, 2.0, Region::J3, {1e-3, 1e3});
  EXPECT_LT(std::abs(j3c.slope), 0.01);
}

TEST(Energy, J4FiniteBelowDimension) {
  for (double beta : {1.0, 2.5, 2.9}) {
    const auto p = energy_probe(3, beta, Region::J4, {1e-6, 10.0});
    EXPECT_TRUE(std::isfinite(p.value));
    EXPECT_LT(std::abs(p.slope), 0.01) << beta;
  }
}

TEST(Energy, DimensionFour) {
  // d + 2 - 2 beta = -1 at beta = 3.5.
  EnergyOptions opt;
  opt.spec.rel_tol = 1e-6;
  opt.ladder_steps = 3;
  const auto p = energy_probe(4, 3.5, Region::J1, {1e-4, 10.0}, opt);
  EXPECT_NEAR(p.slope, -1.0, 0.03);
}

TEST(Energy, J3Sensitivity) {
  const auto s = j3_sensitivity(3, 2.0, 1e-3, 100.0);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_GT(s[0].second, s[1].second);
  EXPECT_GT(s[1].second, s[2].second);
  EXPECT_THROW(energy_probe(3, 2.0, Region::J1, {1.0, 0.5}), InvalidArgument);
}
