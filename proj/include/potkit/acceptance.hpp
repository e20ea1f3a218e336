#pragma once

// Acceptance criteria 1..9 as self-contained checks, shared by the acceptance
// test binary and `potkit verify-all`. Each check records its measured values,
// its wall time, and its runtime budget; the budget is part of the verdict.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "potkit/bm.hpp"
#include "potkit/disk.hpp"
#include "potkit/ladder.hpp"
#include "potkit/measure_classes.hpp"
#include "potkit/pcaf_mc.hpp"
#include "potkit/sampling.hpp"

namespace potkit::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool checks_passed = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;
  nlohmann::json data = nlohmann::json::object();

  bool passed() const { return checks_passed && seconds < budget_seconds; }
  std::string line() const {
    std::ostringstream s;
    s << "criterion " << id << " [" << (passed() ? "PASS" : "FAIL") << "] " << title << " (" << seconds << " s, budget "
      << budget_seconds << " s): " << detail;
    return s.str();
  }
};

struct Options {
  std::uint64_t seed = 42;
  std::size_t mc_paths = 100000;
  std::size_t meta_seeds = 100;
};

namespace detail {

template <class F>
CriterionResult timed(int id, std::string title, double budget, F&& body) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  r.budget_seconds = budget;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.checks_passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace detail

// 1. Solved U_1 mu on N = 40 against the closed form for x <= 20.
inline CriterionResult criterion1(const Options& = {}) {
  return detail::timed(1, "ladder closed form", 1.0, [](CriterionResult& r) {
    const Chain c = ladder::build_ladder({40});
    const PotentialField solved = potential_u1(c, ladder::ladder_measure(40), 1.0);
    const double u0 = ladder::closed_form_u0(60);
    double worst = std::abs(solved[0] - u0);
    for (std::size_t x = 1; x <= 20; ++x) worst = std::max(worst, std::abs(solved[x] - ladder::closed_form_u(x, u0)));
    r.checks_passed = worst <= 1e-6;
    r.data = {{"max_abs_diff", worst}, {"u0", u0}};
    r.detail = "max |U1mu - u| over x<=20 = " + detail::num(worst) + " (<= 1e-6)";
  });
}

// 2. Kato failure with exact sup_{n<=30} E_n[A_t] >= 0.99, while S00 passes.
inline CriterionResult criterion2(const Options& = {}) {
  return detail::timed(2, "ladder Kato failure and S00", 10.0, [](CriterionResult& r) {
    const std::vector<double> times{1e-2, 1e-3, 1e-4};
    const Chain c = ladder::build_ladder({30});
    const Vector rho = ladder::ladder_density(30);
    bool ok = true;
    double worst_sup = 1.0;
    for (double t : times) {
      const Vector e = occupation_integral(c, t, rho);
      double sup = 0.0;
      for (std::size_t n = 1; n <= 30; ++n) {
        const double v = e[static_cast<Eigen::Index>(n)];
        sup = std::max(sup, v);
        if (v < ladder::ladder_kato_bound(n, t) - 1e-12) ok = false;
      }
      worst_sup = std::min(worst_sup, sup);
      if (sup < 0.99) ok = false;
    }
    std::vector<Chain> family;
    std::vector<DiscreteMeasure> mus;
    for (std::size_t n : {10, 20, 30, 40}) {
      family.push_back(ladder::build_ladder({n}));
      mus.push_back(ladder::ladder_measure(n));
    }
    const ClassReport rep = family_classify(family, mus, {1.0, 10.0, 100.0, 1000.0}, times);
    const double u_sup_target = ladder::closed_form_u0(60) + 1.0;
    const bool s00 = rep.s00 == Verdict::Pass && rep.total_mass <= 1.0 && std::abs(rep.r1_sup - u_sup_target) <= 1e-6;
    r.checks_passed = ok && s00 && rep.kato == Verdict::Fail;
    r.data = {{"min_sup_over_t", worst_sup}, {"s00", to_string(rep.s00)}, {"kato", to_string(rep.kato)},
              {"mass", rep.total_mass}, {"u1_sup", rep.r1_sup}};
    r.detail = "min_t sup_n E_n[A_t] = " + detail::num(worst_sup) + ", family kato " + to_string(rep.kato) + ", s00 " +
               to_string(rep.s00) + ", ||U1mu|| = " + detail::num(rep.r1_sup);
  });
}

// 3. Stollmann-Voigt on 10^4 random instances, with a witness of ratio > 1/4.
inline CriterionResult criterion3(const Options& opt = {}) {
  return detail::timed(3, "Stollmann-Voigt", 30.0, [&](CriterionResult& r) {
    std::mt19937_64 rng(opt.seed);
    std::size_t violations = 0;
    double best = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
      const Chain c = sampling::random_chain(rng, n, trial % 2 == 0);
      const DiscreteMeasure mu = sampling::random_measure(rng, n, 0.5);
      const Vector f = sampling::random_vector(rng, n);
      const StollmannVoigt s = stollmann_voigt_check(c, mu, f);
      if (!s.holds) ++violations;
      best = std::max(best, s.ratio);
    }
    r.checks_passed = violations == 0 && best > 0.25;
    r.data = {{"violations", violations}, {"max_ratio", best}};
    r.detail = std::to_string(violations) + " violations in 10000, max ratio " + detail::num(best) + " (> 0.25)";
  });
}

// 4. Power-law classification grid and the Kato sweep slopes at d = 3.
inline CriterionResult criterion4(const Options& = {}) {
  return detail::timed(4, "BM thresholds", 60.0, [](CriterionResult& r) {
    std::size_t mismatches = 0;
    for (int d : {3, 4, 5}) {
      for (double beta : {-1.0, 0.0, 1.0, 1.5, 1.75, 2.0, 2.4, 2.6, 3.0}) {
        const bm::Classification c = bm::power_law_classify(d, beta);
        const bool kato = beta >= 0.0 && beta < 2.0;
        const bool s0 = 0.5 * d < beta && beta < 0.5 * d + 1.0;
        if (c.in_kato != kato || c.in_s0 != s0) ++mismatches;
      }
    }
    const std::vector<double> as{0.5, 0.25, 0.125, 0.0625, 0.03125};
    nlohmann::json slopes = nlohmann::json::object();
    bool slopes_ok = true;
    for (double beta : {0.5, 1.0, 1.5}) {
      std::vector<double> sup;
      for (const auto& row : bm::kato_sweep(3, beta, as)) sup.push_back(row.sup);
      const double slope = bm::loglog_slope(as, sup);
      slopes[detail::num(beta)] = slope;
      if (!(std::abs(slope - (2.0 - beta)) <= 0.05)) slopes_ok = false;
    }
    r.checks_passed = mismatches == 0 && slopes_ok;
    r.data = {{"grid_mismatches", mismatches}, {"slopes", slopes}};
    r.detail = std::to_string(mismatches) + " grid mismatches; slopes " + slopes.dump();
  });
}

// 5. Kato and S0 intersection.
inline CriterionResult criterion5(const Options& = {}) {
  return detail::timed(5, "Kato/S0 intersection", 1e-3, [](CriterionResult& r) {
    const bm::Interval i3 = bm::intersection_report(3);
    const bool ok = i3.lower == 1.5 && i3.upper == 2.0 && !i3.empty() && bm::intersection_report(4).empty() &&
                    bm::intersection_report(5).empty();
    r.checks_passed = ok;
    r.detail = "d=3: (" + detail::num(i3.lower) + ", " + detail::num(i3.upper) + "), d=4,5 empty: " +
               (bm::intersection_report(4).empty() && bm::intersection_report(5).empty() ? "yes" : "no");
  });
}

// 6. Kernel quadrature against the closed form, and unit mass.
inline CriterionResult criterion6(const Options& = {}) {
  return detail::timed(6, "R1 kernel cross-check", 10.0, [](CriterionResult& r) {
    double worst_rel = 0.0, worst_mass = 0.0;
    for (double x : {0.1, 1.0, 5.0}) {
      const double exact = std::exp(-kSqrt2 * x) / (2.0 * kPi * x);
      worst_rel = std::max(worst_rel, std::abs(bm::r1_kernel(3, x) / exact - 1.0));
    }
    for (int d : {3, 4, 5}) worst_mass = std::max(worst_mass, std::abs(bm::kernel_mass(d) - 1.0));
    r.checks_passed = worst_rel <= 1e-8 && worst_mass <= 1e-6;
    r.data = {{"max_rel_err", worst_rel}, {"max_mass_err", worst_mass}};
    r.detail = "kernel rel err " + detail::num(worst_rel) + " (<= 1e-8), mass err " + detail::num(worst_mass) + " (<= 1e-6)";
  });
}

// 7. Disk: sup-norm convergence, Miyadera lower bound near its limit, equilibrium identity.
inline CriterionResult criterion7(const Options& = {}) {
  return detail::timed(7, "disk headline", 30.0, [](CriterionResult& r) {
    const std::vector<int> ns{2, 4, 8, 16, 32};
    const double limit = disk::noncauchy_limit();
    std::vector<double> sup, lower, eq;
    bool decreasing = true, eq_ok = true, lower_ok = true;
    for (int n : ns) {
      sup.push_back(disk::sup_distance_to_limit(n));
      const disk::NonCauchyResult nc = disk::disk_noncauchy(n, 2 * n);
      lower.push_back(nc.lower_bound);
      eq.push_back(disk::verify_equilibrium(n).sup_error);
      if (sup.size() > 1 && !(sup.back() < sup[sup.size() - 2])) decreasing = false;
      if (eq.back() > 1e-6) eq_ok = false;
      if (n >= 16 && std::abs(nc.lower_bound - limit) > 0.1 * limit) lower_ok = false;
    }
    const bool sup_ok = sup.back() <= 0.02;
    r.checks_passed = sup_ok && decreasing && lower_ok && eq_ok && limit > 0.0;
    r.data = {{"n", ns}, {"sup_u_diff", sup}, {"miyadera_lower", lower}, {"limit", limit}, {"equilibrium_sup_error", eq}};
    r.detail = "sup|u32-u| = " + detail::num(sup.back()) + " (<= 0.02: " + (sup_ok ? "yes" : "no") +
               "), decreasing: " + (decreasing ? "yes" : "no") + ", lower bounds n=16,32: " + detail::num(lower[3]) +
               ", " + detail::num(lower[4]) + " vs limit " + detail::num(limit) + " (within 10%: " +
               (lower_ok ? "yes" : "no") + "), equilibrium max err " +
               detail::num(*std::max_element(eq.begin(), eq.end()));
  });
}

struct McSuite {
  RevuzResult revuz_t;
  RevuzResult revuz_alpha;
  McEstimate fukushima;
  bool passed() const {
    return revuz_t.z_score <= 4.0 && revuz_alpha.z_score <= 4.0 &&
           std::abs(fukushima.mean) <= 4.0 * fukushima.std_error;
  }
};

// Revuz (both forms) and Fukushima on the N = 40 ladder with f = h = 1, t = 1, alpha = 1, x = 0.
inline McSuite mc_suite(std::uint64_t seed, std::size_t paths) {
  const Chain c = ladder::build_ladder({40});
  const DiscreteMeasure mu = ladder::ladder_measure(40);
  const Vector one = Vector::Ones(41);
  return {revuz_check(c, mu, one, one, 1.0, paths, seed), revuz_check_alpha(c, mu, one, one, 1.0, paths, seed),
          fukushima_residual(c, mu, 1.0, 0, 1.0, paths, seed)};
}

// 8. Monte Carlo Revuz and Fukushima checks, and the 100-seed meta-test.
inline CriterionResult criterion8(const Options& opt = {}) {
  return detail::timed(8, "Revuz and Fukushima MC", 300.0, [&](CriterionResult& r) {
    const McSuite main = mc_suite(opt.seed, opt.mc_paths);
    std::size_t passes = 0;
    for (std::size_t s = 0; s < opt.meta_seeds; ++s) passes += mc_suite(1000 + s, opt.mc_paths).passed() ? 1 : 0;
    const std::size_t needed = opt.meta_seeds - opt.meta_seeds / 100;
    r.checks_passed = main.passed() && passes >= needed;
    r.data = {{"revuz_t_z", main.revuz_t.z_score},
              {"revuz_alpha_z", main.revuz_alpha.z_score},
              {"fukushima_mean", main.fukushima.mean},
              {"fukushima_stderr", main.fukushima.std_error},
              {"meta_passes", passes},
              {"meta_seeds", opt.meta_seeds}};
    r.detail = "seed " + std::to_string(opt.seed) + ": z_t = " + detail::num(main.revuz_t.z_score) + ", z_alpha = " +
               detail::num(main.revuz_alpha.z_score) + ", fukushima |mean|/stderr = " +
               detail::num(std::abs(main.fukushima.mean) / main.fukushima.std_error) + "; meta " +
               std::to_string(passes) + "/" + std::to_string(opt.meta_seeds) + " (need " + std::to_string(needed) + ")";
  });
}

// 9. Miyadera metric axioms on 10^4 random triples and pathwise PCAF domination.
inline CriterionResult criterion9(const Options& opt = {}) {
  return detail::timed(9, "Miyadera metric properties", 60.0, [&](CriterionResult& r) {
    std::mt19937_64 rng(opt.seed + 9);
    std::size_t axiom_failures = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
      const Chain c = sampling::random_chain(rng, n, trial % 3 == 0);
      const DiscreteMeasure a = sampling::random_measure(rng, n), b = sampling::random_measure(rng, n),
                            e = sampling::random_measure(rng, n);
      const double ab = miyadera_distance(c, a, b), ba = miyadera_distance(c, b, a);
      const double ae = miyadera_distance(c, a, e), be = miyadera_distance(c, b, e);
      const bool identity = miyadera_distance(c, a, a) == 0.0 &&
                            (ab > 0.0 || (a.atoms() - b.atoms()).cwiseAbs().maxCoeff() == 0.0);
      const bool ok = ab >= 0.0 && identity && std::abs(ab - ba) <= 1e-10 && ae <= ab + be + 1e-10;
      if (!ok) ++axiom_failures;
    }
    std::size_t violations = 0, checked = 0;
    const Chain lad = ladder::build_ladder({12});
    const DiscreteMeasure mu = ladder::ladder_measure(12);
    std::vector<DiscreteMeasure> seq;
    for (std::size_t k : {1, 3, 6, 9, 12}) seq.push_back(mu.restricted_to(state_range(0, k)));
    for (const PcafL1Row& row : pcaf_l1_convergence(lad, seq, mu, 1.0, 2000, opt.seed)) {
      violations += row.violations;
      checked += row.paths_checked;
    }
    for (int trial = 0; trial < 20; ++trial) {
      const Chain c = sampling::random_chain(rng, 5, trial % 2 == 0);
      const DiscreteMeasure m = sampling::random_measure(rng, 5);
      std::vector<DiscreteMeasure> s{sampling::random_measure(rng, 5), m.restricted_to(sampling::random_subset(rng, 5))};
      for (const PcafL1Row& row : pcaf_l1_convergence(c, s, m, 2.0, 200, opt.seed + trial)) {
        violations += row.violations;
        checked += row.paths_checked;
      }
    }
    r.checks_passed = axiom_failures == 0 && violations == 0;
    r.data = {{"axiom_failures", axiom_failures}, {"domination_violations", violations}, {"paths_checked", checked}};
    r.detail = std::to_string(axiom_failures) + " axiom failures in 10000 triples; " + std::to_string(violations) +
               " domination violations on " + std::to_string(checked) + " paths";
  });
}

inline CriterionResult run_criterion(int id, const Options& opt = {}) {
  switch (id) {
    case 1: return criterion1(opt);
    case 2: return criterion2(opt);
    case 3: return criterion3(opt);
    case 4: return criterion4(opt);
    case 5: return criterion5(opt);
    case 6: return criterion6(opt);
    case 7: return criterion7(opt);
    case 8: return criterion8(opt);
    case 9: return criterion9(opt);
  }
  throw InvalidArgument("unknown acceptance criterion " + std::to_string(id));
}

inline constexpr int kCriteria = 9;

}  // namespace potkit::acceptance
