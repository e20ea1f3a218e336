#pragma once

// Radial model on the unit disk: Brownian motion absorbed at, or reflected
// from, the unit circle. Radial functions are paired with the normalized
// area measure dx/pi, which reads 2 s ds in the radius.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "potkit/bessel.hpp"
#include "potkit/constants.hpp"
#include "potkit/errors.hpp"
#include "potkit/parallel.hpp"
#include "potkit/quadrature.hpp"

namespace potkit::disk {

enum class Boundary { Neumann, Dirichlet };

inline const char* to_string(Boundary b) { return b == Boundary::Neumann ? "neumann" : "dirichlet"; }

struct AnnulusComponent {
  double density = 0.0;  // with respect to Lebesgue measure dx
  double inner_radius = 0.0;
};

struct CircleComponent {
  double radius = 0.5;
  double density = 0.0;  // with respect to arc length on the circle
};

class DiskMeasure {
 public:
  DiskMeasure() = default;
  DiskMeasure(std::optional<AnnulusComponent> annulus, std::optional<CircleComponent> circle)
      : annulus_(annulus), circle_(circle) {
    if (annulus_ && (!(annulus_->density >= 0.0) || annulus_->inner_radius < 0.0 || annulus_->inner_radius >= 1.0))
      throw InvalidArgument("DiskMeasure: annulus needs density >= 0 and inner radius in [0, 1)");
    if (circle_ && (!(circle_->radius > 0.0 && circle_->radius < 1.0)))
      throw InvalidArgument("DiskMeasure: circle radius must lie in (0, 1)");
  }

  const std::optional<AnnulusComponent>& annulus() const { return annulus_; }
  const std::optional<CircleComponent>& circle() const { return circle_; }

  double total_mass() const {
    double m = 0.0;
    if (annulus_) m += annulus_->density * kPi * (1.0 - annulus_->inner_radius * annulus_->inner_radius);
    if (circle_) m += circle_->density * 2.0 * kPi * circle_->radius;
    return m;
  }

 private:
  std::optional<AnnulusComponent> annulus_;
  std::optional<CircleComponent> circle_;
};

// Chebyshev-Lobatto points on [0, 1], endpoints included.
inline std::vector<double> chebyshev_grid(std::size_t points) {
  if (points < 2) throw InvalidArgument("chebyshev_grid: need at least 2 points");
  std::vector<double> r(points);
  for (std::size_t k = 0; k < points; ++k)
    r[k] = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(k) / static_cast<double>(points - 1)));
  r.front() = 0.0;
  r.back() = 1.0;
  return r;
}

inline double absorbed_limit(double r) { return bessel_i0(kSqrt2 * r) / bessel_i0(kSqrt2); }

// (u_n(r), u(r)): the 1-equilibrium potentials of {1 - 1/n <= |x| <= 1} and of
// the boundary circle.
inline std::pair<double, double> absorbed_potentials(double r, int n) {
  if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("absorbed_potentials: r must lie in [0, 1]");
  if (n < 2) throw InvalidArgument("absorbed_potentials: n must be >= 2");
  const double rho = 1.0 - 1.0 / n;
  const double un = r <= rho ? bessel_i0(kSqrt2 * r) / bessel_i0(kSqrt2 * rho) : 1.0;
  return {un, absorbed_limit(r)};
}

// Outer solutions of u'' + u'/r - 2u = 0 and Green-function constants.
struct GreenConstants {
  double c2;     // Neumann: I1(sqrt 2) / K1(sqrt 2)
  double kappa;  // Dirichlet: K0(sqrt 2) / I0(sqrt 2)
  double c_neumann;
  double c_dirichlet;
};

// The outer solution for the given boundary condition, as a function of r.
inline double outer_solution(Boundary b, double r, const GreenConstants& k) {
  const double z = kSqrt2 * r;
  return b == Boundary::Neumann ? bessel_i0(z) + k.c2 * bessel_k0(z) : bessel_k0(z) - k.kappa * bessel_i0(z);
}

// d/dz of the outer solution, z = sqrt(2) r.
inline double outer_solution_dz(Boundary b, double r, const GreenConstants& k) {
  const double z = kSqrt2 * r;
  return b == Boundary::Neumann ? bessel_i1(z) - k.c2 * bessel_k1(z) : -bessel_k1(z) - k.kappa * bessel_i1(z);
}

// C is fixed by the Wronskian identity W_z(I0, outer)(z) = -(C z)^{-1}, the
// derivative taken in the Bessel argument z = sqrt(2) r; evaluated at z = 1/sqrt 2.
inline const GreenConstants& green_constants() {
  static const GreenConstants k = [] {
    GreenConstants g{bessel_i1(kSqrt2) / bessel_k1(kSqrt2), bessel_k0(kSqrt2) / bessel_i0(kSqrt2), 0.0, 0.0};
    const double r0 = 0.5, z0 = kSqrt2 * r0;
    for (Boundary b : {Boundary::Neumann, Boundary::Dirichlet}) {
      const double w = bessel_i0(z0) * outer_solution_dz(b, r0, g) - bessel_i1(z0) * outer_solution(b, r0, g);
      (b == Boundary::Neumann ? g.c_neumann : g.c_dirichlet) = -1.0 / (z0 * w);
    }
    return g;
  }();
  return k;
}

// Radial average of the 1-resolvent kernel with respect to dx/pi.
inline double green(Boundary b, double r, double s) {
  if (r < 0.0 || s < 0.0 || r > 1.0 || s > 1.0) throw InvalidArgument("green: radii must lie in [0, 1]");
  const double lo = std::min(r, s), hi = std::max(r, s);
  if (hi == 0.0) throw DomainError("green: kernel is infinite at r = s = 0");
  const GreenConstants& k = green_constants();
  const double c = b == Boundary::Neumann ? k.c_neumann : k.c_dirichlet;
  return c * bessel_i0(kSqrt2 * lo) * outer_solution(b, hi, k);
}

inline double neumann_green(double r, double s) { return green(Boundary::Neumann, r, s); }
inline double dirichlet_green(double r, double s) { return green(Boundary::Dirichlet, r, s); }

// int_lo^hi g(r, s) f(s) 2s ds.
template <class F>
double radial_integral(Boundary b, double r, double lo, double hi, F&& f, const QuadratureSpec& spec = {}) {
  if (hi <= lo) return 0.0;
  auto integrand = [&](double s) { return s == 0.0 && r == 0.0 ? 0.0 : green(b, r, s) * f(s) * 2.0 * s; };
  std::vector<double> bp;
  if (r > lo && r < hi) bp.push_back(r);
  return integrate(integrand, lo, hi, spec, bp, "disk radial integral").value;
}

// 1-potential of a radial measure at radius r.
inline double potential(const DiskMeasure& mu, double r, Boundary b = Boundary::Neumann,
                        const QuadratureSpec& spec = {}) {
  double v = 0.0;
  if (const auto& a = mu.annulus(); a && a->density > 0.0)
    v += kPi * a->density * radial_integral(b, r, a->inner_radius, 1.0, [](double) { return 1.0; }, spec);
  if (const auto& c = mu.circle(); c && c->density != 0.0)
    v += c->density * 2.0 * kPi * c->radius * green(b, r, c->radius);
  return v;
}

struct EquilibriumResult {
  int n = 0;
  Boundary boundary = Boundary::Neumann;
  DiskMeasure measure;
  double a_solved = 0.0;
  double a_formula = 0.0;       // -I0'(z)/(sqrt 2 pi I0(z)) with I0' = I1, z = sqrt 2 (1 - 1/n)
  double a_rel_diff = 0.0;    // | |a_solved| - |a_formula| | / |a_formula|
  bool sign_mismatch = false;
  double sup_error = 0.0;     // grid sup of |U_1 nu_n - u_n|
  std::size_t grid_points = 0;
};

inline double formula_a(int n) {
  const double z = kSqrt2 * (1.0 - 1.0 / n);
  return -bessel_i1(z) / (kSqrt2 * kPi * bessel_i0(z));
}

// Solves for the circle density from the identity at r = 0 and checks the
// potential identity on a Chebyshev grid. Never throws on a failed check.
inline EquilibriumResult verify_equilibrium(int n, Boundary b = Boundary::Neumann, std::size_t grid_points = 512,
                                            const QuadratureSpec& spec = {}) {
  if (n < 2) throw InvalidArgument("disk_equilibrium: n must be >= 2");
  const double rho = 1.0 - 1.0 / n;
  EquilibriumResult out;
  out.n = n;
  out.boundary = b;
  out.grid_points = grid_points;
  const DiskMeasure annulus(AnnulusComponent{1.0 / kPi, rho}, std::nullopt);
  const double target = absorbed_potentials(0.0, n).first;
  const double base = potential(annulus, 0.0, b, spec);
  out.a_solved = (target - base) / (2.0 * kPi * rho * green(b, 0.0, rho));
  out.measure = DiskMeasure(AnnulusComponent{1.0 / kPi, rho}, CircleComponent{rho, out.a_solved});
  out.a_formula = formula_a(n);
  out.a_rel_diff = std::abs(std::abs(out.a_solved) - std::abs(out.a_formula)) / std::abs(out.a_formula);
  out.sign_mismatch = (out.a_solved > 0.0) != (out.a_formula > 0.0);

  const auto grid = chebyshev_grid(grid_points);
  std::vector<double> err(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    err[i] = std::abs(potential(out.measure, grid[i], b, spec) - absorbed_potentials(grid[i], n).first);
  });
  out.sup_error = *std::max_element(err.begin(), err.end());
  return out;
}

// Neumann equilibrium measure; throws VerificationFailure when the potential
// identity is off by more than the hard tolerance.
inline EquilibriumResult disk_equilibrium(int n, std::size_t grid_points = 512) {
  EquilibriumResult r = verify_equilibrium(n, Boundary::Neumann, grid_points);
  if (r.sup_error > tolerances().disk_verification_hard)
    throw VerificationFailure("disk_equilibrium: potential identity off by " + std::to_string(r.sup_error) +
                              " at n = " + std::to_string(n));
  return r;
}

// sqrt(2) C I1(sqrt 2) U(1), U = I0(sqrt 2 r) + c2 K0(sqrt 2 r) the Neumann outer solution.
inline double noncauchy_limit() {
  const GreenConstants& k = green_constants();
  return kSqrt2 * k.c_neumann * bessel_i1(kSqrt2) * outer_solution(Boundary::Neumann, 1.0, k);
}

struct NonCauchyResult {
  int n = 0, m = 0;
  double lower_bound = 0.0;  // a_n * grid sup of U_1 sigma_n
  double limit = 0.0;
  double miyadera = 0.0;     // grid sup of U_1 |mu_n - mu_m|
  double sup_u_diff = 0.0;   // grid sup of |u_n - u_m|
  std::size_t grid_points = 0;
};

inline NonCauchyResult disk_noncauchy(int n, int m, std::size_t grid_points = 512, const QuadratureSpec& spec = {}) {
  if (!(m > n && n >= 2)) throw InvalidArgument("disk_noncauchy: need m > n >= 2");
  const EquilibriumResult en = verify_equilibrium(n, Boundary::Neumann, grid_points, spec);
  const EquilibriumResult em = verify_equilibrium(m, Boundary::Neumann, grid_points, spec);
  const double rn = 1.0 - 1.0 / n, rm = 1.0 - 1.0 / m;
  const auto grid = chebyshev_grid(grid_points);
  std::vector<double> circle(grid.size()), total(grid.size()), du(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const double r = grid[i];
    circle[i] = en.a_solved * 2.0 * kPi * rn * green(Boundary::Neumann, r, rn);
    // |mu_n - mu_m| = dx/pi on [rn, rm) plus both circle components.
    total[i] = radial_integral(Boundary::Neumann, r, rn, rm, [](double) { return 1.0; }, spec) + circle[i] +
               em.a_solved * 2.0 * kPi * rm * green(Boundary::Neumann, r, rm);
    du[i] = std::abs(absorbed_potentials(r, n).first - absorbed_potentials(r, m).first);
  });
  NonCauchyResult out;
  out.n = n;
  out.m = m;
  out.grid_points = grid_points;
  out.lower_bound = *std::max_element(circle.begin(), circle.end());
  out.miyadera = *std::max_element(total.begin(), total.end());
  out.sup_u_diff = *std::max_element(du.begin(), du.end());
  out.limit = noncauchy_limit();
  return out;
}

// Grid sup of |u_n - u|.
inline double sup_distance_to_limit(int n, std::size_t grid_points = 512) {
  double worst = 0.0;
  for (double r : chebyshev_grid(grid_points)) {
    const auto [un, u] = absorbed_potentials(r, n);
    worst = std::max(worst, std::abs(un - u));
  }
  return worst;
}

}  // namespace potkit::disk
