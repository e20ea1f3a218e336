#pragma once

// Brownian motion on R^d (d >= 3, generator Delta/2) and the power-law
// measures |x|^{-beta} dx: the 1-resolvent kernel, the Kato integral test,
// region-wise energy probes and the exact threshold classification.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "potkit/bessel.hpp"
#include "potkit/constants.hpp"
#include "potkit/errors.hpp"
#include "potkit/parallel.hpp"
#include "potkit/quadrature.hpp"

namespace potkit::bm {

struct PowerLawMeasure {
  int d = 3;
  double beta = 0.0;
};

inline void check_dimension(int d) {
  if (d < 3) throw InvalidArgument("bm: dimension must be >= 3, got " + std::to_string(d));
}

// Surface measure of the unit sphere in R^d.
inline double omega(int d) { return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d); }

inline QuadratureSpec kernel_spec() {
  QuadratureSpec s;
  s.rel_tol = 1e-12;
  s.abs_tol = 0.0;
  return s;
}

struct KernelEstimate {
  double value;
  double error;
};

// int_0^inf e^{-t} (2 pi t)^{-d/2} exp(-r^2 / 2t) dt with t = r e^s.
inline KernelEstimate r1_kernel_estimate(int d, double r, const QuadratureSpec& spec = kernel_spec()) {
  check_dimension(d);
  if (!(r > 0.0)) throw InvalidArgument("r1_kernel: r must be > 0");
  const double half_d = 0.5 * d, log_r = std::log(r), log_2pi = std::log(2.0 * kPi);
  auto log_g = [&](double s) {
    return log_r + s - half_d * (log_2pi + log_r + s) - r * std::exp(s) - 0.5 * r * std::exp(-s);
  };
  // Stationary point of log_g: r w^2 + (d/2 - 1) w - r/2 = 0 with w = e^s.
  const double b = half_d - 1.0;
  const double w = r / (b + std::sqrt(b * b + 2.0 * r * r));
  const double s_peak = std::log(w), peak = log_g(s_peak);
  double lo = s_peak, hi = s_peak;
  while (log_g(lo) > peak - 60.0) lo -= 0.25;
  while (log_g(hi) > peak - 60.0) hi += 0.25;
  // Scale out the peak so the quadrature runs on O(1) values.
  const auto q = integrate([&](double s) { return std::exp(log_g(s) - peak); }, lo, hi, spec, {s_peak}, "r1_kernel");
  const double scale = std::exp(peak);
  return {q.value * scale, q.error * scale};
}

inline double r1_kernel(int d, double r, const QuadratureSpec& spec = kernel_spec()) {
  return r1_kernel_estimate(d, r, spec).value;
}

// 2 (2 pi)^{-d/2} (sqrt2 / r)^{d/2-1} K_{d/2-1}(sqrt2 r); for d = 3 this is e^{-sqrt2 r} / (2 pi r).
inline double r1_closed_form(int d, double r) {
  check_dimension(d);
  if (!(r > 0.0)) throw InvalidArgument("r1_closed_form: r must be > 0");
  if (d == 3) return std::exp(-kSqrt2 * r) / (2.0 * kPi * r);
  const double nu = 0.5 * d - 1.0;
  return 2.0 * std::pow(2.0 * kPi, -0.5 * d) * std::pow(kSqrt2 / r, nu) * bessel_k_order(nu, kSqrt2 * r);
}

// int R_1(x, y) dy by radial quadrature of the quadrature kernel, in log r.
inline double kernel_mass(int d, const QuadratureSpec& spec = {}) {
  check_dimension(d);
  const double lo = std::log(1e-10), hi = std::log(80.0);
  std::vector<double> bp;
  for (double v = std::ceil(lo); v < hi; v += 1.0) bp.push_back(v);
  const auto q = integrate(
      [&](double v) {
        const double r = std::exp(v);
        return r1_kernel(d, r) * std::pow(r, d);
      },
      lo, hi, spec, bp, "kernel_mass");
  return omega(d) * q.value;
}

// ---------------------------------------------------------------- Kato test

struct DivergenceFlag {
  std::string reason;
};

using KatoValue = std::variant<double, DivergenceFlag>;

inline bool is_divergent(const KatoValue& v) { return std::holds_alternative<DivergenceFlag>(v); }

inline QuadratureSpec kato_spec() {
  QuadratureSpec s;
  s.rel_tol = 1e-10;
  s.abs_tol = 0.0;
  return s;
}

namespace detail {

// omega_{d-1} int sin^{d-2}(theta) |x - y|^{2-d} dtheta over the angles with
// |x - y| <= a, where |x| = s, |y| = u and theta is the angle between x and y:
// |x - y|^2 = (s - u)^2 + 4 s u sin^2(theta/2).
inline double truncated_newton_average(int d, double s, double u, double a, const QuadratureSpec& spec) {
  const double t = std::abs(s - u);
  if (t >= a) return 0.0;
  const double su4 = 4.0 * s * u;
  if (su4 == 0.0) return omega(d) * std::pow(t, 2.0 - d);
  const double h = std::clamp((a * a - t * t) / su4, 0.0, 1.0);
  const double theta_max = 2.0 * std::asin(std::sqrt(h));
  auto f = [&](double theta) {
    const double q = std::sin(0.5 * theta);
    return std::pow(std::sin(theta), d - 2) * std::pow(t * t + su4 * q * q, 1.0 - 0.5 * d);
  };
  // Feature width in theta is t / sqrt(s u).
  QuadratureSpec as = spec;
  as.max_subdivisions = 20000;
  const auto bp = geometric_breakpoints(0.0, theta_max, 0.25 * t / std::sqrt(s * u));
  return omega(d - 1) * integrate(f, 0.0, theta_max, as, bp, "kato angular").value;
}

}  // namespace detail

// I(x, a) = int_{|x-y| <= a} |x - y|^{2-d} |y|^{-beta} dy for |x| = x_norm,
// integrated in polar coordinates about the origin: the only non-smooth points
// are the power singularity at |y| = 0 and the kink at |y| = |x|.
inline KatoValue kato_integral(int d, double beta, double x_norm, double a, const QuadratureSpec& spec = kato_spec()) {
  check_dimension(d);
  if (!(a > 0.0) || x_norm < 0.0) throw InvalidArgument("kato_integral: need a > 0 and |x| >= 0");
  if (beta >= d)
    return DivergenceFlag{"beta >= d: |y|^{-beta} is not locally integrable at the origin (not Radon)"};
  const double s = x_norm;
  if (s == 0.0) {
    if (beta >= 2.0) return DivergenceFlag{"x = 0, beta >= 2: int_0^a r^{1-beta} dr diverges"};
    const auto q =
        integrate_toward_zero([&](double r) { return std::pow(r, 1.0 - beta); }, 0.0, a, spec, "kato radial", true);
    return omega(d) * q.value;
  }
  QuadratureSpec inner = spec;
  inner.rel_tol = std::max(1e-13, 0.1 * spec.rel_tol);
  auto g = [&](double u) {
    return u == 0.0 ? 0.0 : std::pow(u, d - 1 - beta) * detail::truncated_newton_average(d, s, u, a, inner);
  };
  // Below |y| = s, cluster toward the origin; above, cluster toward s from the
  // right. The truncation switches on across |y| in [a - s, a + s].
  const double lo = std::max(s - a, 0.0);
  QuadratureSpec below = spec, above = spec;
  below.singularity_split = {a - s};
  above.singularity_split = {a - 2.0 * s};
  double total = integrate_toward_zero(g, lo, s, below, "kato radial", true).value;
  total += integrate_toward_zero([&](double t) { return g(s + t); }, 0.0, a, above, "kato radial", true).value;
  return total;
}

// ---------------------------------------------------------- classification

struct Classification {
  bool in_kato;
  bool in_s0;
  bool radon;
};

inline Classification power_law_classify(int d, double beta) {
  check_dimension(d);
  return {beta >= 0.0 && beta < 2.0, 0.5 * d < beta && beta < 0.5 * (d + 2), beta < d};
}

struct Interval {
  double lower;
  double upper;
  bool empty() const { return !(lower < upper); }
};

// The open beta-interval on which |x|^{-beta} dx lies in both the Kato class and S_0.
inline Interval intersection_report(int d) {
  check_dimension(d);
  return {std::max(0.5 * d, 0.0), std::min(0.5 * (d + 2), 2.0)};
}

inline std::vector<double> default_x_grid(std::size_t points = 31) {
  std::vector<double> g{0.0};
  for (std::size_t i = 0; i < points; ++i)
    g.push_back(1e-4 * std::pow(1e6, static_cast<double>(i) / static_cast<double>(points - 1)));
  return g;
}

struct KatoSweepRow {
  double a;
  double sup;  // sup over the x-grid of I(x, a); +inf when divergent
  double argmax;
  bool divergent;
  std::string reason;
};

inline std::vector<KatoSweepRow> kato_sweep(int d, double beta, const std::vector<double>& a_values,
                                            const std::vector<double>& x_grid = default_x_grid(),
                                            const QuadratureSpec& spec = kato_spec()) {
  std::vector<KatoSweepRow> rows;
  for (double a : a_values) {
    std::vector<KatoValue> vals(x_grid.size());
    parallel_for(x_grid.size(), [&](std::size_t i) { vals[i] = kato_integral(d, beta, x_grid[i], a, spec); });
    KatoSweepRow row{a, 0.0, 0.0, false, ""};
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (const auto* flag = std::get_if<DivergenceFlag>(&vals[i])) {
        row.divergent = true;
        row.reason = flag->reason;
        row.sup = HUGE_VAL;
        row.argmax = x_grid[i];
        break;
      }
      const double v = std::get<double>(vals[i]);
      if (v > row.sup) {
        row.sup = v;
        row.argmax = x_grid[i];
      }
    }
    rows.push_back(row);
  }
  return rows;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need >= 2 matched points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// ------------------------------------------------------------ energy probes

// Regions of (x, y) inside the shell inner <= |x|, |y| <= outer:
//   J1: |x|, |y| <= 1 and |x - y| <= 1 (near the origin; critical as inner -> 0)
//   J2: |x|, |y| > 1 and |x - y| <= 1 (away from the origin; critical as outer -> inf)
//   J3: |x - y| > 1 (long range; critical as outer -> inf)
//   J4: |x - y| <= 1 with exactly one of |x|, |y| <= 1
enum class Region { J1, J2, J3, J4 };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::J1: return "J1";
    case Region::J2: return "J2";
    case Region::J3: return "J3";
    case Region::J4: return "J4";
  }
  return "?";
}

struct EnergyOptions {
  // J3 uses the envelope e^{-c |x-y|} in place of R_1 unless exact_j3_kernel is set.
  double j3_c = 1.0;
  bool exact_j3_kernel = false;
  QuadratureSpec spec = [] {
    QuadratureSpec s;
    s.rel_tol = 1e-8;
    s.abs_tol = 0.0;
    return s;
  }();
  std::size_t ladder_steps = 4;  // cutoffs c, c * 2, c * 4, ... (inner) or c / 2, c / 4 (outer)
};

namespace detail {

// omega_{d-1} int sin^{d-2}(theta) |y|^{-beta} dtheta over the angles with
// ylo <= |y| <= yhi, |y|^2 = r^2 + rho^2 + 2 r rho cos(theta).
inline double shell_angular(int d, double beta, double r, double rho, double ylo, double yhi,
                            const QuadratureSpec& spec, bool numeric = false) {
  const double umin = std::abs(r - rho), umax = r + rho;
  const double lo = std::max(ylo, umin), hi = std::min(yhi, umax);
  if (!(hi > lo)) return 0.0;
  if (d == 3 && !numeric) {
    // sin(theta) dtheta = u du / (r rho): exact antiderivative of u^{1-beta}.
    const double e = 2.0 - beta, l = std::log(hi / lo), x = e * l;
    const double rel = std::abs(x) < 1e-8 ? l * (1.0 + 0.5 * x) : std::expm1(x) / e;
    return 2.0 * kPi * std::pow(lo, e) * rel / (r * rho);
  }
  // Generic d: integrate in phi = pi - theta, |y|^2 = (r - rho)^2 + 4 r rho sin^2(phi/2).
  const double sr4 = 4.0 * r * rho, t2 = (r - rho) * (r - rho);
  auto phi_of = [&](double u) {
    const double h = std::clamp((u * u - t2) / sr4, 0.0, 1.0);
    return 2.0 * std::asin(std::sqrt(h));
  };
  const double phi_lo = phi_of(lo), phi_hi = phi_of(hi);
  if (!(phi_hi > phi_lo)) return 0.0;
  auto f = [&](double phi) {
    const double h = std::sin(0.5 * phi);
    return std::pow(std::sin(phi), d - 2) * std::pow(t2 + sr4 * h * h, -0.5 * beta);
  };
  QuadratureSpec as = spec;
  as.max_subdivisions = 20000;
  const auto bp = geometric_breakpoints(phi_lo, phi_hi, 0.25 * std::abs(r - rho) / std::sqrt(r * rho));
  return omega(d - 1) * integrate(f, phi_lo, phi_hi, as, bp, "probe angular").value;
}

inline double exact_kernel(int d, double rho) { return r1_closed_form(d, rho); }

}  // namespace detail

// Truncated energy integral of R_1(x,y) |x|^{-beta} |y|^{-beta} over a region.
inline double energy_region_value(int d, double beta, Region region, double inner, double outer,
                                  const EnergyOptions& opt = {}) {
  check_dimension(d);
  if (!(inner > 0.0 && inner < outer)) throw InvalidArgument("energy_probe: need 0 < inner < outer");
  const QuadratureSpec& spec = opt.spec;
  QuadratureSpec fine = spec;
  fine.rel_tol = std::max(1e-13, 0.1 * spec.rel_tol);
  const double c = opt.j3_c;
  auto kernel = [&](double rho) {
    if (region == Region::J3 && !opt.exact_j3_kernel) return std::exp(-c * rho);
    return detail::exact_kernel(d, rho);
  };

  // x-radius range, y-radius range and rho range per region.
  double xlo = inner, xhi = outer, ylo = inner, yhi = outer, rlo = 0.0, rhi = 1.0;
  double factor = 1.0;
  switch (region) {
    case Region::J1:
      xhi = yhi = std::min(1.0, outer);
      break;
    case Region::J2:
      xlo = ylo = std::max(1.0, inner);
      break;
    case Region::J3:
      rlo = 1.0;
      rhi = 2.0 * outer;
      if (!opt.exact_j3_kernel) rhi = std::min(rhi, 1.0 + 745.0 / c);
      break;
    case Region::J4:
      // |x| <= 1 < |y|, doubled by symmetry.
      xhi = std::min(1.0, outer);
      ylo = std::max(1.0, inner);
      factor = 2.0;
      break;
  }
  if (!(xhi > xlo) || !(yhi > ylo)) return 0.0;

  auto middle = [&](double r) {
    const double top = std::min(rhi, r + yhi);
    const double bottom = std::max(rlo, std::max(ylo - r, r - yhi));
    if (!(top > bottom)) return 0.0;
    std::vector<double> bp;
    for (double k : {std::abs(r - ylo), r + ylo, std::abs(r - yhi), r + yhi, r})
      if (k > bottom && k < top) bp.push_back(k);
    auto g = [&](double rho) {
      return kernel(rho) * std::pow(rho, d - 1) * detail::shell_angular(d, beta, r, rho, ylo, yhi, fine);
    };
    QuadratureSpec ms = fine;
    ms.max_subdivisions = 4000;
    return integrate(g, bottom, top, ms, bp, "probe middle").value;
  };
  auto outer_f = [&](double r) { return std::pow(r, d - 1 - beta) * middle(r); };
  const double v = integrate_toward_zero(outer_f, xlo, xhi, spec, "probe outer").value;
  return factor * omega(d) * v;
}

struct ProbePoint {
  double cutoff;
  double value;
  double slope;  // d log(value) / d log(cutoff) against the previous ladder point
};

struct ProbeResult {
  double value = 0.0;
  double slope = 0.0;
  std::vector<ProbePoint> ladder;
};

inline bool inner_is_critical(Region r) { return r == Region::J1 || r == Region::J4; }

// Evaluates the region over a cutoff ladder ending at the given cutoffs: the
// inner cutoff shrinks for J1/J4, the outer cutoff grows for J2/J3.
inline ProbeResult energy_probe(int d, double beta, Region region, std::pair<double, double> cutoffs,
                                const EnergyOptions& opt = {}) {
  check_dimension(d);
  const auto [inner, outer] = cutoffs;
  if (!(inner > 0.0 && inner < outer)) throw InvalidArgument("energy_probe: need 0 < inner < outer");
  const std::size_t steps = std::max<std::size_t>(2, opt.ladder_steps);
  ProbeResult res;
  res.ladder.resize(steps);
  const bool use_inner = inner_is_critical(region);
  parallel_for(steps, [&](std::size_t i) {
    const double f = std::ldexp(1.0, static_cast<int>(steps - 1 - i));
    const double in = use_inner ? inner * f : inner;
    const double out = use_inner ? outer : outer / f;
    res.ladder[i] = {use_inner ? in : out, energy_region_value(d, beta, region, in, out, opt), 0.0};
  });
  for (std::size_t i = 1; i < steps; ++i) {
    auto& p = res.ladder[i];
    const auto& q = res.ladder[i - 1];
    p.slope = (std::log(p.value) - std::log(q.value)) / (std::log(p.cutoff) - std::log(q.cutoff));
  }
  res.ladder[0].slope = res.ladder.size() > 1 ? res.ladder[1].slope : 0.0;
  res.value = res.ladder.back().value;
  res.slope = res.ladder.back().slope;
  return res;
}

// The analytic exponent of the critical cutoff for the region, or nullopt when
// the region converges in that limit.
inline std::optional<double> analytic_probe_exponent(int d, double beta, Region region) {
  switch (region) {
    case Region::J1: return d + 2 - 2 * beta < 0 ? std::optional<double>(d + 2 - 2 * beta) : std::nullopt;
    case Region::J2:
    case Region::J3: return d - 2 * beta > 0 ? std::optional<double>(d - 2 * beta) : std::nullopt;
    case Region::J4: return std::nullopt;
  }
  return std::nullopt;
}

// J3 values for the envelope constants c in {0.5, 1, sqrt 2}.
inline std::vector<std::pair<double, double>> j3_sensitivity(int d, double beta, double inner, double outer,
                                                             EnergyOptions opt = {}) {
  std::vector<std::pair<double, double>> out;
  for (double c : {0.5, 1.0, kSqrt2}) {
    opt.j3_c = c;
    opt.exact_j3_kernel = false;
    out.emplace_back(c, energy_region_value(d, beta, Region::J3, inner, outer, opt));
  }
  return out;
}

}  // namespace potkit::bm
