#pragma once

// Modified Bessel functions I0, I1, K0, K1 and K of integer or half-integer
// order. Power series for small arguments, asymptotic expansion or Steed's
// continued fraction above.

#include <cmath>
#include <limits>
#include <string>

#include "potkit/constants.hpp"
#include "potkit/errors.hpp"

namespace potkit {

enum class BesselKind { I0, I1, K0, K1 };

namespace detail {

// I_nu(x) for nu in {0, 1}: series sum (x/2)^{2k+nu} / (k! (k+nu)!).
inline double bessel_i_series(int nu, double x) {
  const double q = 0.25 * x * x;
  double term = nu == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * (k + nu));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// e^{-x} I_nu(x) from the large-argument expansion, x > 30.
inline double bessel_i_asymptotic_scaled(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

inline double bessel_i(int nu, double x) {
  const double ax = std::abs(x);
  double v = ax <= 30.0 ? bessel_i_series(nu, ax) : std::exp(ax) * bessel_i_asymptotic_scaled(nu, ax);
  return (nu == 1 && x < 0.0) ? -v : v;
}

// K0 and K1 for 0 < x <= 2 by the logarithmic power series.
inline void bessel_k_series(double x, double& k0, double& k1) {
  const double q = 0.25 * x * x;
  const double lg = std::log(0.5 * x) + kEulerGamma;
  // K0 = sum q^k/(k!)^2 (H_k - lg), K1 = 1/x + sum (x/2) q^k/(k!(k+1)!) (lg - (H_k + H_{k+1})/2),
  // with lg = ln(x/2) + gamma and H_k the harmonic numbers.
  double term = 1.0, harmonic = 0.0;
  double s0 = -lg;
  double t1 = 0.5 * x;
  double s1 = t1 * (lg - 0.5);
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    s0 += term * (harmonic - lg);
    t1 *= q / (static_cast<double>(k) * (k + 1));
    s1 += t1 * (lg - harmonic - 0.5 / (k + 1));
    if (term < 1e-18 * std::abs(s0) && t1 < 1e-18 * std::abs(s1)) break;
  }
  k0 = s0;
  k1 = 1.0 / x + s1;
}

// K0 and K1 for x > 2 by Steed's method on the second continued fraction.
inline void bessel_k_steed(double x, double& k0, double& k1) {
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 10000; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-17) break;
  }
  h *= a1;
  k0 = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
  k1 = k0 * (x + 0.5 - h) / x;
}

}  // namespace detail

inline double bessel_i0(double x) { return detail::bessel_i(0, x); }
inline double bessel_i1(double x) { return detail::bessel_i(1, x); }

inline void bessel_k01(double x, double& k0, double& k1) {
  if (!(x > 0.0)) throw DomainError("modified Bessel K requires x > 0, got " + std::to_string(x));
  if (x <= 2.0)
    detail::bessel_k_series(x, k0, k1);
  else
    detail::bessel_k_steed(x, k0, k1);
}

inline double bessel_k0(double x) {
  double k0, k1;
  bessel_k01(x, k0, k1);
  return k0;
}

inline double bessel_k1(double x) {
  double k0, k1;
  bessel_k01(x, k0, k1);
  return k1;
}

inline double bessel(BesselKind kind, double x) {
  switch (kind) {
    case BesselKind::I0: return bessel_i0(x);
    case BesselKind::I1: return bessel_i1(x);
    case BesselKind::K0: return bessel_k0(x);
    case BesselKind::K1: return bessel_k1(x);
  }
  throw InvalidArgument("unknown Bessel kind");
}

// K_nu(x) for nu a non-negative integer or half-integer, by upward recurrence
// K_{nu+1} = K_{nu-1} + (2 nu / x) K_nu.
inline double bessel_k_order(double nu, double x) {
  if (!(x > 0.0)) throw DomainError("modified Bessel K requires x > 0, got " + std::to_string(x));
  const double twice = 2.0 * nu;
  if (nu < 0.0 || std::abs(twice - std::round(twice)) > 1e-12)
    throw InvalidArgument("bessel_k_order: order must be a non-negative multiple of 1/2");
  const bool half = static_cast<long>(std::round(twice)) % 2 == 1;
  double lo, hi, order;
  if (half) {
    lo = std::sqrt(kPi / (2.0 * x)) * std::exp(-x);  // K_{1/2}
    hi = lo * (1.0 + 1.0 / x);                       // K_{3/2}
    order = 0.5;
  } else {
    bessel_k01(x, lo, hi);
    order = 0.0;
  }
  while (order + 0.5 < nu) {
    const double next = lo + 2.0 * (order + 1.0) / x * hi;
    lo = hi;
    hi = next;
    order += 1.0;
  }
  return std::abs(order - nu) < 0.25 ? lo : hi;
}

}  // namespace potkit
