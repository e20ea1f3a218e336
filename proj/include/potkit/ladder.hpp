#pragma once

// Star-shaped pure-jump process on {0, 1, 2, ...}: m(n) = 4^{-n}, rate 2^n,
// every n >= 1 jumps to 0 and 0 jumps to n with probability 2^{-n}. The
// measure mu = 2^n 1_{n>=1} m has finite mass and bounded 1-potential but is
// not of Kato class.

#include <cmath>
#include <cstddef>
#include <vector>

#include "potkit/chain.hpp"

namespace potkit::ladder {

enum class TailPolicy {
  Kill,        // jumps from 0 to states beyond N kill the process
  ReflectTo0,  // jumps from 0 to states beyond N are suppressed
};

struct LadderSpec {
  std::size_t n = 40;  // states 0..n
  TailPolicy tail_policy = TailPolicy::Kill;
};

inline double pow2(double k) { return std::ldexp(1.0, static_cast<int>(k)); }

// Mass of the jumps from 0 that leave the truncation: sum_{n>N} 2^{-n}.
inline double tail_mass(std::size_t n) { return pow2(-static_cast<double>(n)); }

// The jump rate at 0 is 1 - 2^{-N} on the truncation so that Q(0,.) stays a
// probability vector while the symmetric jump measure J(0,n) = 2^{-n} is
// unchanged. Under the kill policy the lost rate 2^{-N} becomes killing.
inline Chain build_ladder(const LadderSpec& spec) {
  if (spec.n < 2) throw InvalidArgument("ladder truncation needs N >= 2");
  const auto size = static_cast<Eigen::Index>(spec.n + 1);
  Vector m(size), rates(size), kill = Vector::Zero(size);
  Matrix q = Matrix::Zero(size, size);
  const double kept = 1.0 - tail_mass(spec.n);
  for (Eigen::Index x = 0; x < size; ++x) {
    const double xd = static_cast<double>(x);
    m[x] = pow2(-2.0 * xd);
    rates[x] = x == 0 ? kept : pow2(xd);
    if (x > 0) {
      q(x, 0) = 1.0;
      q(0, x) = pow2(-xd) / kept;
    }
  }
  if (spec.tail_policy == TailPolicy::Kill) kill[0] = tail_mass(spec.n);
  return build_chain(std::move(m), std::move(rates), std::move(q), std::move(kill));
}

// atoms(n) = 2^n m(n) = 2^{-n} for n >= 1, atoms(0) = 0.
inline DiscreteMeasure ladder_measure(std::size_t n) {
  Vector a = Vector::Zero(static_cast<Eigen::Index>(n + 1));
  for (std::size_t x = 1; x <= n; ++x) a[static_cast<Eigen::Index>(x)] = pow2(-static_cast<double>(x));
  return DiscreteMeasure(std::move(a));
}

// Density of the ladder measure with respect to m: rho(n) = 2^n 1_{n>=1}.
inline Vector ladder_density(std::size_t n) {
  Vector rho = Vector::Zero(static_cast<Eigen::Index>(n + 1));
  for (std::size_t x = 1; x <= n; ++x) rho[static_cast<Eigen::Index>(x)] = pow2(static_cast<double>(x));
  return rho;
}

// C_0 = sum_{n>=1} 1/(1+2^n), truncated after `terms` terms (tail < 2^{-terms}).
inline double series_c0(std::size_t terms) {
  double s = 0.0;
  for (std::size_t k = terms; k >= 1; --k) s += 1.0 / (1.0 + pow2(static_cast<double>(k)));
  return s;
}

inline double closed_form_u0(std::size_t terms) {
  const double c0 = series_c0(terms);
  return c0 / (2.0 - c0);
}

inline double closed_form_u(std::size_t x, double u0) {
  if (x == 0) return u0;
  const double p = pow2(static_cast<double>(x));
  return p / (1.0 + p) * (u0 + 1.0);
}

// U_1 mu of the untruncated process evaluated at states 0..n. The error
// bound propagates the series tail 2^{-terms} through u(0) = C_0/(2 - C_0).
inline PotentialField ladder_closed_form_potential(std::size_t n, std::size_t tail_terms) {
  if (tail_terms < 40) throw InvalidArgument("closed form needs at least 40 series terms");
  const double c0 = series_c0(tail_terms);
  const double u0 = c0 / (2.0 - c0);
  Vector v(static_cast<Eigen::Index>(n + 1));
  for (std::size_t x = 0; x <= n; ++x) v[static_cast<Eigen::Index>(x)] = closed_form_u(x, u0);
  const double du0 = 2.0 / ((2.0 - c0) * (2.0 - c0));
  return PotentialField{std::move(v), 1.0, Provenance::ClosedForm, du0 * pow2(-static_cast<double>(tail_terms))};
}

// E_n[A_t^mu] >= E_n[∫_0^{t ∧ sigma_0} 2^n ds] = 1 - e^{-2^n t}.
inline double ladder_kato_bound(std::size_t n, double t) {
  if (n < 1) throw InvalidArgument("Kato lower bound is stated for n >= 1");
  if (!(t > 0.0)) throw InvalidArgument("time must be positive");
  return -std::expm1(-pow2(static_cast<double>(n)) * t);
}

struct PotentialRow {
  std::size_t state;
  double solved, closed_form, abs_diff;
};

inline std::vector<PotentialRow> potential_table(std::size_t n, std::size_t tail_terms = 60,
                                                 TailPolicy policy = TailPolicy::Kill) {
  const Chain chain = build_ladder({n, policy});
  const PotentialField solved = potential_u1(chain, ladder_measure(n), 1.0);
  const PotentialField exact = ladder_closed_form_potential(n, tail_terms);
  std::vector<PotentialRow> rows;
  for (std::size_t x = 0; x <= n; ++x)
    rows.push_back({x, solved[x], exact[x], std::abs(solved[x] - exact[x])});
  return rows;
}

struct KatoRow {
  double t, sup_exact, lower_bound;
};

inline std::vector<KatoRow> kato_curve(std::size_t n, const std::vector<double>& times,
                                       TailPolicy policy = TailPolicy::Kill) {
  const Chain chain = build_ladder({n, policy});
  const Vector rho = ladder_density(n);
  std::vector<KatoRow> rows;
  for (double t : times) {
    const Vector e = occupation_integral(chain, t, rho);
    rows.push_back({t, e.maxCoeff(), ladder_kato_bound(n, t)});
  }
  return rows;
}

}  // namespace potkit::ladder
