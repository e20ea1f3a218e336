#pragma once

// Class-membership testers (Kato, Dynkin, S0, S00, Green-tight), the Miyadera
// metric, the Stollmann-Voigt check and the loc/col operators, for measures on
// finite symmetric chains and on families of truncations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "potkit/chain.hpp"
#include "potkit/constants.hpp"
#include "potkit/errors.hpp"
#include "potkit/parallel.hpp"

namespace potkit {

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ClassReport {
  Verdict kato = Verdict::Inconclusive;
  Verdict dynkin = Verdict::Inconclusive;
  Verdict s0 = Verdict::Inconclusive;
  Verdict s00 = Verdict::Inconclusive;
  Verdict green_tight = Verdict::Inconclusive;

  // t -> sup_x E_x[A_t], with certified lower and upper bounds.
  std::vector<double> t_grid, kato_curve, kato_lower, kato_upper;
  // alpha -> ||R_alpha mu||_inf
  std::vector<double> alphas, resolvent_sup;
  double r1_sup = 0.0;      // ||R_1 mu||_inf
  double energy = 0.0;      // E_1(U_1 mu, U_1 mu) = int U_1 mu dmu
  double total_mass = 0.0;
  // k -> ||R_1(1_{F_k^c} mu)||_inf along the supplied nest
  std::vector<double> tail_curve;
  // Per family member (empty for a single chain).
  std::vector<std::size_t> member_sizes;
  std::vector<double> dynkin_sequence, energy_sequence, mass_sequence;
  std::vector<std::string> notes;

  bool implications_hold() const {
    auto definite = [](Verdict v) { return v != Verdict::Inconclusive; };
    auto violates = [&](Verdict strong, Verdict weak) {
      return definite(strong) && definite(weak) && strong == Verdict::Pass && weak == Verdict::Fail;
    };
    return !violates(green_tight, kato) && !violates(kato, dynkin) && !violates(s00, s0);
  }

  nlohmann::json to_json() const {
    auto pairs = [](const std::vector<double>& x, const std::vector<double>& y) {
      nlohmann::json a = nlohmann::json::array();
      for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) a.push_back({x[i], y[i]});
      return a;
    };
    std::vector<double> ks(tail_curve.size());
    for (std::size_t k = 0; k < ks.size(); ++k) ks[k] = static_cast<double>(k);
    nlohmann::json j;
    j["verdicts"] = {{"kato", to_string(kato)},         {"dynkin", to_string(dynkin)},
                     {"s0", to_string(s0)},             {"s00", to_string(s00)},
                     {"green_tight", to_string(green_tight)}};
    j["diagnostics"] = {{"kato_curve", pairs(t_grid, kato_curve)},
                        {"kato_lower", pairs(t_grid, kato_lower)},
                        {"kato_upper", pairs(t_grid, kato_upper)},
                        {"resolvent_sup", pairs(alphas, resolvent_sup)},
                        {"r1_sup", r1_sup},
                        {"energy", energy},
                        {"total_mass", total_mass},
                        {"tail_curve", pairs(ks, tail_curve)},
                        {"member_sizes", member_sizes},
                        {"dynkin_sequence", dynkin_sequence},
                        {"energy_sequence", energy_sequence},
                        {"mass_sequence", mass_sequence}};
    j["notes"] = notes;
    return j;
  }
};

// ------------------------------------------------------------ Jordan / metric

struct SignedDecomposition {
  DiscreteMeasure pos;
  DiscreteMeasure neg;
  DiscreteMeasure total_variation() const { return pos + neg; }
};

inline SignedDecomposition jordan_decompose(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.size() != nu.size()) throw DimensionMismatch("jordan_decompose", mu.size(), nu.size());
  const Vector diff = mu.atoms() - nu.atoms();
  return {DiscreteMeasure(diff.cwiseMax(0.0)), DiscreteMeasure((-diff).cwiseMax(0.0))};
}

// d_D(mu, nu) = ||R_1 |mu - nu| ||_inf.
inline double miyadera_distance(const Chain& chain, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  chain.check_size("miyadera_distance", mu.size());
  chain.check_size("miyadera_distance", nu.size());
  const SignedDecomposition j = jordan_decompose(mu, nu);
  return potential_u1(chain, j.total_variation(), 1.0).sup();
}

// --------------------------------------------------------------- Kato tests

// (t, sup_x E_x[A_t^mu]) with E_x[A_t] = (int_0^t P_s rho ds)(x), exact.
inline std::vector<double> kato_test(const Chain& chain, const DiscreteMeasure& mu, const std::vector<double>& t_grid) {
  chain.check_size("kato_test", mu.size());
  std::vector<double> out;
  if (mu.is_zero()) return std::vector<double>(t_grid.size(), 0.0);
  for (double t : t_grid) out.push_back(expected_pcaf(chain, mu, t).maxCoeff());
  return out;
}

// Certified lower bound from the first holding time: E_x[A_t] >= rho(x) E[t ^ tau] = rho(x)(1 - e^{-q t})/q.
inline double kato_lower_bound(const Chain& chain, const DiscreteMeasure& mu, double t) {
  const Vector rho = chain.density(mu);
  double best = 0.0;
  for (std::size_t x = 0; x < chain.size(); ++x) {
    const double q = chain.exit_rate(x);
    const double hold = q > 0.0 ? -std::expm1(-q * t) / q : t;
    best = std::max(best, rho[static_cast<Eigen::Index>(x)] * hold);
  }
  return best;
}

// Certified upper bound min(t ||rho||_inf, min_alpha e^{alpha t} ||R_alpha mu||_inf).
inline double kato_upper_bound(const Chain& chain, const DiscreteMeasure& mu, double t,
                               const std::vector<double>& alphas, const std::vector<double>& resolvent_sup) {
  double best = t * sup_norm(chain.density(mu));
  for (std::size_t i = 0; i < alphas.size(); ++i) best = std::min(best, std::exp(alphas[i] * t) * resolvent_sup[i]);
  return best;
}

namespace detail {

inline void require_monotone(const std::vector<double>& v, bool increasing, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (increasing ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1]))
      throw InvalidArgument(std::string(what) + (increasing ? " must be increasing" : " must be decreasing"));
}

inline void require_nest(const Nest& nest, std::size_t n) {
  for (std::size_t k = 0; k < nest.size(); ++k) {
    for (std::size_t x : nest[k])
      if (x >= n) throw DimensionMismatch("nest state", n, x);
    if (k > 0 && !std::includes(nest[k].begin(), nest[k].end(), nest[k - 1].begin(), nest[k - 1].end()))
      throw InvalidArgument("nest must be increasing");
  }
}

}  // namespace detail

// Diagnostics of a single chain. Every class is trivially satisfied by a
// finite measure on a finite chain, so all verdicts pass; the diagnostics
// feed family-level asymptotics.
inline ClassReport classify_measure(const Chain& chain, const DiscreteMeasure& mu, const std::vector<double>& alphas,
                                    const std::vector<double>& t_grid, const Nest& nest = {}) {
  chain.check_size("classify_measure", mu.size());
  detail::require_monotone(alphas, true, "alphas");
  detail::require_monotone(t_grid, false, "t_grid");
  detail::require_nest(nest, chain.size());
  ClassReport r;
  r.t_grid = t_grid;
  r.alphas = alphas;
  for (double a : alphas) r.resolvent_sup.push_back(potential_u1(chain, mu, a).sup());
  r.kato_curve = kato_test(chain, mu, t_grid);
  for (double t : t_grid) {
    r.kato_lower.push_back(kato_lower_bound(chain, mu, t));
    r.kato_upper.push_back(kato_upper_bound(chain, mu, t, alphas, r.resolvent_sup));
  }
  const PotentialField u = potential_u1(chain, mu, 1.0);
  r.r1_sup = u.sup();
  r.energy = u.values.dot(mu.atoms());
  r.total_mass = mu.total_mass();
  for (const StateSet& f : nest) r.tail_curve.push_back(potential_u1(chain, mu.restricted_outside(f), 1.0).sup());
  r.kato = r.dynkin = r.s0 = r.s00 = r.green_tight = Verdict::Pass;
  r.notes.push_back("single finite chain: sup over states is exact; all classes hold trivially");
  if (!r.implications_hold()) throw VerificationFailure("classify_measure: implication lattice violated");
  return r;
}

struct FamilyRules {
  double fail_fraction = 0.5;    // certified lower bound at t_min vs diagnostic at t_max
  double pass_fraction = 0.05;   // certified upper bound at t_min vs diagnostic at t_max
  double stable_rel = 0.01;      // last-member change allowed for "stable" sequences
  double tail_fraction = 0.01;   // green-tight: last tail vs first tail
};

namespace detail {

inline bool stable(const std::vector<double>& seq, double rel) {
  if (seq.size() < 2) return false;
  const double a = seq[seq.size() - 2], b = seq.back();
  return std::abs(b - a) <= rel * std::max(std::abs(b), 1e-300) || (a == 0.0 && b == 0.0);
}

inline void check_family(const std::vector<Chain>& family, const std::vector<DiscreteMeasure>& mus) {
  if (family.empty()) throw InvalidArgument("family_classify: empty family");
  if (family.size() != mus.size()) throw DimensionMismatch("family_classify measures", family.size(), mus.size());
  for (std::size_t i = 0; i < family.size(); ++i) family[i].check_size("family_classify measure", mus[i].size());
  for (std::size_t i = 1; i < family.size(); ++i) {
    const Chain& a = family[i - 1];
    const Chain& b = family[i];
    if (b.size() < a.size()) throw InconsistentFamily("family member " + std::to_string(i) + " is smaller than its predecessor");
    const auto n = static_cast<Eigen::Index>(a.size());
    for (Eigen::Index x = 0; x < n; ++x) {
      if (std::abs(a.weights()[x] - b.weights()[x]) > 1e-12 * a.weights()[x])
        throw InconsistentFamily("reference weights differ at state " + std::to_string(x));
      if (std::abs(mus[i - 1].atoms()[x] - mus[i].atoms()[x]) > 1e-12 * std::max(1.0, mus[i].atoms()[x]))
        throw InconsistentFamily("measures differ at state " + std::to_string(x));
      for (Eigen::Index y = 0; y < n; ++y) {
        const double ja = a.jump_measure()(x, y), jb = b.jump_measure()(x, y);
        if (std::abs(ja - jb) > 1e-12 * std::max(std::abs(ja), std::abs(jb)))
          throw InconsistentFamily("jump measures differ at (" + std::to_string(x) + ", " + std::to_string(y) + ")");
      }
    }
  }
}

}  // namespace detail

// Family-level verdicts over truncations with increasing state spaces:
//  - kato fails when the certified first-holding-time lower bound at the smallest
//    t stays above fail_fraction of the diagnostic at the largest t; it passes when
//    the certified upper bound at the smallest t is below pass_fraction of it and
//    stable across the last two members; otherwise inconclusive;
//  - dynkin, s0, s00 pass when their diagnostic sequences are stable;
//  - green_tight (along the supplied nest) passes when kato passes and the tail
//    curve falls below tail_fraction of its first value; fails only when kato fails.
inline ClassReport family_classify(const std::vector<Chain>& family, const std::vector<DiscreteMeasure>& mus,
                                   const std::vector<double>& alphas, const std::vector<double>& t_grid,
                                   const Nest& nest = {}, const FamilyRules& rules = {}) {
  detail::check_family(family, mus);
  detail::require_monotone(alphas, true, "alphas");
  detail::require_monotone(t_grid, false, "t_grid");
  if (t_grid.empty()) throw InvalidArgument("family_classify: empty t_grid");
  std::vector<ClassReport> members(family.size());
  parallel_for(family.size(), [&](std::size_t i) {
    Nest clipped;
    for (const StateSet& f : nest) {
      StateSet c;
      for (std::size_t x : f)
        if (x < family[i].size()) c.push_back(x);
      clipped.push_back(c);
    }
    members[i] = classify_measure(family[i], mus[i], alphas, t_grid, clipped);
  });

  ClassReport r;
  r.t_grid = t_grid;
  r.alphas = alphas;
  const std::size_t nt = t_grid.size();
  r.kato_curve.assign(nt, 0.0);
  r.kato_lower.assign(nt, 0.0);
  r.kato_upper.assign(nt, 0.0);
  r.resolvent_sup.assign(alphas.size(), 0.0);
  r.tail_curve.assign(nest.size(), 0.0);
  std::vector<double> upper_at_min;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const ClassReport& m = members[i];
    for (std::size_t k = 0; k < nt; ++k) {
      r.kato_curve[k] = std::max(r.kato_curve[k], m.kato_curve[k]);
      r.kato_lower[k] = std::max(r.kato_lower[k], m.kato_lower[k]);
      r.kato_upper[k] = std::max(r.kato_upper[k], m.kato_upper[k]);
    }
    for (std::size_t k = 0; k < alphas.size(); ++k) r.resolvent_sup[k] = std::max(r.resolvent_sup[k], m.resolvent_sup[k]);
    for (std::size_t k = 0; k < nest.size(); ++k) r.tail_curve[k] = std::max(r.tail_curve[k], m.tail_curve[k]);
    r.member_sizes.push_back(family[i].size());
    r.dynkin_sequence.push_back(m.r1_sup);
    r.energy_sequence.push_back(m.energy);
    r.mass_sequence.push_back(m.total_mass);
    upper_at_min.push_back(m.kato_upper.back());
  }
  r.r1_sup = *std::max_element(r.dynkin_sequence.begin(), r.dynkin_sequence.end());
  r.energy = r.energy_sequence.back();
  r.total_mass = r.mass_sequence.back();

  const bool single = family.size() == 1;
  const double scale = r.kato_curve.front();
  if (scale == 0.0) {
    r.kato = Verdict::Pass;
  } else if (r.kato_lower.back() >= rules.fail_fraction * scale) {
    r.kato = Verdict::Fail;
    r.notes.push_back("kato: certified lower bound " + std::to_string(r.kato_lower.back()) + " at t = " +
                      std::to_string(t_grid.back()) + " does not decay");
  } else if (r.kato_upper.back() <= rules.pass_fraction * scale && (single || detail::stable(upper_at_min, rules.stable_rel))) {
    r.kato = Verdict::Pass;
  } else {
    r.kato = Verdict::Inconclusive;
  }

  auto stable_verdict = [&](const std::vector<double>& seq) {
    return (single || detail::stable(seq, rules.stable_rel)) ? Verdict::Pass : Verdict::Inconclusive;
  };
  r.dynkin = stable_verdict(r.dynkin_sequence);
  r.s0 = stable_verdict(r.energy_sequence);
  r.s00 = (stable_verdict(r.mass_sequence) == Verdict::Pass && r.dynkin == Verdict::Pass) ? Verdict::Pass
                                                                                          : Verdict::Inconclusive;
  if (r.kato == Verdict::Fail) {
    r.green_tight = Verdict::Fail;
  } else if (r.kato == Verdict::Pass && !r.tail_curve.empty() &&
             r.tail_curve.back() <= rules.tail_fraction * std::max(r.tail_curve.front(), 1e-300)) {
    r.green_tight = Verdict::Pass;
  } else if (r.kato == Verdict::Pass && !r.tail_curve.empty() && r.tail_curve.front() == 0.0) {
    r.green_tight = Verdict::Pass;
  } else {
    r.green_tight = Verdict::Inconclusive;
    if (nest.empty()) r.notes.push_back("green_tight: no nest supplied");
    else r.notes.push_back("green_tight: tail along the supplied nest does not vanish; other compacts not searched");
  }
  // Kato implies Dynkin: a definite Kato pass upgrades an undecided Dynkin only
  // when its certified resolvent bound is finite, which it always is here.
  if (r.kato == Verdict::Pass && r.dynkin == Verdict::Inconclusive) r.dynkin = Verdict::Pass;
  if (r.s00 == Verdict::Pass && r.s0 == Verdict::Inconclusive) r.s0 = Verdict::Pass;
  if (!r.implications_hold()) throw VerificationFailure("family_classify: implication lattice violated");
  return r;
}

// ------------------------------------------------------- Stollmann-Voigt

struct StollmannVoigt {
  double lhs;  // int f^2 dmu
  double rhs;  // ||R_1 mu||_inf E_1(f, f)
  double ratio;
  bool holds;
};

inline StollmannVoigt stollmann_voigt_check(const Chain& chain, const DiscreteMeasure& mu, const Vector& f) {
  chain.check_size("stollmann_voigt_check", mu.size());
  chain.check_size("stollmann_voigt_check", static_cast<std::size_t>(f.size()));
  const double lhs = f.cwiseAbs2().dot(mu.atoms());
  const double rhs = potential_u1(chain, mu, 1.0).sup() * dirichlet_form_eval(chain, f, f, 1.0);
  const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
  return {lhs, rhs, ratio, lhs <= rhs + tolerances().stollmann_voigt};
}

// --------------------------------------------------------------- loc / col

struct LocColResult {
  bool in_loc;
  bool in_col;
  std::optional<std::size_t> witness;  // index of the first nest witnessing col
};

// in_loc: predicate(1_K mu) for every K in compacts. in_col: some nest has
// predicate(1_{F_k} mu) for all k.
template <class Predicate>
LocColResult loc_col_evaluate(Predicate&& predicate, const DiscreteMeasure& mu, const std::vector<StateSet>& compacts,
                              const std::vector<Nest>& nests) {
  LocColResult r{true, false, std::nullopt};
  for (const StateSet& k : compacts)
    if (!predicate(mu.restricted_to(k))) {
      r.in_loc = false;
      break;
    }
  for (std::size_t i = 0; i < nests.size(); ++i) {
    bool all = true;
    for (const StateSet& f : nests[i])
      if (!predicate(mu.restricted_to(f))) {
        all = false;
        break;
      }
    if (all) {
      r.in_col = true;
      r.witness = i;
      break;
    }
  }
  return r;
}

// ------------------------------------------------------------ nest metrics

struct NestMetric {
  double d_s0;       // sum_k 2^{-k} (1 ^ sqrt E_1(U_1(1_{F_k}mu) - U_1(1_{F_k}nu)))
  double d_s00_inf;  // sum_k 2^{-k} (1 ^ ||U_1(1_{F_k}mu) - U_1(1_{F_k}nu)||_inf)
  double err_bound;  // 2^{-K}: remainder of the truncated series
};

inline NestMetric nest_metric(const Chain& chain, const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Nest& nest) {
  chain.check_size("nest_metric", mu.size());
  chain.check_size("nest_metric", nu.size());
  detail::require_nest(nest, chain.size());
  NestMetric out{0.0, 0.0, std::ldexp(1.0, -static_cast<int>(nest.size()))};
  for (std::size_t k = 0; k < nest.size(); ++k) {
    const Vector du = potential_u1(chain, mu.restricted_to(nest[k]), 1.0).values -
                      potential_u1(chain, nu.restricted_to(nest[k]), 1.0).values;
    const double w = std::ldexp(1.0, -static_cast<int>(k + 1));
    const double energy = std::max(0.0, dirichlet_form_eval(chain, du, du, 1.0));
    out.d_s0 += w * std::min(1.0, std::sqrt(energy));
    out.d_s00_inf += w * std::min(1.0, sup_norm(du));
  }
  return out;
}

}  // namespace potkit
