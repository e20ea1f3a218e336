#pragma once

// Finite symmetric Markov chains: generator, Dirichlet form, resolvents,
// capacities and equilibrium potentials, computed by dense direct solves.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "potkit/constants.hpp"
#include "potkit/errors.hpp"

namespace potkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Sorted list of distinct state indices.
using StateSet = std::vector<std::size_t>;
// Increasing sequence of state sets F_1 ⊂ F_2 ⊂ ...
using Nest = std::vector<StateSet>;

inline StateSet state_range(std::size_t first, std::size_t last_inclusive) {
  StateSet s;
  for (std::size_t i = first; i <= last_inclusive; ++i) s.push_back(i);
  return s;
}

inline std::vector<bool> membership(const StateSet& set, std::size_t n) {
  std::vector<bool> in(n, false);
  for (std::size_t x : set) {
    if (x >= n) throw InvalidArgument("state " + std::to_string(x) + " outside 0.." + std::to_string(n - 1));
    in[x] = true;
  }
  return in;
}

enum class Provenance { ExactSolve, ClosedForm, Quadrature, MonteCarlo };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::ExactSolve: return "exact-solve";
    case Provenance::ClosedForm: return "closed-form";
    case Provenance::Quadrature: return "quadrature";
    case Provenance::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

// Atomic measure on the states of a chain; atoms are masses, not densities.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  explicit DiscreteMeasure(Vector atoms) : atoms_(std::move(atoms)) {
    for (Eigen::Index i = 0; i < atoms_.size(); ++i) {
      if (!(atoms_[i] >= 0.0) || !std::isfinite(atoms_[i]))
        throw InvalidArgument("measure atom " + std::to_string(i) + " is negative or not finite");
    }
  }

  static DiscreteMeasure zero(std::size_t n) { return DiscreteMeasure(Vector::Zero(static_cast<Eigen::Index>(n))); }

  const Vector& atoms() const noexcept { return atoms_; }
  double operator[](std::size_t x) const { return atoms_[static_cast<Eigen::Index>(x)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(atoms_.size()); }
  double total_mass() const { return atoms_.sum(); }

  double mass_of(const StateSet& set) const {
    double s = 0.0;
    for (std::size_t x : set) s += (*this)[x];
    return s;
  }

  // 1_set * mu
  DiscreteMeasure restricted_to(const StateSet& set) const {
    const auto in = membership(set, size());
    Vector a = atoms_;
    for (std::size_t x = 0; x < size(); ++x)
      if (!in[x]) a[static_cast<Eigen::Index>(x)] = 0.0;
    return DiscreteMeasure(std::move(a));
  }

  // 1_{set^c} * mu
  DiscreteMeasure restricted_outside(const StateSet& set) const {
    const auto in = membership(set, size());
    Vector a = atoms_;
    for (std::size_t x = 0; x < size(); ++x)
      if (in[x]) a[static_cast<Eigen::Index>(x)] = 0.0;
    return DiscreteMeasure(std::move(a));
  }

  // Embeds into a larger state space (new states carry no mass) or truncates.
  DiscreteMeasure resized(std::size_t n) const {
    Vector a = Vector::Zero(static_cast<Eigen::Index>(n));
    const auto k = static_cast<Eigen::Index>(std::min(n, size()));
    a.head(k) = atoms_.head(k);
    return DiscreteMeasure(std::move(a));
  }

  bool is_zero() const { return atoms_.size() == 0 || atoms_.maxCoeff() == 0.0; }

  friend DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size()) throw DimensionMismatch("measure sum", a.size(), b.size());
    return DiscreteMeasure(a.atoms_ + b.atoms_);
  }

  friend DiscreteMeasure operator*(double c, const DiscreteMeasure& a) { return DiscreteMeasure(c * a.atoms_); }

 private:
  Vector atoms_;
};

// x -> R_alpha mu(x) (or a related potential) on the states of a chain.
struct PotentialField {
  Vector values;
  double alpha = 1.0;
  Provenance provenance = Provenance::ExactSolve;
  double err_bound = 0.0;

  double sup() const { return values.size() == 0 ? 0.0 : values.maxCoeff(); }
  double operator[](std::size_t x) const { return values[static_cast<Eigen::Index>(x)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

// On a finite chain every nonempty set has positive capacity, so the
// quasi-essential supremum is the plain maximum over states.
inline double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

class Chain {
 public:
  // Validates and assembles the chain; L(x,y) = rate(x) Q(x,y) off the
  // diagonal and L(x,x) = -rate(x) - kill(x).
  static Chain build(Vector m, Vector rates, Matrix jump_kernel, Vector kill = Vector()) {
    const Eigen::Index n = m.size();
    if (n == 0) throw InvalidArgument("chain needs at least one state");
    if (rates.size() != n) throw DimensionMismatch("rates", static_cast<std::size_t>(n), static_cast<std::size_t>(rates.size()));
    if (jump_kernel.rows() != n || jump_kernel.cols() != n)
      throw DimensionMismatch("jump kernel", static_cast<std::size_t>(n * n),
                              static_cast<std::size_t>(jump_kernel.rows() * jump_kernel.cols()));
    if (kill.size() == 0) kill = Vector::Zero(n);
    if (kill.size() != n) throw DimensionMismatch("kill", static_cast<std::size_t>(n), static_cast<std::size_t>(kill.size()));

    const Tolerances& tol = tolerances();
    for (Eigen::Index x = 0; x < n; ++x) {
      if (!(m[x] > 0.0) || !std::isfinite(m[x])) throw InvalidArgument("reference weight must be positive at state " + std::to_string(x));
      if (!(rates[x] >= 0.0) || !std::isfinite(rates[x])) throw InvalidArgument("rate must be nonnegative at state " + std::to_string(x));
      if (!(kill[x] >= 0.0) || !std::isfinite(kill[x])) throw InvalidArgument("kill rate must be nonnegative at state " + std::to_string(x));
      if (jump_kernel(x, x) != 0.0) throw InvalidArgument("jump kernel must vanish on the diagonal at state " + std::to_string(x));
      double row = 0.0;
      for (Eigen::Index y = 0; y < n; ++y) {
        if (!(jump_kernel(x, y) >= 0.0)) throw InvalidArgument("jump kernel entries must be nonnegative");
        row += jump_kernel(x, y);
      }
      if (std::abs(row - 1.0) > tol.row_sum) throw NonStochasticRow(static_cast<std::size_t>(x), row);
    }

    Matrix jump_measure(n, n);
    for (Eigen::Index x = 0; x < n; ++x)
      for (Eigen::Index y = 0; y < n; ++y) jump_measure(x, y) = rates[x] * m[x] * jump_kernel(x, y);

    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = x + 1; y < n; ++y) {
        const double a = jump_measure(x, y), b = jump_measure(y, x);
        const double scale = std::max(std::abs(a), std::abs(b));
        if (scale == 0.0) continue;
        const double defect = std::abs(a - b) / scale;
        if (defect > tol.symmetry_rel) throw SymmetryViolation(static_cast<std::size_t>(x), static_cast<std::size_t>(y), defect);
      }
    }

    Chain c;
    c.m_ = std::move(m);
    c.rates_ = std::move(rates);
    c.kill_ = std::move(kill);
    c.q_ = std::move(jump_kernel);
    c.jump_measure_ = 0.5 * (jump_measure + jump_measure.transpose());
    c.generator_.resize(n, n);
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < n; ++y) c.generator_(x, y) = c.rates_[x] * c.q_(x, y);
      c.generator_(x, x) = -c.rates_[x] - c.kill_[x];
    }
    c.build_caches();
    return c;
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(m_.size()); }
  const Vector& weights() const noexcept { return m_; }
  const Vector& rates() const noexcept { return rates_; }
  const Vector& kill() const noexcept { return kill_; }
  const Matrix& jump_kernel() const noexcept { return q_; }
  // Symmetric jump measure J(x,y) = rate(x) m(x) Q(x,y).
  const Matrix& jump_measure() const noexcept { return jump_measure_; }
  const Matrix& generator() const noexcept { return generator_; }
  bool is_conservative() const { return kill_.maxCoeff() == 0.0; }
  double total_weight() const { return m_.sum(); }

  // Total exit rate rate(x) + kill(x) of the holding time at x.
  double exit_rate(std::size_t x) const {
    const auto i = static_cast<Eigen::Index>(x);
    return rates_[i] + kill_[i];
  }

  // Density of mu with respect to m.
  Vector density(const DiscreteMeasure& mu) const {
    check_size("measure", mu.size());
    return mu.atoms().cwiseQuotient(m_);
  }

  // Weighted inner product (f, g)_m.
  double inner(const Vector& f, const Vector& g) const {
    check_size("f", static_cast<std::size_t>(f.size()));
    check_size("g", static_cast<std::size_t>(g.size()));
    return (f.cwiseProduct(g).cwiseProduct(m_)).sum();
  }

  // Solves (alpha I - L) u = f.
  Vector solve(double alpha, const Vector& f) const {
    if (!(alpha > 0.0)) throw InvalidArgument("resolvent order must be positive");
    check_size("right-hand side", static_cast<std::size_t>(f.size()));
    Vector u;
    if (alpha == 1.0) {
      u = lu_unit_.solve(f);
    } else {
      const auto n = static_cast<Eigen::Index>(size());
      Matrix a = alpha * Matrix::Identity(n, n) - generator_;
      u = Eigen::PartialPivLU<Matrix>(a).solve(f);
    }
    if (!u.allFinite()) throw SolveFailure("resolvent solve produced non-finite values");
    return u;
  }

  // Spectral data of the symmetrized generator S = M^{1/2} L M^{-1/2}.
  const Vector& sym_eigenvalues() const noexcept { return eigvals_; }
  const Matrix& sym_eigenvectors() const noexcept { return eigvecs_; }
  const Vector& sqrt_weights() const noexcept { return sqrt_m_; }

  void check_size(const char* what, std::size_t got) const {
    if (got != size()) throw DimensionMismatch(what, size(), got);
  }

 private:
  Chain() = default;

  void build_caches() {
    const auto n = static_cast<Eigen::Index>(size());
    lu_unit_ = Eigen::PartialPivLU<Matrix>(Matrix::Identity(n, n) - generator_);
    sqrt_m_ = m_.cwiseSqrt();
    Matrix s(n, n);
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < n; ++y)
        s(x, y) = x == y ? generator_(x, x) : jump_measure_(x, y) / (sqrt_m_[x] * sqrt_m_[y]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    if (eig.info() != Eigen::Success) throw SolveFailure("eigendecomposition of symmetrized generator failed");
    eigvals_ = eig.eigenvalues();
    eigvecs_ = eig.eigenvectors();
  }

  Vector m_, rates_, kill_;
  Matrix q_, jump_measure_, generator_;
  Eigen::PartialPivLU<Matrix> lu_unit_;
  Vector sqrt_m_, eigvals_;
  Matrix eigvecs_;
};

inline Chain build_chain(Vector m, Vector rates, Matrix jump_kernel, Vector kill = Vector()) {
  return Chain::build(std::move(m), std::move(rates), std::move(jump_kernel), std::move(kill));
}

// E(f,g) + alpha (f,g)_m with
// E(f,g) = 1/2 sum_{x,y} (f(x)-f(y))(g(x)-g(y)) J(x,y) + sum_x f g kill m.
inline double dirichlet_form_eval(const Chain& chain, const Vector& f, const Vector& g, double alpha = 0.0) {
  chain.check_size("f", static_cast<std::size_t>(f.size()));
  chain.check_size("g", static_cast<std::size_t>(g.size()));
  if (alpha < 0.0) throw InvalidArgument("form order must be nonnegative");
  const Matrix& j = chain.jump_measure();
  const auto n = static_cast<Eigen::Index>(chain.size());
  double jump = 0.0;
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = x + 1; y < n; ++y) jump += (f[x] - f[y]) * (g[x] - g[y]) * j(x, y);
  double diag = 0.0;
  for (Eigen::Index x = 0; x < n; ++x) diag += (chain.kill()[x] + alpha) * chain.weights()[x] * f[x] * g[x];
  return jump + diag;
}

// u = R_alpha f, i.e. (alpha I - L) u = f.
inline PotentialField resolvent_solve(const Chain& chain, double alpha, const Vector& f) {
  return PotentialField{chain.solve(alpha, f), alpha, Provenance::ExactSolve, 0.0};
}

// U_alpha mu, the alpha-potential with E_alpha(f, U_alpha mu) = ∫ f dmu.
inline PotentialField potential_u1(const Chain& chain, const DiscreteMeasure& mu, double alpha = 1.0) {
  Vector u = chain.solve(alpha, chain.density(mu));
  // The inverse of alpha I - L is entrywise nonnegative; clip rounding noise.
  const double scale = sup_norm(u);
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] < 0.0 && u[i] > -1e-14 * scale) u[i] = 0.0;
  return PotentialField{std::move(u), alpha, Provenance::ExactSolve, 0.0};
}

struct Equilibrium {
  double capacity = 0.0;
  PotentialField potential;
  DiscreteMeasure measure;
};

// 1-equilibrium potential e_A (= 1 on A, 1-harmonic off A), its capacity
// E_1(e_A, e_A) and the equilibrium measure ((I - L) e_A) m on A.
inline Equilibrium capacity_and_equilibrium(const Chain& chain, const StateSet& set) {
  const std::size_t n = chain.size();
  const auto in = membership(set, n);
  Equilibrium eq;
  eq.measure = DiscreteMeasure::zero(n);
  eq.potential = PotentialField{Vector::Zero(static_cast<Eigen::Index>(n)), 1.0, Provenance::ExactSolve, 0.0};
  if (set.empty()) return eq;

  std::vector<Eigen::Index> outside;
  for (std::size_t x = 0; x < n; ++x)
    if (!in[x]) outside.push_back(static_cast<Eigen::Index>(x));

  const Matrix& l = chain.generator();
  Vector e = Vector::Ones(static_cast<Eigen::Index>(n));
  if (!outside.empty()) {
    const auto k = static_cast<Eigen::Index>(outside.size());
    Matrix a(k, k);
    Vector rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index x = outside[static_cast<std::size_t>(i)];
      for (Eigen::Index jj = 0; jj < k; ++jj) {
        const Eigen::Index y = outside[static_cast<std::size_t>(jj)];
        a(i, jj) = (x == y ? 1.0 : 0.0) - l(x, y);
      }
      double s = 0.0;
      for (std::size_t y : set) s += l(x, static_cast<Eigen::Index>(y));
      rhs[i] = s;
    }
    const Vector sol = Eigen::PartialPivLU<Matrix>(a).solve(rhs);
    if (!sol.allFinite()) throw SolveFailure("equilibrium solve produced non-finite values");
    for (Eigen::Index i = 0; i < k; ++i) e[outside[static_cast<std::size_t>(i)]] = sol[i];
  }

  const Vector residual = e - l * e;
  Vector atoms = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t x : set) {
    const auto i = static_cast<Eigen::Index>(x);
    atoms[i] = std::max(0.0, residual[i]) * chain.weights()[i];
  }
  eq.capacity = dirichlet_form_eval(chain, e, e, 1.0);
  eq.potential.values = std::move(e);
  eq.measure = DiscreteMeasure(std::move(atoms));
  return eq;
}

// P_t f = M^{-1/2} V exp(t Lambda) V^T M^{1/2} f.
inline Vector semigroup_apply(const Chain& chain, double t, const Vector& f) {
  chain.check_size("f", static_cast<std::size_t>(f.size()));
  const Matrix& v = chain.sym_eigenvectors();
  Vector coeff = v.transpose() * f.cwiseProduct(chain.sqrt_weights());
  for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff[k] *= std::exp(chain.sym_eigenvalues()[k] * t);
  return (v * coeff).cwiseQuotient(chain.sqrt_weights());
}

// ∫_0^t P_s f ds by the spectral decomposition of the symmetrized generator.
inline Vector occupation_integral(const Chain& chain, double t, const Vector& f) {
  chain.check_size("f", static_cast<std::size_t>(f.size()));
  if (t < 0.0) throw InvalidArgument("time must be nonnegative");
  const Matrix& v = chain.sym_eigenvectors();
  Vector coeff = v.transpose() * f.cwiseProduct(chain.sqrt_weights());
  for (Eigen::Index k = 0; k < coeff.size(); ++k) {
    const double z = chain.sym_eigenvalues()[k] * t;
    const double phi = std::abs(z) < 1e-300 ? 1.0 : std::expm1(z) / z;
    coeff[k] *= t * phi;
  }
  return (v * coeff).cwiseQuotient(chain.sqrt_weights());
}

// ∫_0^t P_s f ds by uniformization: with Λ >= max exit rate and
// P = I + L/Λ, the integral is Λ^{-1} Σ_k Pr[N_{Λt} > k] P^k f.
inline Vector occupation_integral_uniformized(const Chain& chain, double t, const Vector& f,
                                              double tail_tol = 1e-15, std::size_t max_terms = 50'000'000) {
  chain.check_size("f", static_cast<std::size_t>(f.size()));
  const auto n = static_cast<Eigen::Index>(chain.size());
  double rate = 0.0;
  for (std::size_t x = 0; x < chain.size(); ++x) rate = std::max(rate, chain.exit_rate(x));
  if (rate == 0.0 || t == 0.0) return t * f;
  const double lt = rate * t;
  const Matrix p = Matrix::Identity(n, n) + chain.generator() / rate;
  Vector term = f;
  Vector acc = Vector::Zero(n);
  double cdf = 0.0;
  for (std::size_t k = 0;; ++k) {
    if (k >= max_terms) throw SolveFailure("uniformization exceeded the term budget");
    const double kd = static_cast<double>(k);
    const double pmf = std::exp(-lt + kd * std::log(lt) - std::lgamma(kd + 1.0));
    cdf += pmf;
    const double tail = std::max(0.0, 1.0 - cdf);
    acc += tail * term;
    // Past the mode the Poisson tail is dominated by a geometric series in pmf.
    if (kd > lt + 1.0 && (tail < tail_tol || pmf * (kd + 1.0) / (kd + 1.0 - lt) < tail_tol)) break;
    term = p * term;
  }
  return acc / rate;
}

// Exact E_x[A_t^mu] = (∫_0^t P_s rho ds)(x), rho = dmu/dm.
inline Vector expected_pcaf(const Chain& chain, const DiscreteMeasure& mu, double t) {
  return occupation_integral(chain, t, chain.density(mu));
}

inline nlohmann::json chain_to_json(const Chain& chain) {
  const std::size_t n = chain.size();
  nlohmann::json j;
  j["states"] = n;
  std::vector<double> m(n), rates(n), kill(n), q(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto i = static_cast<Eigen::Index>(x);
    m[x] = chain.weights()[i];
    rates[x] = chain.rates()[i];
    kill[x] = chain.kill()[i];
    for (std::size_t y = 0; y < n; ++y) q[x * n + y] = chain.jump_kernel()(i, static_cast<Eigen::Index>(y));
  }
  j["m"] = m;
  j["rates"] = rates;
  j["Q"] = q;
  j["kill"] = kill;
  return j;
}

// Accepts Q either row-major flat (states^2 numbers) or as nested rows.
inline Chain chain_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("states").get<std::size_t>();
    auto to_vector = [n](const nlohmann::json& a, const char* what) {
      const auto v = a.get<std::vector<double>>();
      if (v.size() != n) throw DimensionMismatch(what, n, v.size());
      return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    Vector m = to_vector(j.at("m"), "m");
    Vector rates = to_vector(j.at("rates"), "rates");
    Vector kill = j.contains("kill") ? to_vector(j.at("kill"), "kill") : Vector::Zero(static_cast<Eigen::Index>(n));
    Matrix q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto& jq = j.at("Q");
    if (!jq.empty() && jq.front().is_array()) {
      if (jq.size() != n) throw DimensionMismatch("Q rows", n, jq.size());
      for (std::size_t x = 0; x < n; ++x) {
        const auto row = jq[x].get<std::vector<double>>();
        if (row.size() != n) throw DimensionMismatch("Q row", n, row.size());
        for (std::size_t y = 0; y < n; ++y) q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = row[y];
      }
    } else {
      const auto flat = jq.get<std::vector<double>>();
      if (flat.size() != n * n) throw DimensionMismatch("Q", n * n, flat.size());
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = flat[x * n + y];
    }
    return build_chain(std::move(m), std::move(rates), std::move(q), std::move(kill));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed chain document: ") + e.what());
  }
}

}  // namespace potkit
