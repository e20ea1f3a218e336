#pragma once

// Monte Carlo for paths and PCAFs: exact CTMC simulation, Brownian paths on a
// time grid with bridge refinement, Revuz and Fukushima residual checks, and
// the pathwise L1 convergence of PCAFs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "potkit/chain.hpp"
#include "potkit/errors.hpp"
#include "potkit/parallel.hpp"
#include "potkit/quadrature.hpp"

namespace potkit {

// ------------------------------------------------------------------ RNG

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent stream seed for path `index` of a run seeded with `seed`.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed ^ 0x5851F42D4C957F2DULL;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = a + index * 0xD1B54A32D192ED03ULL;
  return splitmix64(t);
}

// xoshiro256** seeded by splitmix64; uniforms and normals are generated here
// so results do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1].
  double uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------- paths

inline constexpr std::size_t kCemetery = std::numeric_limits<std::size_t>::max();

// Segment i occupies [times[i], times[i+1]) in states[i], with times.back() = end.
// A killed path ends in the cemetery at `lifetime`.
struct PathSample {
  std::vector<double> times;
  std::vector<std::size_t> states;
  double end = 0.0;
  double lifetime = std::numeric_limits<double>::infinity();
  bool killed = false;

  std::size_t segments() const { return states.size(); }
  double segment_start(std::size_t i) const { return times[i]; }
  double segment_end(std::size_t i) const { return i + 1 < times.size() ? times[i + 1] : end; }
  // State at time t (cemetery after a kill).
  std::size_t state_at(double t) const {
    if (killed && t >= lifetime) return kCemetery;
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return states[static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - times.begin() - 1))];
  }
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

// Cumulative jump rows for exact sampling.
class JumpSampler {
 public:
  explicit JumpSampler(const Chain& chain) : chain_(chain) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    cumulative_.resize(chain.size());
    for (Eigen::Index x = 0; x < n; ++x) {
      auto& row = cumulative_[static_cast<std::size_t>(x)];
      double acc = 0.0;
      for (Eigen::Index y = 0; y < n; ++y) {
        acc += chain.jump_kernel()(x, y);
        row.push_back(acc);
      }
      if (!row.empty() && row.back() > 0.0)
        for (double& v : row) v /= row.back();
    }
  }

  const Chain& chain() const { return chain_; }

  PathSample simulate(std::size_t x0, double horizon, Rng& rng) const {
    if (x0 >= chain_.size()) throw DimensionMismatch("simulate_ctmc start state", chain_.size(), x0);
    if (!(horizon > 0.0)) throw InvalidArgument("simulate_ctmc: horizon must be positive");
    PathSample p;
    double t = 0.0;
    std::size_t x = x0;
    for (;;) {
      p.times.push_back(t);
      p.states.push_back(x);
      const double rate = chain_.rates()[static_cast<Eigen::Index>(x)];
      const double kill = chain_.kill()[static_cast<Eigen::Index>(x)];
      const double q = rate + kill;
      if (!(q > 0.0)) break;
      const double hold = rng.exponential(q);
      if (t + hold >= horizon) break;
      t += hold;
      if (rng.uniform() * q <= kill) {
        p.killed = true;
        p.lifetime = t;
        p.end = t;
        return p;
      }
      const auto& row = cumulative_[x];
      const double u = rng.uniform();
      x = static_cast<std::size_t>(std::lower_bound(row.begin(), row.end(), u) - row.begin());
      if (x >= row.size()) x = row.size() - 1;
    }
    p.end = horizon;
    return p;
  }

 private:
  const Chain& chain_;
  std::vector<std::vector<double>> cumulative_;
};

inline PathSample simulate_ctmc(const Chain& chain, std::size_t x0, double horizon, std::uint64_t seed) {
  Rng rng(seed);
  return JumpSampler(chain).simulate(x0, horizon, rng);
}

// int_s^t rho(X_r) dr, exact on the piecewise-constant path (0 in the cemetery).
template <class Density>
double pcaf_accumulate(const PathSample& path, Density&& density, double s, double t) {
  double total = 0.0;
  for (std::size_t i = 0; i < path.segments(); ++i) {
    const double a = std::max(s, path.segment_start(i));
    const double b = std::min(t, path.segment_end(i));
    if (b > a) total += (b - a) * density(path.states[i]);
  }
  return total;
}

template <class Density>
double pcaf_accumulate(const PathSample& path, Density&& density) {
  return pcaf_accumulate(path, std::forward<Density>(density), 0.0, path.end);
}

inline double pcaf_accumulate(const PathSample& path, const Vector& rho, double s, double t) {
  return pcaf_accumulate(path, [&](std::size_t x) { return rho[static_cast<Eigen::Index>(x)]; }, s, t);
}

inline double pcaf_accumulate(const PathSample& path, const Vector& rho) {
  return pcaf_accumulate(path, rho, 0.0, path.end);
}

// int_0^T e^{-alpha r} rho(X_r) dr, exact on segments.
inline double pcaf_discounted(const PathSample& path, const Vector& rho, double alpha) {
  double total = 0.0;
  for (std::size_t i = 0; i < path.segments(); ++i) {
    const double a = path.segment_start(i), b = path.segment_end(i);
    if (b > a) total += rho[static_cast<Eigen::Index>(path.states[i])] * std::exp(-alpha * a) * -std::expm1(-alpha * (b - a)) / alpha;
  }
  return total;
}

// Mean and standard error of per-path values, reduced pairwise.
inline McEstimate summarize(const std::vector<double>& values, std::uint64_t seed) {
  McEstimate e;
  e.n_paths = values.size();
  e.seed = seed;
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  e.mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - e.mean) * (values[i] - e.mean);
  const double var = values.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  e.std_error = std::sqrt(var / n);
  return e;
}

// Runs value(path_index, rng) for every path in parallel with per-path seeds.
template <class F>
McEstimate run_paths(std::size_t n_paths, std::uint64_t seed, F&& value) {
  std::vector<double> out(n_paths);
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (n_paths + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    for (std::size_t i = b * kBlock; i < std::min(n_paths, (b + 1) * kBlock); ++i) {
      Rng rng(path_seed(seed, i));
      out[i] = value(i, rng);
    }
  });
  return summarize(out, seed);
}

// Horizon beyond which e^{-alpha t} weights are below e^{-40}.
inline double discount_horizon(double alpha) { return 40.0 / alpha; }

// E_x[A_t^mu] (alpha = 0) or E_x[int_0^t e^{-alpha s} dA_s] (alpha > 0; t may be
// infinite, then the horizon is discount_horizon(alpha)).
inline McEstimate mc_expectation(const Chain& chain, const DiscreteMeasure& mu, std::size_t x, double t,
                                 std::size_t n_paths, std::uint64_t seed, double alpha = 0.0) {
  if (n_paths < 100) throw InvalidArgument("mc_expectation: need at least 100 paths");
  if (x >= chain.size()) throw DimensionMismatch("mc_expectation start state", chain.size(), x);
  if (alpha < 0.0) throw InvalidArgument("mc_expectation: alpha must be nonnegative");
  if (alpha == 0.0 && !std::isfinite(t)) throw InvalidArgument("mc_expectation: infinite horizon needs alpha > 0");
  const Vector rho = chain.density(mu);
  if (mu.is_zero()) return McEstimate{0.0, 0.0, n_paths, seed};
  const double horizon = std::isfinite(t) ? t : discount_horizon(alpha);
  const JumpSampler sampler(chain);
  return run_paths(n_paths, seed, [&](std::size_t, Rng& rng) {
    const PathSample p = sampler.simulate(x, horizon, rng);
    return alpha > 0.0 ? pcaf_discounted(p, rho, alpha) : pcaf_accumulate(p, rho);
  });
}

// --------------------------------------------------------------- Brownian

struct BmEstimate {
  McEstimate estimate;
  double dt = 0.0;         // final step
  int halvings = 0;
  bool stable = false;     // last two step sizes differ by < 0.5 stderr
  std::vector<double> history;
};

namespace detail {

inline double norm3(const std::array<double, 3>& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

// Midpoint rule for int |X|^{-beta} over a step of length h from a to b, with
// bridge refinement while the midpoint is within 3 sqrt(h) of the origin.
inline double bm_step(const std::array<double, 3>& a, const std::array<double, 3>& b, double h, double beta, Rng& rng,
                      int depth) {
  std::array<double, 3> mid;
  const double sd = 0.5 * std::sqrt(h);
  for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (a[i] + b[i]) + sd * rng.normal();
  const double r = norm3(mid);
  if (depth > 0 && r < 3.0 * std::sqrt(h))
    return bm_step(a, mid, 0.5 * h, beta, rng, depth - 1) + bm_step(mid, b, 0.5 * h, beta, rng, depth - 1);
  return h * std::pow(r, -beta);
}

}  // namespace detail

// E_x[int_0^t |X_s|^{-beta} ds] for Brownian motion in R^3 (generator Delta/2),
// halving dt until successive estimates differ by less than 0.5 stderr.
inline BmEstimate mc_expectation_bm(double beta, const std::array<double, 3>& x, double t, std::size_t n_paths,
                                    std::uint64_t seed, double dt0 = 1e-2, int max_halvings = 6, int refine_depth = 8) {
  if (n_paths < 100) throw InvalidArgument("mc_expectation_bm: need at least 100 paths");
  if (!(t > 0.0) || !(dt0 > 0.0)) throw InvalidArgument("mc_expectation_bm: t and dt must be positive");
  if (beta >= 2.0) throw InvalidArgument("mc_expectation_bm: |x|^{-beta} is not in the Kato class for beta >= 2 in d = 3");
  BmEstimate out;
  double dt = std::min(dt0, t);
  for (int h = 0; h <= max_halvings; ++h, dt *= 0.5) {
    const auto steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
    const double step = t / static_cast<double>(steps);
    const McEstimate e = run_paths(n_paths, seed, [&](std::size_t, Rng& rng) {
      std::array<double, 3> pos = x;
      double total = 0.0;
      const double sd = std::sqrt(step);
      for (std::size_t k = 0; k < steps; ++k) {
        std::array<double, 3> next;
        for (int i = 0; i < 3; ++i) next[i] = pos[i] + sd * rng.normal();
        total += detail::bm_step(pos, next, step, beta, rng, refine_depth);
        pos = next;
      }
      return total;
    });
    out.history.push_back(e.mean);
    const bool settled = out.history.size() >= 2 &&
                         std::abs(e.mean - out.history[out.history.size() - 2]) < 0.5 * std::max(e.std_error, out.estimate.std_error);
    out.estimate = e;
    out.dt = step;
    out.halvings = h;
    if (settled) {
      out.stable = true;
      break;
    }
  }
  return out;
}

// Exact E_x[int_0^t |X_s|^{-beta} ds] in R^3, |x| = a, beta < 2. With the
// one-dimensional occupation kernel H(z) = int_0^t p_s(z) ds = int_|z|^inf erfc(u / sqrt(2t)) du,
// the value is a^{-1} int_0^inf r^{1-beta} D(r) dr with
// D(r) = H(r - a) - H(r + a) = int_{|r-a|}^{r+a} erfc(u / sqrt(2t)) du, which is
// evaluated directly to avoid cancellation. At a = 0 the value is
// t^{1-beta/2}/(1-beta/2) 2^{-beta/2} Gamma((3-beta)/2)/Gamma(3/2).
inline double bm_expected_pcaf(double beta, double a, double t) {
  if (beta >= 2.0) throw InvalidArgument("bm_expected_pcaf: beta must be < 2");
  if (!(t > 0.0) || a < 0.0) throw InvalidArgument("bm_expected_pcaf: need t > 0, |x| >= 0");
  const double e = 1.0 - 0.5 * beta;
  if (a == 0.0)
    return std::pow(t, e) / e * std::pow(2.0, -0.5 * beta) * std::tgamma(0.5 * (3.0 - beta)) / std::tgamma(1.5);
  const double st = std::sqrt(2.0 * t);
  QuadratureSpec inner;
  inner.rel_tol = 1e-13;
  inner.abs_tol = 0.0;
  auto d = [&](double r) {
    const double lo = std::abs(r - a), hi = r + a;
    const double cut = std::min(hi, lo + 30.0 * st);  // erfc is below 1e-390 past 30 widths
    return integrate([&](double u) { return std::erfc(u / st); }, lo, cut, inner, {}, "bm occupation kernel").value;
  };
  auto g = [&](double r) { return r > 0.0 ? std::pow(r, 1.0 - beta) * d(r) : 0.0; };
  QuadratureSpec spec;
  spec.rel_tol = 1e-11;
  spec.abs_tol = 0.0;
  const double hi = a + 40.0 * std::sqrt(t);
  double v = integrate_toward_zero(g, 0.0, a, spec, "bm occupation").value;
  v += integrate(g, a, hi, spec, cluster_points(a, a, hi, 20), "bm occupation").value;
  return v / a;
}

// ---------------------------------------------------------------- Revuz

struct RevuzResult {
  double lhs;     // MC estimate of E_{hm}[int f dA]
  double rhs;     // exact
  double std_error;
  double z_score;
  std::size_t n_paths;
  std::uint64_t seed;
};

namespace detail {

inline double z_score(double lhs, double rhs, double se) {
  if (se > 0.0) return std::abs(lhs - rhs) / se;
  return std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)) ? 0.0 : std::numeric_limits<double>::infinity();
}

// Samples the start state from h m / (h, 1)_m and returns the normalizer.
struct InitialLaw {
  std::vector<double> cumulative;
  double mass = 0.0;
  InitialLaw(const Chain& chain, const Vector& h) {
    for (Eigen::Index x = 0; x < h.size(); ++x) {
      if (h[x] < 0.0) throw InvalidArgument("initial density h must be nonnegative");
      mass += h[x] * chain.weights()[x];
      cumulative.push_back(mass);
    }
  }
  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform() * mass;
    const auto i = static_cast<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    return std::min(i, cumulative.size() - 1);
  }
};

inline RevuzResult revuz_run(const Chain& chain, const DiscreteMeasure& mu, const Vector& f, const Vector& h, double alpha,
                             double t, double rhs, std::size_t n_paths, std::uint64_t seed) {
  chain.check_size("revuz f", static_cast<std::size_t>(f.size()));
  chain.check_size("revuz h", static_cast<std::size_t>(h.size()));
  if (f.size() > 0 && f.minCoeff() < 0.0) throw InvalidArgument("revuz_check: f must be nonnegative");
  const InitialLaw law(chain, h);
  const Vector frho = f.cwiseProduct(chain.density(mu));
  if (law.mass == 0.0 || frho.maxCoeff() == 0.0) return {0.0, rhs, 0.0, detail::z_score(0.0, rhs, 0.0), n_paths, seed};
  const JumpSampler sampler(chain);
  const McEstimate e = run_paths(n_paths, seed, [&](std::size_t, Rng& rng) {
    const std::size_t x0 = law.sample(rng);
    const PathSample p = sampler.simulate(x0, t, rng);
    return law.mass * (alpha > 0.0 ? pcaf_discounted(p, frho, alpha) : pcaf_accumulate(p, frho));
  });
  return {e.mean, rhs, e.std_error, detail::z_score(e.mean, rhs, e.std_error), n_paths, seed};
}

}  // namespace detail

// E_{hm}[int_0^t f(X_s) dA_s^mu] by MC against int (int_0^t P_s h ds) f dmu exactly.
inline RevuzResult revuz_check(const Chain& chain, const DiscreteMeasure& mu, const Vector& f, const Vector& h, double t,
                               std::size_t n_paths, std::uint64_t seed) {
  chain.check_size("revuz h", static_cast<std::size_t>(h.size()));
  chain.check_size("revuz f", static_cast<std::size_t>(f.size()));
  if (!(t > 0.0)) throw InvalidArgument("revuz_check: t must be positive");
  const double rhs = occupation_integral(chain, t, h).cwiseProduct(f).dot(mu.atoms());
  return detail::revuz_run(chain, mu, f, h, 0.0, t, rhs, n_paths, seed);
}

// E_{hm}[int_0^inf e^{-alpha s} f(X_s) dA_s^mu] against int f R_alpha h dmu.
inline RevuzResult revuz_check_alpha(const Chain& chain, const DiscreteMeasure& mu, const Vector& f, const Vector& h,
                                     double alpha, std::size_t n_paths, std::uint64_t seed) {
  chain.check_size("revuz h", static_cast<std::size_t>(h.size()));
  chain.check_size("revuz f", static_cast<std::size_t>(f.size()));
  if (!(alpha > 0.0)) throw InvalidArgument("revuz_check_alpha: alpha must be positive");
  const double rhs = chain.solve(alpha, h).cwiseProduct(f).dot(mu.atoms());
  return detail::revuz_run(chain, mu, f, h, alpha, discount_horizon(alpha), rhs, n_paths, seed);
}

// ------------------------------------------------------------- Fukushima

// E_x[M_t - M_s] with M_t = u(X_t) - u(X_0) - alpha int_0^t u(X_r) dr + A_t^mu and
// u = R_alpha mu; u vanishes in the cemetery.
inline McEstimate fukushima_increment(const Chain& chain, const DiscreteMeasure& mu, double alpha, std::size_t x,
                                      double s, double t, std::size_t n_paths, std::uint64_t seed) {
  if (!(alpha > 0.0) || !(t > s) || s < 0.0) throw InvalidArgument("fukushima_residual: need alpha > 0 and 0 <= s < t");
  if (x >= chain.size()) throw DimensionMismatch("fukushima_residual start state", chain.size(), x);
  if (mu.is_zero()) return McEstimate{0.0, 0.0, n_paths, seed};
  const Vector u = potential_u1(chain, mu, alpha).values;
  const Vector rho = chain.density(mu);
  const Vector integrand = rho - alpha * u;
  const JumpSampler sampler(chain);
  auto value_at = [&](const PathSample& p, double time) {
    const std::size_t y = p.state_at(time);
    return y == kCemetery ? 0.0 : u[static_cast<Eigen::Index>(y)];
  };
  return run_paths(n_paths, seed, [&](std::size_t, Rng& rng) {
    const PathSample p = sampler.simulate(x, t, rng);
    return value_at(p, t) - value_at(p, s) + pcaf_accumulate(p, integrand, s, t);
  });
}

inline McEstimate fukushima_residual(const Chain& chain, const DiscreteMeasure& mu, double alpha, std::size_t x,
                                     double t, std::size_t n_paths, std::uint64_t seed) {
  return fukushima_increment(chain, mu, alpha, x, 0.0, t, n_paths, seed);
}

// ---------------------------------------------------- L1 convergence of PCAFs

struct PcafL1Row {
  std::size_t k;
  double estimate;           // sup over start states of E_x[sup_{t<=T} |A^{mu_k}_t - A^mu_t|]
  double std_error;          // at the maximizing state
  std::size_t argmax;
  double exact_bound;        // sup_x E_x[A^{|mu - mu_k|}_T], exact
  std::size_t violations;    // paths on which the pathwise domination failed
  std::size_t paths_checked;
};

// sup_{t<=T} |int_0^t (rho_k - rho)(X)| on a path, and int_0^T |rho_k - rho|(X).
inline std::pair<double, double> pcaf_difference(const PathSample& p, const Vector& diff) {
  double running = 0.0, sup = 0.0, dominated = 0.0;
  for (std::size_t i = 0; i < p.segments(); ++i) {
    const double d = p.segment_end(i) - p.segment_start(i);
    const double v = diff[static_cast<Eigen::Index>(p.states[i])];
    running += d * v;
    dominated += d * std::abs(v);
    sup = std::max(sup, std::abs(running));
  }
  return {sup, dominated};
}

inline std::vector<PcafL1Row> pcaf_l1_convergence(const Chain& chain, const std::vector<DiscreteMeasure>& mu_seq,
                                                  const DiscreteMeasure& mu, double T, std::size_t n_paths,
                                                  std::uint64_t seed) {
  if (!(T > 0.0)) throw InvalidArgument("pcaf_l1_convergence: T must be positive");
  chain.check_size("pcaf_l1_convergence measure", mu.size());
  const Vector rho = chain.density(mu);
  const JumpSampler sampler(chain);
  const auto n = chain.size();
  std::vector<PcafL1Row> rows;
  for (std::size_t k = 0; k < mu_seq.size(); ++k) {
    chain.check_size("pcaf_l1_convergence sequence member", mu_seq[k].size());
    const Vector diff = chain.density(mu_seq[k]) - rho;
    PcafL1Row row{k, 0.0, 0.0, 0, 0.0, 0, 0};
    row.exact_bound = expected_pcaf(chain, DiscreteMeasure(diff.cwiseAbs().cwiseProduct(chain.weights())), T).maxCoeff();
    std::vector<std::size_t> violations(n, 0);
    std::vector<McEstimate> per_state(n);
    for (std::size_t x = 0; x < n; ++x) {
      std::vector<char> bad(n_paths, 0);
      per_state[x] = run_paths(n_paths, seed + x, [&](std::size_t i, Rng& rng) {
        const PathSample p = sampler.simulate(x, T, rng);
        const auto [sup, dominated] = pcaf_difference(p, diff);
        if (sup > dominated) bad[i] = 1;
        return sup;
      });
      violations[x] = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
    }
    for (std::size_t x = 0; x < n; ++x) {
      if (x == 0 || per_state[x].mean > row.estimate) {
        row.estimate = per_state[x].mean;
        row.std_error = per_state[x].std_error;
        row.argmax = x;
      }
      row.violations += violations[x];
    }
    row.paths_checked = n * n_paths;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace potkit
