#pragma once

// Random instance generators (chains, measures, vectors, subsets) used by the
// property tests and by the acceptance runner.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <cstdint>
#include <random>

#include "potkit/chain.hpp"

namespace potkit::sampling {

// Random symmetric chain on n >= 2 states: a ring plus random chords, random positive
// reference weights, optional killing.
inline Chain random_chain(std::mt19937_64& rng, std::size_t n, bool with_kill) {
  std::uniform_real_distribution<double> u(0.05, 2.0);
  std::bernoulli_distribution chord(0.4);
  const auto size = static_cast<Eigen::Index>(n);
  Vector m(size);
  for (Eigen::Index x = 0; x < size; ++x) m[x] = u(rng);
  Matrix j = Matrix::Zero(size, size);
  for (Eigen::Index x = 0; x < size; ++x) {
    for (Eigen::Index y = x + 1; y < size; ++y) {
      const bool ring = y == x + 1 || (x == 0 && y == size - 1);
      if (ring || chord(rng)) j(x, y) = j(y, x) = u(rng);
    }
  }
  Vector rates(size), kill = Vector::Zero(size);
  Matrix q = Matrix::Zero(size, size);
  for (Eigen::Index x = 0; x < size; ++x) {
    const double out = j.row(x).sum();
    rates[x] = out / m[x];
    if (out > 0.0) q.row(x) = j.row(x) / out;
    if (with_kill) kill[x] = 0.5 * u(rng);
  }
  return build_chain(m, rates, q, kill);
}

inline DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t n, double zero_prob = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::bernoulli_distribution zero(zero_prob);
  Vector a(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = zero(rng) ? 0.0 : u(rng);
  return DiscreteMeasure(a);
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return v;
}

inline StateSet random_subset(std::mt19937_64& rng, std::size_t n, double p = 0.5) {
  std::bernoulli_distribution in(p);
  StateSet s;
  for (std::size_t x = 0; x < n; ++x)
    if (in(rng)) s.push_back(x);
  return s;
}

inline StateSet set_union(const StateSet& a, const StateSet& b) {
  StateSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace potkit::sampling
