#pragma once

// Globally adaptive Gauss-Kronrod (10/21) quadrature with user breakpoints.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "potkit/errors.hpp"

namespace potkit {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  std::size_t max_subdivisions = 2000;
  // Points where the integrand is singular or kinked; used as initial breakpoints.
  std::vector<double> singularity_split;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
  bool converged = true;
};

namespace detail {

inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights for the Kronrod nodes with odd index (1, 3, 5, 7, 9).
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[10];
  double gauss = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

// Integrates f over [a, b]; never throws on budget exhaustion, the result
// carries converged = false instead.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, const QuadratureSpec& spec,
                                    const std::vector<double>& breakpoints = {}) {
  QuadratureResult out;
  if (a == b) return out;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> cuts{a};
  std::vector<double> extra = breakpoints;
  extra.insert(extra.end(), spec.singularity_split.begin(), spec.singularity_split.end());
  std::sort(extra.begin(), extra.end());
  for (double p : extra)
    if (p > cuts.back() && p < b) cuts.push_back(p);
  cuts.push_back(b);

  std::priority_queue<detail::Segment> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto s = detail::gauss_kronrod21(f, cuts[i], cuts[i + 1]);
    total += s.value;
    err += s.error;
    heap.push(s);
  }
  std::size_t subdivisions = 0;
  while (err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (subdivisions >= spec.max_subdivisions) {
      out.converged = false;
      break;
    }
    const detail::Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      out.converged = false;
      break;
    }
    heap.pop();
    const auto left = detail::gauss_kronrod21(f, worst.a, mid);
    const auto right = detail::gauss_kronrod21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sign * total;
  out.error = err;
  out.subdivisions = subdivisions;
  if (err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) out.converged = false;
  return out;
}

// As integrate_adaptive, but throws QuadratureNonconvergence on failure.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureSpec& spec,
                           const std::vector<double>& breakpoints = {}, const char* what = "quadrature") {
  QuadratureResult r = integrate_adaptive(std::forward<F>(f), a, b, spec, breakpoints);
  if (!r.converged) throw QuadratureNonconvergence(what, r.value, r.error);
  return r;
}

// Breakpoints hi 2^{-k} above max(lo, floor), plus that bound itself: resolves a
// feature of width ~floor sitting at the lower end of [lo, hi].
inline std::vector<double> geometric_breakpoints(double lo, double hi, double floor) {
  std::vector<double> pts;
  const double stop = std::max(lo, floor);
  for (double p = 0.5 * hi; p > stop && pts.size() < 1100; p *= 0.5) pts.push_back(p);
  if (stop > lo && stop < hi) pts.push_back(stop);
  std::sort(pts.begin(), pts.end());
  return pts;
}

// Breakpoints p ± (distance) 2^{-k}, k = 1..depth, clipped to (a, b); used to
// resolve an integrable singularity or kink at p.
inline std::vector<double> cluster_points(double p, double a, double b, int depth = 40) {
  std::vector<double> pts;
  if (p > a && p < b) pts.push_back(p);
  for (int k = 1; k <= depth; ++k) {
    const double f = std::ldexp(1.0, -k);
    const double left = p - (p - a) * f;
    const double right = p + (b - p) * f;
    if (left > a && left < b && p > a) pts.push_back(left);
    if (right > a && right < b && p < b) pts.push_back(right);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}


// Integrates g over [lo, hi], 0 <= lo < hi, on dyadic pieces [hi 2^{-k-1}, hi 2^{-k}]
// to resolve an integrable singularity or sharp feature near 0. The sum stops when
// the pieces decay geometrically and the implied tail is below tolerance. With
// `extrapolate`, for integrands known to behave like c t^p near 0, the tail is
// instead extrapolated once successive piece ratios settle, and its uncertainty
// is added to the error.
template <class F>
QuadratureResult integrate_toward_zero(F&& g, double lo, double hi, const QuadratureSpec& spec,
                                       const char* what = "dyadic quadrature", bool extrapolate = false,
                                       int max_levels = 1100) {
  QuadratureResult out;
  if (!(hi > lo) || lo < 0.0) throw InvalidArgument(std::string(what) + ": need 0 <= lo < hi");
  QuadratureSpec piece_spec = spec;  // singularity_split points apply within each piece
  double upper = hi, prev = 0.0, prev_ratio = -1.0;
  int zeros = 0;
  // Extrapolating toward 0 would add mass below a positive lower limit.
  if (lo > 0.0) extrapolate = false;
  for (int k = 0; k < max_levels; ++k) {
    const double lower = std::max(lo, 0.5 * upper);
    piece_spec.abs_tol = std::max(spec.abs_tol, 1e-3 * spec.rel_tol * std::abs(out.value));
    const QuadratureResult p = integrate_adaptive(g, lower, upper, piece_spec);
    out.value += p.value;
    out.error += p.error;
    out.subdivisions += p.subdivisions + 1;
    if (!p.converged) out.converged = false;
    if (lower <= lo) return out;
    zeros = p.value == 0.0 ? zeros + 1 : 0;
    if (zeros >= 3 && out.value == 0.0) return out;
    if (k >= 1 && prev != 0.0) {
      const double ratio = p.value / prev;
      if (ratio >= 0.0 && ratio < 0.99 && prev_ratio >= 0.0 && prev_ratio < 0.99) {
        const double tail = p.value * ratio / (1.0 - ratio);
        const double tail_err =
            extrapolate ? std::abs(tail) * std::abs(ratio - prev_ratio) / (1.0 - ratio) +
                              16.0 * std::numeric_limits<double>::epsilon() * std::abs(tail)
                        : std::abs(tail);
        if (tail_err <= 0.1 * spec.rel_tol * std::abs(out.value + tail)) {
          if (!extrapolate) {
            out.error += tail_err;
            return out;
          }
          out.value += tail;
          out.error += tail_err;
          return out;
        }
      }
      prev_ratio = ratio;
    }
    prev = p.value;
    upper = lower;
  }
  out.converged = false;
  return out;
}

}  // namespace potkit
