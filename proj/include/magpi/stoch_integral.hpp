#pragma once

#include <cmath>
#include <complex>

#include "magpi/common.hpp"
#include "magpi/fourier_measure.hpp"
#include "magpi/grid_path.hpp"

namespace magpi {

enum class QuadratureRule { left, midpoint, right };

inline const char* rule_name(QuadratureRule r) {
  switch (r) {
    case QuadratureRule::left: return "left";
    case QuadratureRule::midpoint: return "midpoint";
    default: return "right";
  }
}

// Riemann-sum line integral  sum_j a(c gamma(tau_j) + x) . dgamma_j  along a
// polygonal path, with tau_j the left/mid/right point of interval j.  The
// complex scale c (typically sqrt(i hbar)) enters through the analytic
// continuation of the field; increments stay real.
template <class Pot>
cplx line_integral(const Pot& pot, const GridPath& path, cplx c,
                   const Vec3& shift, QuadratureRule rule) {
  cplx acc = 0.0;
  const int n = path.n_steps();
  for (int j = 0; j < n; ++j) {
    Vec3 base;
    switch (rule) {
      case QuadratureRule::left: base = path.knots[j]; break;
      case QuadratureRule::right: base = path.knots[j + 1]; break;
      default: base = 0.5 * (path.knots[j] + path.knots[j + 1]); break;
    }
    const CVec3 z = c * base + shift;
    acc += dot(pot.eval(z), path.increment(j));
  }
  return acc;
}

namespace detail {

template <class DivFn>
cplx divergence_trapezoid(DivFn&& div_at, const GridPath& path, cplx c,
                          const Vec3& shift) {
  const int n = path.n_steps();
  cplx acc = 0.5 * (div_at(c * path.knots[0] + shift) +
                    div_at(c * path.knots[n] + shift));
  for (int j = 1; j < n; ++j) acc += div_at(c * path.knots[j] + shift);
  return acc * path.dt();
}

}  // namespace detail

// Stratonovich integral as the left (Ito) sum plus the scaled divergence
// correction  (c/2) int_0^t (div a)(c gamma(s) + x) ds  (trapezoid on the
// grid).  For divergence-free fields the correction vanishes and the plain
// left sum is already the Stratonovich value in the mean-square limit.
//
// unscaled_divergence_term = true drops the factor c from the correction
// (useful for probing the sensitivity of results to that scaling); leave it
// false for the consistent definition.
inline cplx stratonovich_integral(const FourierPotential& pot,
                                  const GridPath& path, cplx c,
                                  const Vec3& shift,
                                  bool unscaled_divergence_term = false) {
  cplx acc = line_integral(pot, path, c, shift, QuadratureRule::left);
  const PointMeasure divm = pot.divergence_measure();
  if (!divm.empty()) {
    const cplx corr = detail::divergence_trapezoid(
        [&](const CVec3& z) { return divm.eval(z); }, path, c, shift);
    acc += (unscaled_divergence_term ? cplx(0.5) : 0.5 * c) * corr;
  }
  return acc;
}

inline cplx stratonovich_integral(const LinearPotential& pot,
                                  const GridPath& path, cplx c,
                                  const Vec3& shift,
                                  bool unscaled_divergence_term = false) {
  cplx acc = line_integral(pot, path, c, shift, QuadratureRule::left);
  const double tr = pot.divergence();
  if (tr != 0.0) {
    const cplx pref = unscaled_divergence_term ? cplx(0.5) : 0.5 * c;
    acc += pref * tr * path.t;  // divergence of a linear field is constant
  }
  return acc;
}

// ---- closed-form Fresnel expectations of cylinder sums -------------------
//
// Exact Wiener expectations of the fully scaled discrete sums
//   sum_j a(c w(tau_j)) . c dw_j,   c = sqrt(i hbar),  w started at 0,
// i.e. c * line_integral(pot, w, c, 0, rule).

// Left rule: each term pairs a field value with a future increment, so
// every atom contributes E[e^{ik.(...)}] E[dgamma] = 0; the expectation is
// identically zero at every n.
inline cplx cylinder_left_expectation(const FourierPotential&, double, int,
                                      double) {
  return 0.0;
}

// Right rule at n steps: atoms see their own increment, giving
//   -hbar sum_j dt sum_alpha sum_atoms w k_alpha e^{-i hbar t_{j+1} |k|^2/2}.
inline cplx cylinder_right_expectation(const FourierPotential& pot, double t,
                                       int n, double hbar) {
  cplx acc = 0.0;
  const double dt = t / n;
  for (int j = 0; j < n; ++j) {
    const double t1 = dt * (j + 1);
    for (int alpha = 0; alpha < 3; ++alpha) {
      for (const auto& a : pot.mu[alpha].atoms()) {
        const cplx phase = std::exp(cplx(0.0, -0.5 * hbar * t1 * norm2(a.k)));
        acc += a.w * a.k[alpha] * dt * phase;
      }
    }
  }
  return -hbar * acc;
}

// n -> infinity limit of the right rule:
//   -hbar sum_alpha sum_atoms w k_alpha int_0^t e^{-i hbar s |k|^2/2} ds.
inline cplx cylinder_right_limit(const FourierPotential& pot, double t,
                                 double hbar) {
  cplx acc = 0.0;
  for (int alpha = 0; alpha < 3; ++alpha) {
    for (const auto& a : pot.mu[alpha].atoms()) {
      const cplx theta(0.0, -0.5 * hbar * norm2(a.k));
      const cplx integral =
          (std::abs(theta) < 1e-14) ? cplx(t) : (std::exp(theta * t) - 1.0) / theta;
      acc += a.w * a.k[alpha] * integral;
    }
  }
  return -hbar * acc;
}

// ---- oscillatory Gaussian moments ----------------------------------------

// E[e^{i sqrt(i) zeta X} X^{2k}] for X ~ N(0,1):
//   e^{-i zeta^2 / 2} sum_{j<=k} C(2k,2j) (2j-1)!! (i sqrt(i) zeta)^{2(k-j)},
// i.e. the Gaussian moment polynomial evaluated at the rotated argument.
inline cplx gaussian_oscillatory_moment(double zeta, int k) {
  const cplx i(0.0, 1.0);
  const cplx z = i * std::sqrt(i) * zeta;
  auto binom = [](int n, int r) {
    double b = 1.0;
    for (int q = 0; q < r; ++q) b = b * (n - q) / (q + 1);
    return b;
  };
  auto double_fact = [](int n) {  // (-1)!! = 1
    double f = 1.0;
    for (int q = n; q >= 2; q -= 2) f *= q;
    return f;
  };
  cplx s = 0.0;
  for (int j = 0; j <= k; ++j)
    s += binom(2 * k, 2 * j) * double_fact(2 * j - 1) *
         std::pow(z, 2.0 * (k - j));
  return std::exp(-i * zeta * zeta * 0.5) * s;
}

}  // namespace magpi
