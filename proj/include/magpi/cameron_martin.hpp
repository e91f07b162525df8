#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "magpi/common.hpp"
#include "magpi/grid_path.hpp"

namespace magpi {

// Two orthonormal bases of the Cameron-Martin space H of R^3-valued paths
// on [0, t] with h(0) = 0 and derivative in L^2, under <f, g> = int f'.g' ds.
//
//  * tent: per direction, the classic Schauder system (the "line" s/sqrt(t)
//    followed by dyadic tents).  Elements are interleaved so that the first
//    3 * 2^l elements span exactly the piecewise-linear paths on the dyadic
//    grid with 2^l intervals.
//  * trig: (t = 1 only) three linear elements followed by shells of six
//    trigonometric elements per integer frequency k.
enum class BasisKind { tent, trig };

struct BasisElement {
  BasisKind kind = BasisKind::tent;
  int index = 0;
  double t = 1.0;

  // decoded tent data: direction, level (-1 for the line), dyadic position
  int direction = 0;
  int level = -1;
  int position = 0;

  // decoded trig data: frequency shell (0 = linear triple), member 1..6
  int shell = 0;
  int member = 0;

  Vec3 eval(double s) const;
  Vec3 deriv(double s) const;

  // Polygonal rendering on an n-step uniform grid.
  GridPath render(int n) const {
    GridPath p;
    p.t = t;
    p.knots.resize(n + 1);
    for (int j = 0; j <= n; ++j) p.knots[j] = eval(t * j / n);
    return p;
  }
};

inline BasisElement basis_element(BasisKind kind, int index, double t) {
  if (index < 0) throw precondition_error("basis_element: negative index");
  BasisElement e;
  e.kind = kind;
  e.index = index;
  e.t = t;
  if (kind == BasisKind::tent) {
    if (index < 3) {
      e.direction = index;
      e.level = -1;
      return e;
    }
    // Tents: 3 * 2^L elements precede level L (plus the 3 lines).
    int i = index - 3;
    int level = 0;
    while (i >= 3 * (1 << level)) {
      i -= 3 * (1 << level);
      ++level;
    }
    e.level = level;
    e.position = i / 3;
    e.direction = i % 3;
    return e;
  }
  if (std::abs(t - 1.0) > 1e-12)
    throw precondition_error("trig basis is defined on t = 1 only");
  if (index < 3) {
    e.shell = 0;
    e.member = index + 1;
    e.direction = index;
    return e;
  }
  e.shell = 1 + (index - 3) / 6;
  e.member = 1 + (index - 3) % 6;
  return e;
}

namespace detail {

// Primitive pair for frequency k on [0,1]: C(0) = S(0) = 0, C' = -sin(2pks),
// S' = cos(2pks).
inline void trig_cs(int k, double s, double& c, double& sv) {
  const double w = 2.0 * pi * k;
  c = (std::cos(w * s) - 1.0) / w;
  sv = std::sin(w * s) / w;
}

}  // namespace detail

inline Vec3 BasisElement::eval(double s) const {
  Vec3 v{};
  if (kind == BasisKind::tent) {
    if (level < 0) {
      v[direction] = s / std::sqrt(t);
      return v;
    }
    const double delta = t / (1 << level);
    const double s0 = position * delta;
    const double u = s - s0;
    if (u <= 0.0 || u >= delta) return v;
    const double slope = 1.0 / std::sqrt(delta);  // peak height sqrt(delta)/2
    v[direction] = (u <= 0.5 * delta) ? slope * u : slope * (delta - u);
    return v;
  }
  if (shell == 0) {
    v[direction] = s;
    return v;
  }
  double c, sv;
  detail::trig_cs(shell, s, c, sv);
  const double r2 = std::sqrt(2.0);
  switch (member) {
    case 1: return {c, sv, 0.0};
    case 2: return {c, -sv, 0.0};
    case 3: return {sv, c, 0.0};
    case 4: return {sv, -c, 0.0};
    case 5: return {0.0, 0.0, r2 * c};
    default: return {0.0, 0.0, r2 * sv};
  }
}

inline Vec3 BasisElement::deriv(double s) const {
  Vec3 v{};
  if (kind == BasisKind::tent) {
    if (level < 0) {
      v[direction] = 1.0 / std::sqrt(t);
      return v;
    }
    const double delta = t / (1 << level);
    const double s0 = position * delta;
    const double u = s - s0;
    if (u < 0.0 || u > delta) return v;
    const double slope = 1.0 / std::sqrt(delta);
    v[direction] = (u < 0.5 * delta) ? slope : -slope;
    return v;
  }
  if (shell == 0) {
    v[direction] = 1.0;
    return v;
  }
  const double w = 2.0 * pi * shell;
  const double sn = std::sin(w * s), cs = std::cos(w * s);
  const double r2 = std::sqrt(2.0);
  switch (member) {
    case 1: return {-sn, cs, 0.0};
    case 2: return {-sn, -cs, 0.0};
    case 3: return {cs, -sn, 0.0};
    case 4: return {cs, sn, 0.0};
    case 5: return {0.0, 0.0, -r2 * sn};
    default: return {0.0, 0.0, r2 * cs};
  }
}

namespace detail {

// Breakpoints where the element's derivative may jump.
inline void add_breakpoints(const BasisElement& e, std::vector<double>& out) {
  if (e.kind == BasisKind::tent && e.level >= 0) {
    const double delta = e.t / (1 << e.level);
    const double s0 = e.position * delta;
    out.push_back(s0);
    out.push_back(s0 + 0.5 * delta);
    out.push_back(s0 + delta);
  }
}

// 8-point Gauss-Legendre panel rule; nodes are strictly interior, so
// integrands may be discontinuous at panel boundaries.
template <class Fn>
double gauss8(Fn&& f, double lo, double hi) {
  static const double xg[4] = {0.1834346424956498, 0.5255324099163290,
                               0.7966664774136267, 0.9602898564975363};
  static const double wg[4] = {0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  double s = 0.0;
  for (int q = 0; q < 4; ++q)
    s += wg[q] * (f(c - h * xg[q]) + f(c + h * xg[q]));
  return s * h;
}

}  // namespace detail

// <e_a, e_b> from the analytic derivatives: the integral is split at both
// elements' breakpoints and each smooth piece integrated by interior-node
// Gauss panels at a resolution of n panels across [0, t].  Exact for tent
// pairs, spectrally accurate for trig pairs.
inline double cm_inner_analytic(const BasisElement& a, const BasisElement& b,
                                int n = 1 << 14) {
  std::vector<double> cuts = {0.0, a.t};
  detail::add_breakpoints(a, cuts);
  detail::add_breakpoints(b, cuts);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return std::abs(x - y) < 1e-15; }),
             cuts.end());
  auto f = [&](double s) { return dot(a.deriv(s), b.deriv(s)); };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const int m = std::max(1, static_cast<int>(std::ceil(n * (hi - lo) / a.t)));
    for (int j = 0; j < m; ++j)
      acc += detail::gauss8(f, lo + (hi - lo) * j / m, lo + (hi - lo) * (j + 1) / m);
  }
  return acc;
}

// Exact <e, p> for a polygonal path p: the polygon derivative is constant
// per interval, so the inner product telescopes to (n/t) sum dp_j . de_j.
inline double cm_inner_exact(const BasisElement& e, const GridPath& p) {
  const int n = p.n_steps();
  double acc = 0.0;
  Vec3 prev = e.eval(0.0);
  for (int j = 0; j < n; ++j) {
    const Vec3 next = e.eval(p.t * (j + 1) / n);
    acc += dot(p.increment(j), next - prev);
    prev = next;
  }
  return acc * n / p.t;
}

// Signed-area vector (1/2) int e x e' ds by composite Simpson with dyadic
// refinement until the relative change drops below 1e-10.  Refinement must
// START above the element's oscillation rate: dyadic grids sample a
// power-of-two frequency at a fixed phase lattice, so successive halvings
// agree on an aliased value and a coarse start would terminate on it.
inline Vec3 area_integral(const BasisElement& e) {
  auto f = [&](double s) { return cross(e.eval(s), e.deriv(s)); };
  int n0 = 16;
  if (e.kind == BasisKind::trig)
    while (n0 < 16 * std::max(1, e.shell)) n0 *= 2;
  Vec3 prev = composite_simpson<Vec3>(f, 0.0, e.t, n0);
  for (int n = 2 * n0; n <= (1 << 18); n *= 2) {
    const Vec3 cur = composite_simpson<Vec3>(f, 0.0, e.t, n);
    const double diff = std::sqrt(norm2(cur - prev));
    const double scale = std::max(1e-30, std::sqrt(norm2(cur)));
    prev = cur;
    if (diff / scale < 1e-10 || diff < 1e-15) break;
  }
  return 0.5 * prev;
}

}  // namespace magpi
