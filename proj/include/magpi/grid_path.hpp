#pragma once

#include <cmath>
#include <vector>

#include "magpi/common.hpp"
#include "magpi/rng.hpp"

namespace magpi {

// Piecewise-linear path on the uniform grid {0, t/n, ..., t} with
// gamma(0) = 0, stored by its n+1 knot values.
struct GridPath {
  double t = 1.0;
  std::vector<Vec3> knots;  // size n+1, knots[0] == 0

  int n_steps() const { return static_cast<int>(knots.size()) - 1; }
  double dt() const { return t / n_steps(); }

  Vec3 increment(int j) const { return knots[j + 1] - knots[j]; }

  // Linear interpolation at time s in [0, t].
  Vec3 at(double s) const {
    const int n = n_steps();
    double u = s / t * n;
    int j = static_cast<int>(std::floor(u));
    j = std::max(0, std::min(j, n - 1));
    const double f = u - j;
    return knots[j] + f * (knots[j + 1] - knots[j]);
  }
};

// Cameron-Martin (first-derivative L^2) inner product of two paths on the
// same grid: sum_j (n/t) dx_j . dy_j.
inline double cm_inner(const GridPath& a, const GridPath& b) {
  if (a.n_steps() != b.n_steps() || std::abs(a.t - b.t) > 1e-12)
    throw precondition_error("cm_inner: paths live on different grids");
  const double scale = a.n_steps() / a.t;
  double s = 0.0;
  for (int j = 0; j < a.n_steps(); ++j) s += dot(a.increment(j), b.increment(j));
  return scale * s;
}

inline double cm_norm2(const GridPath& a) { return cm_inner(a, a); }

// Brownian motion sampled at the grid times (the polygonal interpolation of
// a standard 3d Wiener path).  Increment j uses RNG step index j, so a path
// with fewer steps on the same seed/sample is NOT a coarsening; use
// coarsen() for common-random-number comparisons across resolutions.
inline GridPath sample_brownian(double t, int n, uint64_t seed,
                                uint64_t sample_index) {
  GridPath p;
  p.t = t;
  p.knots.assign(n + 1, Vec3{});
  const double sdt = std::sqrt(t / n);
  for (int j = 0; j < n; ++j) {
    const Vec3 g = normal_triple(seed, sample_index, static_cast<uint32_t>(j));
    p.knots[j + 1] = p.knots[j] + sdt * g;
  }
  return p;
}

// Keeps every (n/m)-th knot; m must divide n.
inline GridPath coarsen(const GridPath& p, int m) {
  const int n = p.n_steps();
  if (m <= 0 || n % m != 0)
    throw precondition_error("coarsen: target step count must divide n");
  const int stride = n / m;
  GridPath q;
  q.t = p.t;
  q.knots.reserve(m + 1);
  for (int j = 0; j <= m; ++j) q.knots.push_back(p.knots[j * stride]);
  return q;
}

// (1/2) integral gamma x dgamma over the polygon (vector of signed
// projected areas).  Exact for piecewise-linear paths: the shoelace sum
// (1/2) sum_j gamma_j x gamma_{j+1}.
inline Vec3 levy_area(const GridPath& p) {
  Vec3 a{};
  for (int j = 0; j < p.n_steps(); ++j) {
    const Vec3 c = cross(p.knots[j], p.knots[j + 1]);
    a = a + 0.5 * c;
  }
  return a;
}

}  // namespace magpi
