#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "magpi/common.hpp"
#include "magpi/rng.hpp"

namespace magpi {

// Discrete complex measure on frequency space: a finite sum of weighted
// point masses w * delta_k.  Fields are evaluated as  f(x) = sum w e^{i k.x},
// which extends verbatim to complex x (entire in each coordinate).
struct FreqAtom {
  Vec3 k{};
  cplx w{};
};

class PointMeasure {
 public:
  PointMeasure() = default;
  explicit PointMeasure(std::vector<FreqAtom> atoms) : atoms_(std::move(atoms)) {
    merge();
  }

  void add(const Vec3& k, cplx w) { atoms_.push_back({k, w}); }

  const std::vector<FreqAtom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  std::size_t size() const { return atoms_.size(); }

  // Sorts atoms and merges points closer than atom_merge_tol in every
  // coordinate.  Keeps the representation canonical so that measures built
  // along different algebraic routes compare equal.
  void merge() {
    if (atoms_.empty()) return;
    std::sort(atoms_.begin(), atoms_.end(),
              [](const FreqAtom& a, const FreqAtom& b) {
                if (a.k[0] != b.k[0]) return a.k[0] < b.k[0];
                if (a.k[1] != b.k[1]) return a.k[1] < b.k[1];
                return a.k[2] < b.k[2];
              });
    std::vector<FreqAtom> out;
    out.reserve(atoms_.size());
    for (const auto& a : atoms_) {
      if (!out.empty() && same_point(out.back().k, a.k)) {
        out.back().w += a.w;
      } else {
        out.push_back(a);
      }
    }
    atoms_ = std::move(out);
  }

  // Removes atoms with |w| <= wtol (after merging duplicates).
  void prune(double wtol) {
    merge();
    std::erase_if(atoms_, [wtol](const FreqAtom& a) {
      return std::abs(a.w) <= wtol;
    });
  }

  double total_variation() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += std::abs(a.w);
    return s;
  }

  // Radius of the smallest origin-centred ball containing the support.
  double support_radius() const {
    double r = 0.0;
    for (const auto& a : atoms_) r = std::max(r, std::sqrt(norm2(a.k)));
    return r;
  }

  cplx eval(const Vec3& x) const {
    cplx s = 0.0;
    for (const auto& a : atoms_) s += a.w * std::exp(cplx(0.0, dot(a.k, x)));
    return s;
  }

  cplx eval(const CVec3& z) const {
    cplx s = 0.0;
    for (const auto& a : atoms_) s += a.w * std::exp(cplx(0.0, 1.0) * dot(a.k, z));
    return s;
  }

  // Measure of the partial derivative d/dx_j: weights pick up a factor i k_j.
  PointMeasure derivative(int j) const {
    PointMeasure d;
    d.atoms_.reserve(atoms_.size());
    for (const auto& a : atoms_) d.atoms_.push_back({a.k, cplx(0.0, a.k[j]) * a.w});
    d.merge();
    return d;
  }

  PointMeasure scaled(cplx s) const {
    PointMeasure r = *this;
    for (auto& a : r.atoms_) a.w *= s;
    return r;
  }

  // Convolution: the measure of the pointwise product of the two fields.
  static PointMeasure convolve(const PointMeasure& a, const PointMeasure& b) {
    PointMeasure c;
    c.atoms_.reserve(a.size() * b.size());
    for (const auto& p : a.atoms_)
      for (const auto& q : b.atoms_)
        c.atoms_.push_back({p.k + q.k, p.w * q.w});
    c.merge();
    return c;
  }

  // Max over atoms of |w - conj(w at -k)|; zero (within tol) iff the field
  // is real-valued on R^3.
  double conjugate_symmetry_defect() const {
    double worst = 0.0;
    for (const auto& a : atoms_) {
      const Vec3 mk = {-a.k[0], -a.k[1], -a.k[2]};
      cplx wm = 0.0;
      for (const auto& b : atoms_) {
        if (same_point(b.k, mk)) {
          wm = b.w;
          break;
        }
      }
      worst = std::max(worst, std::abs(a.w - std::conj(wm)));
    }
    return worst;
  }

 private:
  static bool same_point(const Vec3& a, const Vec3& b) {
    return std::abs(a[0] - b[0]) <= atom_merge_tol &&
           std::abs(a[1] - b[1]) <= atom_merge_tol &&
           std::abs(a[2] - b[2]) <= atom_merge_tol;
  }

  std::vector<FreqAtom> atoms_;
};

// Vector potential with each Cartesian component an almost-periodic field
// given by a PointMeasure.
struct FourierPotential {
  std::array<PointMeasure, 3> mu;

  double support_radius() const {
    return std::max({mu[0].support_radius(), mu[1].support_radius(),
                     mu[2].support_radius()});
  }

  double total_variation() const {
    return mu[0].total_variation() + mu[1].total_variation() +
           mu[2].total_variation();
  }

  CVec3 eval(const CVec3& z) const {
    return {mu[0].eval(z), mu[1].eval(z), mu[2].eval(z)};
  }

  Vec3 eval_real(const Vec3& x) const {
    return {mu[0].eval(x).real(), mu[1].eval(x).real(), mu[2].eval(x).real()};
  }

  // Measure of div a = sum_j d_j a_j.  Exactly divergence-free potentials
  // produce only zero-weight atoms, which prune() removes.
  PointMeasure divergence_measure() const {
    PointMeasure d;
    for (int j = 0; j < 3; ++j) {
      const PointMeasure dj = mu[j].derivative(j);
      for (const auto& a : dj.atoms()) d.add(a.k, a.w);
    }
    d.prune(0.0);
    return d;
  }

  // Residual total variation of the divergence; 0 means Coulomb gauge.
  double coulomb_defect() const { return divergence_measure().total_variation(); }

  // Measure of |a|^2 = sum_j a_j^2 (field product = measure convolution).
  PointMeasure a_squared_measure() const {
    PointMeasure s;
    for (int j = 0; j < 3; ++j) {
      const PointMeasure sq = PointMeasure::convolve(mu[j], mu[j]);
      for (const auto& a : sq.atoms()) s.add(a.k, a.w);
    }
    s.merge();
    return s;
  }

  double max_conjugate_symmetry_defect() const {
    return std::max({mu[0].conjugate_symmetry_defect(),
                     mu[1].conjugate_symmetry_defect(),
                     mu[2].conjugate_symmetry_defect()});
  }
};

// Certified and empirically sampled bounds on sup_x |a(x)|_2.
struct SupNormBound {
  double certified = 0.0;  // sqrt(sum_j TV(mu_j)^2); valid for any x
  double sampled = 0.0;    // max |a| over a deterministic low-discrepancy set
};

inline SupNormBound sup_norm_bound(const FourierPotential& pot,
                                   std::size_t n_points = 16384) {
  SupNormBound b;
  double s = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double tv = pot.mu[j].total_variation();
    s += tv * tv;
  }
  b.certified = std::sqrt(s);
  // Almost-periodic fields approach their sup on a large box; 64 comfortably
  // exceeds the fundamental cells of all bundled presets.
  constexpr double box = 64.0;
  const uint32_t bases[3] = {2, 3, 5};
  for (std::size_t i = 0; i <= n_points; ++i) {
    Vec3 x{};
    if (i > 0)
      for (int d = 0; d < 3; ++d) x[d] = box * halton(i, bases[d]);
    const Vec3 v = pot.eval_real(x);
    b.sampled = std::max(b.sampled, std::sqrt(norm2(v)));
  }
  return b;
}

// ---- perturbation-series radius parameters -------------------------------
//
// r below is max(packet support radius, potential support radius); alpha is
// a certified bound on sup|a| (and alpha_tilde additionally covers a scalar
// potential, see lambda_tilde).

inline double lambda_star(double alpha, double r, double t, double hbar) {
  const double q = (2.0 * alpha * alpha * t / hbar) * (2.0 * r * r * t * hbar + 1.0);
  return 1.0 / std::sqrt(q);
}

// Complex-time variant: the inner factor carries hbar^2 |z| instead of t*hbar.
inline double lambda_star_z(double alpha, double r, cplx z, double hbar) {
  const double az = std::abs(z);
  const double q = 2.0 * alpha * alpha * az * (2.0 * r * r * hbar * hbar * az + 1.0);
  return 1.0 / std::sqrt(q);
}

// Variant used when a scalar potential V rides along with a; both inner
// factors are t/hbar and alpha_tilde = 2*max(hbar*sup|a|, sup|V|).
inline double lambda_tilde(double alpha_tilde, double r, double t, double hbar) {
  const double q =
      (2.0 * alpha_tilde * alpha_tilde * t / hbar) * (2.0 * r * r * t / hbar + 1.0);
  return 1.0 / std::sqrt(q);
}

// ---- presets -------------------------------------------------------------

// a(x) = (cos x2, 0, 0): divergence-free, band-limited, the standard
// oscillatory test field.
inline FourierPotential cos_field() {
  FourierPotential p;
  p.mu[0].add({0.0, 1.0, 0.0}, 0.5);
  p.mu[0].add({0.0, -1.0, 0.0}, 0.5);
  return p;
}

// Single point mass delta at k on the given component (a complex field
// unless paired with its mirror atom).
inline FourierPotential delta_field(const Vec3& k, cplx w, int component) {
  FourierPotential p;
  p.mu[component].add(k, w);
  return p;
}

// ---- linear (constant magnetic field) potentials -------------------------

// a(x) = M x with M real 3x3.  Constant-B gauges (symmetric, Landau) live
// here; zero trace means Coulomb gauge.
struct LinearPotential {
  std::array<std::array<double, 3>, 3> m{};

  Vec3 eval(const Vec3& x) const {
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r[i] += m[i][j] * x[j];
    return r;
  }

  CVec3 eval(const CVec3& z) const {
    CVec3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r[i] += m[i][j] * z[j];
    return r;
  }

  double divergence() const { return m[0][0] + m[1][1] + m[2][2]; }

  Vec3 b_field() const {
    return {m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]};
  }

  // Gram generator M^T M; its eigenvalues control oscillatory-moment decay.
  std::array<std::array<double, 3>, 3> mtm() const {
    std::array<std::array<double, 3>, 3> a{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) a[i][j] += m[l][i] * m[l][j];
    return a;
  }

  std::array<std::array<double, 3>, 3> symmetric_part() const {
    std::array<std::array<double, 3>, 3> s{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s[i][j] = 0.5 * (m[i][j] + m[j][i]);
    return s;
  }
};

// Symmetric gauge a(x) = (1/2) B x x (cross product); curl a = B.
inline LinearPotential symmetric_gauge(const Vec3& b) {
  LinearPotential p;
  // (B x x)_i = eps_{ijk} B_j x_k
  p.m[0][1] = -0.5 * b[2];
  p.m[0][2] = 0.5 * b[1];
  p.m[1][0] = 0.5 * b[2];
  p.m[1][2] = -0.5 * b[0];
  p.m[2][0] = -0.5 * b[1];
  p.m[2][1] = 0.5 * b[0];
  return p;
}

// Landau gauge for B = (0, 0, b): a(x) = (-b x2, 0, 0).
inline LinearPotential landau_gauge(double b) {
  LinearPotential p;
  p.m[0][1] = -b;
  return p;
}

// The constant-field benchmark B = (1, 1, 1) in symmetric gauge.
inline LinearPotential remark_field() { return symmetric_gauge({1.0, 1.0, 1.0}); }

// Largest eigenvalue of M^T M via the closed form for 3x3 symmetric
// matrices (characteristic cubic, trigonometric solution).
inline double max_eig_mtm(const LinearPotential& p) {
  const auto a = p.mtm();
  const double tr = a[0][0] + a[1][1] + a[2][2];
  const double q = tr / 3.0;
  double p2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double d = a[i][j] - (i == j ? q : 0.0);
      p2 += d * d;
    }
  const double pnorm = std::sqrt(p2 / 6.0);
  if (pnorm < 1e-300) return q;
  // det((A - qI)/p)
  std::array<std::array<double, 3>, 3> bm{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) bm[i][j] = (a[i][j] - (i == j ? q : 0.0)) / pnorm;
  const double detb =
      bm[0][0] * (bm[1][1] * bm[2][2] - bm[1][2] * bm[2][1]) -
      bm[0][1] * (bm[1][0] * bm[2][2] - bm[1][2] * bm[2][0]) +
      bm[0][2] * (bm[1][0] * bm[2][1] - bm[1][1] * bm[2][0]);
  const double r = std::clamp(detb / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * pnorm * std::cos(phi);
}

// Critical time below which the full exponential functional of a linear
// potential has finite Gaussian second moments: t* = pi / (4 sqrt(abar)),
// abar = max eigenvalue of M^T M.  (Symmetric gauge, |B| = b: t* = pi/(2b).)
inline double t_star(const LinearPotential& p) {
  const double abar = max_eig_mtm(p);
  if (abar <= 0.0) return std::numeric_limits<double>::infinity();
  return pi / (4.0 * std::sqrt(abar));
}

}  // namespace magpi
