#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "magpi/common.hpp"
#include "magpi/exponomial.hpp"
#include "magpi/fourier_measure.hpp"

namespace magpi {

// Wave packets as finite atomic measures in frequency space:
//   psi(x) = sum_p w_p e^{i y_p . x}.
// The natural norm on this class is the total variation sum |w_p|; all
// series bounds below are stated in it.
struct PacketAtom {
  Vec3 y{};
  cplx w{};
};

struct WavePacket {
  std::vector<PacketAtom> atoms;

  void merge() {
    if (atoms.empty()) return;
    std::sort(atoms.begin(), atoms.end(),
              [](const PacketAtom& a, const PacketAtom& b) {
                if (a.y[0] != b.y[0]) return a.y[0] < b.y[0];
                if (a.y[1] != b.y[1]) return a.y[1] < b.y[1];
                return a.y[2] < b.y[2];
              });
    std::vector<PacketAtom> out;
    out.reserve(atoms.size());
    for (const auto& a : atoms) {
      if (!out.empty() && std::abs(out.back().y[0] - a.y[0]) <= atom_merge_tol &&
          std::abs(out.back().y[1] - a.y[1]) <= atom_merge_tol &&
          std::abs(out.back().y[2] - a.y[2]) <= atom_merge_tol) {
        out.back().w += a.w;
      } else {
        out.push_back(a);
      }
    }
    atoms = std::move(out);
  }

  void prune(double wtol) {
    merge();
    std::erase_if(atoms,
                  [wtol](const PacketAtom& a) { return std::abs(a.w) <= wtol; });
  }

  double norm() const {  // total variation
    double s = 0.0;
    for (const auto& a : atoms) s += std::abs(a.w);
    return s;
  }

  // Mean-square (Besicovitch) norm: plane waves at distinct frequencies are
  // orthogonal in the almost-periodic inner product, so this is just the
  // l2 norm of the weights.
  double l2_norm() const {
    double s = 0.0;
    for (const auto& a : atoms) s += std::norm(a.w);
    return std::sqrt(s);
  }

  double support_radius() const {
    double r = 0.0;
    for (const auto& a : atoms) r = std::max(r, std::sqrt(norm2(a.y)));
    return r;
  }

  cplx eval(const Vec3& x) const {
    cplx s = 0.0;
    for (const auto& a : atoms) s += a.w * std::exp(cplx(0.0, dot(a.y, x)));
    return s;
  }

  cplx eval(const CVec3& z) const {
    cplx s = 0.0;
    for (const auto& a : atoms)
      s += a.w * std::exp(cplx(0.0, 1.0) * dot(a.y, z));
    return s;
  }
};

// A packet under a planar Gaussian envelope exp(-(x1^2+x2^2)/(2 sigma^2)),
// for runs that need decaying tails (periodic-box solvers).  The envelope
// is entire of order two, so fresnel-scaled Monte Carlo arguments keep
// integrable tails; steeper super-Gaussian windows would not.
struct GaussianPacket {
  WavePacket packet;
  double sigma = 1.0;

  cplx eval(const Vec3& x) const {
    const double g = (x[0] * x[0] + x[1] * x[1]) / (2.0 * sigma * sigma);
    return std::exp(-g) * packet.eval(x);
  }

  cplx eval(const CVec3& z) const {
    const cplx g = (z[0] * z[0] + z[1] * z[1]) / (2.0 * sigma * sigma);
    return std::exp(-g) * packet.eval(z);
  }
};

// ---- the three elementary operators on packets ---------------------------

// Free evolution over time s: multiplies each atom by e^{-i hbar |y|^2 s/2}.
inline WavePacket apply_free(const WavePacket& p, double s, double hbar) {
  WavePacket out = p;
  for (auto& a : out.atoms)
    a.w *= std::exp(cplx(0.0, -0.5 * hbar * norm2(a.y) * s));
  return out;
}

// First-order coupling i hbar a . grad: an atom (y, w) and a component-j
// frequency atom (k, c) combine to (y + k, -hbar w c y_j).
inline WavePacket apply_first_order(const FourierPotential& pot,
                                    const WavePacket& p, double hbar) {
  WavePacket out;
  for (const auto& a : p.atoms)
    for (int j = 0; j < 3; ++j)
      for (const auto& f : pot.mu[j].atoms())
        out.atoms.push_back({a.y + f.k, -hbar * a.w * f.w * a.y[j]});
  out.merge();
  return out;
}

// Second-order coupling |a|^2 / 2: convolution with half the squared-field
// measure.
inline WavePacket apply_second_order(const FourierPotential& pot,
                                     const WavePacket& p) {
  WavePacket out;
  const PointMeasure sq = pot.a_squared_measure();
  for (const auto& a : p.atoms)
    for (const auto& f : sq.atoms())
      out.atoms.push_back({a.y + f.k, 0.5 * a.w * f.w});
  out.merge();
  return out;
}

// Scalar potential term: plain convolution with the potential's measure.
inline WavePacket apply_scalar(const PointMeasure& v, const WavePacket& p) {
  WavePacket out;
  for (const auto& a : p.atoms)
    for (const auto& f : v.atoms()) out.atoms.push_back({a.y + f.k, a.w * f.w});
  out.merge();
  return out;
}

// ---- perturbation-series terms -------------------------------------------

namespace detail {

struct ChainBranch {
  Vec3 k{};   // frequency shift applied to the current atom
  cplx f{};   // weight factor; first-order factors still need * y_j
  int ygrad = -1;  // >= 0: multiply by current y[ygrad] (gradient coupling)
};

struct ChainContext {
  const FourierPotential* pot = nullptr;
  const PointMeasure* scalar = nullptr;  // optional V
  double hbar = 1.0;
  double t = 1.0;
  // complex-time generalization: prefactor per slot and phase scale.
  // Real time corresponds to prefactor -i/hbar, phase scale hbar/2,
  // simplex horizon t; the diffusive family uses -z, z hbar^2/2, horizon 1.
  cplx slot_prefactor{};
  cplx phase_scale{};
  double horizon = 1.0;
  cplx final_exp_scale{};  // atom weight *= exp(final_exp_scale * |y_n|^2)

  std::vector<ChainBranch> first_order;  // branches of A (plus V if given)
  std::vector<ChainBranch> second_order; // branches of B

  WavePacket* out = nullptr;
};

inline void build_branches(ChainContext& cx) {
  for (int j = 0; j < 3; ++j)
    for (const auto& f : cx.pot->mu[j].atoms())
      cx.first_order.push_back({f.k, -cx.hbar * f.w, j});
  if (cx.scalar)
    for (const auto& f : cx.scalar->atoms())
      cx.first_order.push_back({f.k, f.w, -1});
  const PointMeasure sq = cx.pot->a_squared_measure();
  for (const auto& f : sq.atoms())
    cx.second_order.push_back({f.k, 0.5 * f.w, -1});
}

// Depth-first walk over operator slots.  Each leaf contributes one output
// atom: the accumulated weight times the simplex phase integral of the
// per-slot phase increments theta_j = phase_scale * (|y_j|^2 - |y_{j-1}|^2).
inline void chain_walk(const ChainContext& cx, int slots_left, int a_left,
                       const Vec3& y, cplx w, std::vector<cplx>& thetas) {
  if (slots_left == 0) {
    const cplx simplex = simplex_phase_integral(thetas, cx.horizon);
    const cplx tail = std::exp(cx.final_exp_scale * norm2(y));
    cx.out->atoms.push_back({y, w * simplex * tail});
    return;
  }
  const int b_left = slots_left - a_left;
  auto descend = [&](const ChainBranch& br, int next_a) {
    cplx f = br.f;
    if (br.ygrad >= 0) f *= y[br.ygrad];
    const Vec3 y2 = y + br.k;
    thetas.push_back(cx.phase_scale * (norm2(y2) - norm2(y)));
    chain_walk(cx, slots_left - 1, next_a, y2, w * cx.slot_prefactor * f,
               thetas);
    thetas.pop_back();
  };
  if (a_left > 0)
    for (const auto& br : cx.first_order) descend(br, a_left - 1);
  if (b_left > 0)
    for (const auto& br : cx.second_order) descend(br, a_left);
}

inline WavePacket chain_sum(const ChainContext& cx_in, const WavePacket& psi0,
                            int n, int k) {
  ChainContext cx = cx_in;
  WavePacket out;
  cx.out = &out;
  std::vector<cplx> thetas;
  thetas.reserve(n);
  for (const auto& a : psi0.atoms)
    chain_walk(cx, n, k, a.y, a.w, thetas);
  out.merge();
  return out;
}

inline ChainContext real_time_context(const FourierPotential& pot,
                                      const PhysicalParams& par,
                                      const PointMeasure* scalar) {
  ChainContext cx;
  cx.pot = &pot;
  cx.scalar = scalar;
  cx.hbar = par.hbar;
  cx.t = par.t;
  cx.slot_prefactor = cplx(0.0, -1.0) / par.hbar;
  cx.phase_scale = cplx(0.0, 0.5 * par.hbar);
  cx.horizon = par.t;
  cx.final_exp_scale = cplx(0.0, -0.5 * par.hbar * par.t);
  build_branches(cx);
  return cx;
}

}  // namespace detail

// Order-(n, k) term of the interaction-picture expansion: n time-ordered
// slots of which k carry the first-order coupling (and, when a scalar
// potential is supplied, its branches) and n - k the second-order one.
// The coupling power of this term is lambda^{2n-k}; lambda itself is NOT
// applied here.
inline WavePacket phi_nk(const FourierPotential& pot, const WavePacket& psi0,
                         const PhysicalParams& par, int n, int k,
                         const PointMeasure* scalar = nullptr) {
  if (k < 0 || k > n) throw precondition_error("phi_nk: need 0 <= k <= n");
  const auto cx = detail::real_time_context(pot, par, scalar);
  return detail::chain_sum(cx, psi0, n, k);
}

// Coefficient of lambda^m in the expansion: sum of phi_nk over
// {(n, k): 2n - k = m, 0 <= k <= n}.  m = 0 returns free evolution of psi0.
inline WavePacket phi_m(const FourierPotential& pot, const WavePacket& psi0,
                        const PhysicalParams& par, int m,
                        const PointMeasure* scalar = nullptr) {
  if (m == 0) return apply_free(psi0, par.t, par.hbar);
  WavePacket acc;
  for (int n = (m + 1) / 2; n <= m; ++n) {
    const int k = 2 * n - m;
    if (k < 0 || k > n) continue;
    WavePacket term = phi_nk(pot, psi0, par, n, k, scalar);
    for (const auto& a : term.atoms) acc.atoms.push_back(a);
  }
  acc.merge();
  return acc;
}

// Diffusive / complex-time counterpart, parametrized by z with Re z >= 0:
// z = i t / hbar reproduces the real-time coefficients, real z > 0 the
// heat-kernel ones.  Slots carry prefactor -z, the free factors become
// exp(-z hbar^2 |y|^2 / 2) with phases z hbar^2/2 * (increments of |y|^2)
// on the unit simplex.
inline WavePacket phi_m_complex_time(const FourierPotential& pot,
                                     const WavePacket& psi0, double hbar,
                                     cplx z, int m,
                                     const PointMeasure* scalar = nullptr) {
  if (z.real() < 0.0)
    throw precondition_error("phi_m_complex_time: Re z must be >= 0");
  detail::ChainContext cx;
  cx.pot = &pot;
  cx.scalar = scalar;
  cx.hbar = hbar;
  cx.t = 1.0;
  cx.slot_prefactor = -z;
  cx.phase_scale = 0.5 * z * hbar * hbar;
  cx.horizon = 1.0;
  cx.final_exp_scale = -0.5 * z * hbar * hbar;
  detail::build_branches(cx);
  if (m == 0) {
    WavePacket out = psi0;
    for (auto& a : out.atoms) a.w *= std::exp(cx.final_exp_scale * norm2(a.y));
    return out;
  }
  WavePacket acc;
  for (int n = (m + 1) / 2; n <= m; ++n) {
    const int k = 2 * n - m;
    if (k < 0 || k > n) continue;
    WavePacket term = detail::chain_sum(cx, psi0, n, k);
    for (const auto& a : term.atoms) acc.atoms.push_back(a);
  }
  acc.merge();
  return acc;
}

// ---- assembled partial sums with certified tail control ------------------

struct DysonSum {
  std::vector<WavePacket> terms;   // phi_0 .. phi_M (lambda not applied)
  std::vector<double> term_norms;  // |lambda|^m * norm(phi_m)
  WavePacket partial;              // sum lambda^m phi_m
  double lambda_star = 0.0;        // convergence radius bound
  double tail_bound = 0.0;         // certified bound on the dropped tail
  bool tail_convergent = false;    // |lambda| < lambda_star
  bool radius_warning = false;     // a computed norm exceeded its bound
};

// Certified per-order norm bound: even orders 2j are bounded by q^j * N0,
// odd orders 2j+1 by 2 r t alpha hbar q^j * N0, with q = lambda_star^{-2}.
inline double order_norm_bound(int m, double q, double odd_factor, double n0) {
  const int j = m / 2;
  const double base = std::pow(q, j) * n0;
  return (m % 2 == 0) ? base : odd_factor * base;
}

inline DysonSum dyson_partial_sum(const FourierPotential& pot,
                                  const WavePacket& psi0,
                                  const PhysicalParams& par, int M,
                                  const PointMeasure* scalar = nullptr) {
  DysonSum s;
  const double alpha = sup_norm_bound(pot).certified;
  const double r = std::max(psi0.support_radius(), pot.support_radius());
  s.lambda_star = lambda_star(alpha, r, par.t, par.hbar);
  const double q = 1.0 / (s.lambda_star * s.lambda_star);
  const double odd_factor = 2.0 * r * par.t * alpha * par.hbar;
  const double n0 = psi0.norm();
  const double al = std::abs(par.lambda);

  for (int m = 0; m <= M; ++m) {
    s.terms.push_back(phi_m(pot, psi0, par, m, scalar));
    const double norm_m = s.terms.back().norm();
    s.term_norms.push_back(std::pow(al, m) * norm_m);
    if (norm_m > order_norm_bound(m, q, odd_factor, n0) * (1.0 + 1e-9))
      s.radius_warning = true;
    const cplx lm = std::pow(cplx(par.lambda), m);
    for (const auto& a : s.terms.back().atoms)
      s.partial.atoms.push_back({a.y, lm * a.w});
  }
  s.partial.merge();

  const double x = al * al * q;  // geometric ratio over even orders
  s.tail_convergent = (al < s.lambda_star);
  if (s.tail_convergent) {
    double tail = 0.0;
    // even orders 2j > M and odd orders 2j+1 > M, summed in closed form
    {
      const int j0 = M / 2 + 1;
      tail += n0 * std::pow(x, j0) / (1.0 - x);
    }
    {
      int j0 = (M % 2 == 0) ? M / 2 : M / 2 + 1;  // smallest j with 2j+1 > M
      tail += odd_factor * al * n0 * std::pow(x, j0) / (1.0 - x);
    }
    s.tail_bound = tail;
  } else {
    s.tail_bound = std::numeric_limits<double>::infinity();
  }
  return s;
}

}  // namespace magpi
