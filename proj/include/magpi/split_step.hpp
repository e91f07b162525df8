#pragma once

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "magpi/common.hpp"
#include "magpi/dyson.hpp"
#include "magpi/fourier_measure.hpp"

namespace magpi {

// Grid-based reference propagator for i hbar d_t psi = H psi with
//   H = (1/2)(-i hbar grad - lambda a)^2
//     = -(hbar^2/2) Lap + i hbar lambda a . grad + (lambda^2/2)|a|^2
// (Coulomb gauge) on a periodic square [-L, L]^2, and its imaginary-time
// (heat semigroup e^{-t H / hbar}) counterpart.
//
// Scheme: second-order Strang palindrome per step,
//   K(dt/2) M1(dt/2) M2(dt/2) V(dt) M2(dt/2) M1(dt/2) K(dt/2)
// where K is the exact kinetic phase in 2D Fourier space, M_d applies the
// a_d-coupling as a position-dependent translation along axis d (multiplier
// in the axis-d Fourier variable -- this is exact because each a_d is
// required to be independent of x_d), and V is the |a|^2 phase in position
// space.  All sub-steps are exact exponentials, so real-time evolution is
// unitary up to roundoff and the only error is operator splitting, O(dt^2).
//
// The plane x3 = 0 is simulated; potentials must keep it invariant (no x3
// dependence, and a3 enters through |a|^2 only).

struct GridState {
  int n = 0;        // points per axis (power of two)
  double box = 0.0; // half-width L; domain [-L, L)^2
  std::vector<cplx> v;  // row-major: v[i1 * n + i2]

  double dx() const { return 2.0 * box / n; }
  double dk() const { return pi / box; }
  double kmax() const { return dk() * (n / 2); }

  double x_at(int i) const { return -box + i * dx(); }
  double k_at(int i) const { return dk() * (i < n / 2 ? i : i - n); }
};

inline GridState make_state(int n, double box) {
  if (n < 2 || (n & (n - 1)) != 0)
    throw precondition_error("grid resolution must be a power of two");
  if (!(box > 0.0)) throw precondition_error("grid box must be positive");
  GridState s;
  s.n = n;
  s.box = box;
  s.v.assign(static_cast<std::size_t>(n) * n, cplx{});
  return s;
}

// ---- diagnostics ---------------------------------------------------------

inline double grid_l2_norm(const GridState& s) {
  double acc = 0.0;
  for (const cplx& z : s.v) acc += std::norm(z);
  return std::sqrt(acc * s.dx() * s.dx());
}

// Fraction of |psi|^2 mass within `margin` of the box boundary.
inline double boundary_mass(const GridState& s, double margin) {
  double total = 0.0, edge = 0.0;
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const double w = std::norm(s.v[static_cast<std::size_t>(i) * s.n + j]);
      total += w;
      if (std::max(std::abs(s.x_at(i)), std::abs(s.x_at(j))) >= s.box - margin)
        edge += w;
    }
  return total > 0.0 ? edge / total : 0.0;
}

// Bilinear interpolation with periodic wrap; probes the x3 = 0 plane.
inline cplx value_at(const GridState& s, const Vec3& x) {
  auto locate = [&](double c, int& i0, double& f) {
    double u = (c + s.box) / s.dx();
    u -= std::floor(u / s.n) * s.n;
    i0 = static_cast<int>(std::floor(u)) % s.n;
    f = u - std::floor(u);
  };
  int i0, j0;
  double fi, fj;
  locate(x[0], i0, fi);
  locate(x[1], j0, fj);
  const int i1 = (i0 + 1) % s.n, j1 = (j0 + 1) % s.n;
  auto at = [&](int i, int j) {
    return s.v[static_cast<std::size_t>(i) * s.n + j];
  };
  return (1 - fi) * (1 - fj) * at(i0, j0) + fi * (1 - fj) * at(i1, j0) +
         (1 - fi) * fj * at(i0, j1) + fi * fj * at(i1, j1);
}

// <x_d^2>_psi = int x_d^2 psi / int psi (complex weights).
inline cplx second_moment(const GridState& s, int axis) {
  cplx num{}, den{};
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const cplx z = s.v[static_cast<std::size_t>(i) * s.n + j];
      const double c = axis == 0 ? s.x_at(i) : s.x_at(j);
      num += c * c * z;
      den += z;
    }
  return num / den;
}

// ---- initial states ------------------------------------------------------

// psi0(x) = sum_atoms w e^{i y . x} on the plane.  Atom frequencies must be
// commensurate with the grid (plane waves must be periodic on the box) and
// below Nyquist; the y3 components must vanish for the 2D reduction.
inline void init_packet(GridState& s, const WavePacket& psi0) {
  const double dk = s.dk();
  for (const auto& atom : psi0.atoms) {
    if (std::abs(atom.y[2]) > 1e-12)
      throw precondition_error("packet atom leaves the x3 = 0 plane");
    for (int d = 0; d < 2; ++d) {
      const double m = atom.y[d] / dk;
      if (std::abs(m - std::round(m)) > 1e-9)
        throw precondition_error("packet atom off the grid wavenumbers");
      if (std::abs(std::round(m)) > s.n / 2 - 1)
        throw precondition_error("packet atom beyond grid Nyquist");
    }
  }
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      s.v[static_cast<std::size_t>(i) * s.n + j] =
          psi0.eval(Vec3{s.x_at(i), s.x_at(j), 0.0});
}

// Enveloped packet: checks the carrier atoms like init_packet, then
// multiplies in the Gaussian window (which need not be box-periodic; its
// boundary amplitude is the caller's leakage budget).
inline void init_gaussian_packet(GridState& s, const GaussianPacket& p) {
  init_packet(s, p.packet);
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const double g = (s.x_at(i) * s.x_at(i) + s.x_at(j) * s.x_at(j)) /
                       (2.0 * p.sigma * p.sigma);
      s.v[static_cast<std::size_t>(i) * s.n + j] *= std::exp(-g);
    }
}

inline void init_gaussian(GridState& s, const Vec3& center, double sigma) {
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const double dx0 = s.x_at(i) - center[0];
      const double dx1 = s.x_at(j) - center[1];
      s.v[static_cast<std::size_t>(i) * s.n + j] =
          std::exp(-(dx0 * dx0 + dx1 * dx1) / (2.0 * sigma * sigma));
    }
}

// Super-Gaussian window exp(-(r/radius)^(2p)): flattens the state near the
// boundary so that a non-periodic (e.g. linear) potential's wrap seam sits
// under negligible mass.
inline void apply_window(GridState& s, double radius, int order = 8) {
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const double r2 =
          s.x_at(i) * s.x_at(i) + s.x_at(j) * s.x_at(j);
      const double u = r2 / (radius * radius);
      double p = 1.0;
      for (int q = 0; q < order; ++q) p *= u;
      s.v[static_cast<std::size_t>(i) * s.n + j] *= std::exp(-p);
    }
}

// ---- potentials on the grid ----------------------------------------------

// a(x) = M x + a0.  The gauge-transform round trips need the constant
// offset; M must keep each a_d independent of x_d and of x3.
struct AffineLinearPotential {
  LinearPotential lin;
  Vec3 offset{};
};

namespace detail {

struct GridCoupling {
  std::vector<double> a1;   // a1 as a function of x2 (index j)
  std::vector<double> a2;   // a2 as a function of x1 (index i)
  std::vector<double> asq;  // |a|^2 on the grid (all three components)
};

inline GridCoupling tabulate(const GridState& s,
                             const AffineLinearPotential& pot) {
  const auto& m = pot.lin.m;
  if (std::abs(m[0][0]) + std::abs(m[1][1]) > 1e-14)
    throw precondition_error(
        "axis coupling requires a_d independent of x_d (zero diagonal)");
  if (std::abs(m[0][2]) + std::abs(m[1][2]) + std::abs(m[2][2]) > 1e-14)
    throw precondition_error("potential must not couple the plane to x3");
  GridCoupling c;
  c.a1.resize(s.n);
  c.a2.resize(s.n);
  c.asq.resize(static_cast<std::size_t>(s.n) * s.n);
  for (int j = 0; j < s.n; ++j)
    c.a1[j] = m[0][1] * s.x_at(j) + pot.offset[0];
  for (int i = 0; i < s.n; ++i)
    c.a2[i] = m[1][0] * s.x_at(i) + pot.offset[1];
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const Vec3 a = pot.lin.eval(Vec3{s.x_at(i), s.x_at(j), 0.0}) + pot.offset;
      c.asq[static_cast<std::size_t>(i) * s.n + j] = norm2(a);
    }
  return c;
}

inline GridCoupling tabulate(const GridState& s, const FourierPotential& pot) {
  const double dk = s.dk();
  for (int comp = 0; comp < 3; ++comp)
    for (const auto& atom : pot.mu[comp].atoms()) {
      if (comp < 2 && std::abs(atom.k[comp]) > 1e-12)
        throw precondition_error(
            "axis coupling requires a_d independent of x_d");
      if (std::abs(atom.k[2]) > 1e-12)
        throw precondition_error("potential must not couple the plane to x3");
      for (int d = 0; d < 2; ++d) {
        const double m = atom.k[d] / dk;
        if (std::abs(m - std::round(m)) > 1e-9)
          throw precondition_error("potential atom off the grid wavenumbers");
        if (std::abs(std::round(m)) > s.n / 2 - 1)
          throw precondition_error("potential support exceeding grid Nyquist");
      }
    }
  GridCoupling c;
  c.a1.resize(s.n);
  c.a2.resize(s.n);
  c.asq.resize(static_cast<std::size_t>(s.n) * s.n);
  for (int j = 0; j < s.n; ++j)
    c.a1[j] = pot.eval_real(Vec3{0.0, s.x_at(j), 0.0})[0];
  for (int i = 0; i < s.n; ++i)
    c.a2[i] = pot.eval_real(Vec3{s.x_at(i), 0.0, 0.0})[1];
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      c.asq[static_cast<std::size_t>(i) * s.n + j] =
          norm2(pot.eval_real(Vec3{s.x_at(i), s.x_at(j), 0.0}));
  return c;
}

struct FftPlans {
  fftw_plan fwd2, inv2, fwd1, inv1, fwd0, inv0;

  explicit FftPlans(GridState& s) {
    auto* d = reinterpret_cast<fftw_complex*>(s.v.data());
    const int n = s.n;
    fwd2 = fftw_plan_dft_2d(n, n, d, d, FFTW_FORWARD, FFTW_ESTIMATE);
    inv2 = fftw_plan_dft_2d(n, n, d, d, FFTW_BACKWARD, FFTW_ESTIMATE);
    // axis 0 (stride n, n transforms side by side)
    fwd0 = fftw_plan_many_dft(1, &n, n, d, nullptr, n, 1, d, nullptr, n, 1,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    inv0 = fftw_plan_many_dft(1, &n, n, d, nullptr, n, 1, d, nullptr, n, 1,
                              FFTW_BACKWARD, FFTW_ESTIMATE);
    // axis 1 (contiguous rows)
    fwd1 = fftw_plan_many_dft(1, &n, n, d, nullptr, 1, n, d, nullptr, 1, n,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    inv1 = fftw_plan_many_dft(1, &n, n, d, nullptr, 1, n, d, nullptr, 1, n,
                              FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlans() {
    fftw_destroy_plan(fwd2);
    fftw_destroy_plan(inv2);
    fftw_destroy_plan(fwd0);
    fftw_destroy_plan(inv0);
    fftw_destroy_plan(fwd1);
    fftw_destroy_plan(inv1);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
};

inline GridState evolve_core(const GridState& psi0, const GridCoupling& c,
                             double lambda, double t, int steps, double hbar,
                             bool imaginary_time) {
  if (steps < 1 || !(t > 0.0)) throw precondition_error("evolve: t and steps must be positive");
  GridState s = psi0;
  const int n = s.n;
  const double dt = t / steps;
  const double kmax = s.kmax();
  // splitting accuracy bound: one kinetic phase turn per step at Nyquist
  if (dt > pi / (hbar * kmax * kmax) + 1e-15)
    throw precondition_error("unstable step size: dt exceeds pi/(hbar kmax^2)");
  if (imaginary_time) {
    // growing axis multipliers e^{dt lambda a_d k_d} must stay under the
    // kinetic decay e^{-dt hbar k^2/2}
    double amax = 0.0;
    for (double a : c.a1) amax = std::max(amax, std::abs(a));
    for (double a : c.a2) amax = std::max(amax, std::abs(a));
    if (std::abs(lambda) * amax > 0.45 * hbar * kmax)
      throw precondition_error(
          "imaginary-time coupling too strong for this grid (growth beats "
          "kinetic decay)");
  }

  // precomputed multipliers
  const double inv_n = 1.0 / n;
  const double inv_n2 = inv_n * inv_n;
  std::vector<cplx> kin_half(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double k2 = s.k_at(i) * s.k_at(i) + s.k_at(j) * s.k_at(j);
      const double w = 0.25 * hbar * k2 * dt;
      kin_half[static_cast<std::size_t>(i) * n + j] =
          imaginary_time ? cplx{std::exp(-w) * inv_n2, 0.0}
                         : std::exp(cplx{0.0, -w}) * inv_n2;
    }
  // axis-d coupling for half a step: real time e^{+i k_d lambda a_d dt/2}
  // (a translation by lambda a_d dt/2), imaginary time e^{+k_d lambda a_d dt/2}
  auto axis_mult = [&](double a, double k) {
    const double w = 0.5 * lambda * a * k * dt;
    return imaginary_time ? cplx{std::exp(w) * inv_n, 0.0}
                          : std::exp(cplx{0.0, w}) * inv_n;
  };
  std::vector<cplx> m1(static_cast<std::size_t>(n) * n);  // index [j][k1]
  std::vector<cplx> m2(static_cast<std::size_t>(n) * n);  // index [i][k2]
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      m1[static_cast<std::size_t>(j) * n + i] = axis_mult(c.a1[j], s.k_at(i));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m2[static_cast<std::size_t>(i) * n + j] = axis_mult(c.a2[i], s.k_at(j));
  std::vector<cplx> vmult(static_cast<std::size_t>(n) * n);
  for (std::size_t q = 0; q < vmult.size(); ++q) {
    const double w = 0.5 * lambda * lambda * c.asq[q] * dt / hbar;
    vmult[q] = imaginary_time ? cplx{std::exp(-w), 0.0}
                              : std::exp(cplx{0.0, -w});
  }

  FftPlans plans(s);
  auto kinetic_half = [&] {
    fftw_execute(plans.fwd2);
    for (std::size_t q = 0; q < s.v.size(); ++q) s.v[q] *= kin_half[q];
    fftw_execute(plans.inv2);
  };
  auto couple1_half = [&] {
    fftw_execute(plans.fwd0);  // transform along x1: index i becomes k1
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        s.v[static_cast<std::size_t>(i) * n + j] *=
            m1[static_cast<std::size_t>(j) * n + i];
    fftw_execute(plans.inv0);
  };
  auto couple2_half = [&] {
    fftw_execute(plans.fwd1);  // transform along x2: index j becomes k2
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s.v[static_cast<std::size_t>(i) * n + j] *=
            m2[static_cast<std::size_t>(i) * n + j];
    fftw_execute(plans.inv1);
  };

  for (int step = 0; step < steps; ++step) {
    kinetic_half();
    couple1_half();
    couple2_half();
    for (std::size_t q = 0; q < s.v.size(); ++q) s.v[q] *= vmult[q];
    couple2_half();
    couple1_half();
    kinetic_half();
  }
  return s;
}

}  // namespace detail

inline GridState evolve(const GridState& psi0, const AffineLinearPotential& pot,
                        double lambda, double t, int steps, double hbar,
                        bool imaginary_time = false) {
  return detail::evolve_core(psi0, detail::tabulate(psi0, pot), lambda, t,
                             steps, hbar, imaginary_time);
}

inline GridState evolve(const GridState& psi0, const LinearPotential& pot,
                        double lambda, double t, int steps, double hbar,
                        bool imaginary_time = false) {
  return evolve(psi0, AffineLinearPotential{pot, Vec3{}}, lambda, t, steps,
                hbar, imaginary_time);
}

inline GridState evolve(const GridState& psi0, const FourierPotential& pot,
                        double lambda, double t, int steps, double hbar,
                        bool imaginary_time = false) {
  return detail::evolve_core(psi0, detail::tabulate(psi0, pot), lambda, t,
                             steps, hbar, imaginary_time);
}

// ---- gauge transforms ----------------------------------------------------

// chi(x) = (1/2) x^T Q x + q . x  (Q symmetric).  grad chi = Q x + q, so a
// gauge change adds Q to the linear part and q to the offset.
struct GaugeChi {
  std::array<std::array<double, 3>, 3> quad{};
  Vec3 lin{};

  double eval(const Vec3& x) const {
    double acc = dot(lin, x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) acc += 0.5 * x[i] * quad[i][j] * x[j];
    return acc;
  }
};

// psi' = e^{i lambda chi / hbar} psi, a' = a + grad chi.  Evolving the
// primed pair and stripping the phase afterwards reproduces the original
// evolution up to splitting error.
inline std::pair<GridState, AffineLinearPotential> gauge_transform(
    const GridState& s, const AffineLinearPotential& pot, const GaugeChi& chi,
    double lambda, double hbar) {
  GridState out = s;
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const Vec3 x{s.x_at(i), s.x_at(j), 0.0};
      out.v[static_cast<std::size_t>(i) * s.n + j] *=
          std::exp(cplx{0.0, lambda * chi.eval(x) / hbar});
    }
  AffineLinearPotential shifted = pot;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) shifted.lin.m[i][j] += chi.quad[i][j];
  shifted.offset = shifted.offset + chi.lin;
  return {std::move(out), shifted};
}

// The quadratic gauge function linking symmetric and Landau gauges for
// B = (0, 0, b): chi = -b x1 x2 / 2.
inline GaugeChi symmetric_to_landau_chi(double b) {
  GaugeChi chi;
  chi.quad[0][1] = -0.5 * b;
  chi.quad[1][0] = -0.5 * b;
  return chi;
}

// ---- state I/O -----------------------------------------------------------

// One JSON header line (shape and box), then raw little-endian doubles
// (re, im interleaved).
inline void save_state(const GridState& s, const std::string& path) {
  nlohmann::json head;
  head["n"] = s.n;
  head["box"] = s.box;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open state file for writing: " + path);
  out << head.dump() << '\n';
  out.write(reinterpret_cast<const char*>(s.v.data()),
            static_cast<std::streamsize>(s.v.size() * sizeof(cplx)));
}

inline GridState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open state file: " + path);
  std::string line;
  std::getline(in, line);
  nlohmann::json head;
  try {
    head = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw config_error("malformed state header in " + path);
  }
  GridState s = make_state(head.at("n").get<int>(), head.at("box").get<double>());
  in.read(reinterpret_cast<char*>(s.v.data()),
          static_cast<std::streamsize>(s.v.size() * sizeof(cplx)));
  if (!in) throw config_error("truncated state payload in " + path);
  return s;
}

}  // namespace magpi
