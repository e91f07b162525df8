#pragma once

#include <cmath>
#include <vector>

#include "magpi/common.hpp"
#include "magpi/dyson.hpp"
#include "magpi/fourier_measure.hpp"
#include "magpi/grid_path.hpp"
#include "magpi/reduction.hpp"
#include "magpi/stoch_integral.hpp"

namespace magpi {

// Monte Carlo evaluation of path-space averages over scaled Brownian
// paths.  Everything is driven by counter-based RNG plus fixed-shape
// pairwise reduction, so results are bit-identical for any thread count.

struct MCOptions {
  std::uint64_t n_samples = 100000;
  int n_steps = 512;
  std::uint64_t seed = 1;
  int threads = 1;
  QuadratureRule rule = QuadratureRule::left;
  bool stratonovich_correction = true;   // add the (c/2) int div a ds term
  bool unscaled_divergence_term = false; // debug: drop c from that term
};

struct MCEstimate {
  cplx mean{};
  double stderr_re = 0.0;
  double stderr_im = 0.0;
};

// Path scaling: Fresnel runs use c = sqrt(i hbar) (oscillatory averages),
// diffusive runs c = sqrt(hbar) (bounded averages, no time restriction).
enum class PathScale { fresnel, diffusive };

inline cplx path_scale_factor(PathScale ps, double hbar) {
  return ps == PathScale::fresnel ? sqrt_i_hbar(hbar)
                                  : cplx(std::sqrt(hbar), 0.0);
}

namespace detail {

// Generic sample loop: fn(sample_index, out_row) fills n_out values; the
// buffer is reduced column-wise afterwards.
template <class Fn>
std::vector<MCEstimate> run_samples(std::uint64_t n_samples, int threads,
                                    std::size_t n_out, Fn&& fn) {
  std::vector<cplx> buf(n_samples * n_out);
  parallel_for_samples(n_samples, threads,
                       [&](std::uint64_t begin, std::uint64_t end) {
                         auto worker_fn = fn;  // private scratch state
                         std::vector<cplx> row(n_out);
                         for (std::uint64_t i = begin; i < end; ++i) {
                           worker_fn(i, row);
                           std::copy(row.begin(), row.end(),
                                     buf.begin() + i * n_out);
                         }
                       });
  std::vector<MCEstimate> out(n_out);
  for (std::size_t q = 0; q < n_out; ++q) {
    const MeanStderr m = mean_stderr(buf.data() + q, n_samples, n_out);
    out[q] = {m.mean, m.stderr_re, m.stderr_im};
  }
  return out;
}

// Probe-independent per-sample accumulators.  Every field/packet atom
// contributes e^{i k . (c w)} factors that are later contracted with the
// probe phase e^{i k . x}; this keeps the per-step cost independent of the
// number of probes.
struct SampleCore {
  struct KW {
    Vec3 k{};
    cplx w{};
    int comp = 0;
  };
  std::vector<KW> field_atoms;            // stochastic-sum atoms
  std::vector<FreqAtom> div_atoms;        // divergence-measure atoms
  std::vector<FreqAtom> scalar_atoms;     // scalar-potential atoms
  const WavePacket* psi0 = nullptr;
  cplx c{};
  double t = 1.0;
  int n_steps = 0;
  QuadratureRule rule = QuadratureRule::left;
  bool corr = true;
  bool unscaled = false;

  // per-sample inner sums (resized once per worker)
  std::vector<cplx> f_inner, d_inner, s_inner, p_inner;

  void init(const FourierPotential& pot, const WavePacket& packet,
            const MCOptions& opts, cplx scale, double t_) {
    for (int j = 0; j < 3; ++j)
      for (const auto& a : pot.mu[j].atoms())
        field_atoms.push_back({a.k, a.w, j});
    if (opts.stratonovich_correction) {
      const PointMeasure dm = pot.divergence_measure();
      div_atoms.assign(dm.atoms().begin(), dm.atoms().end());
    }
    psi0 = &packet;
    c = scale;
    t = t_;
    n_steps = opts.n_steps;
    rule = opts.rule;
    corr = opts.stratonovich_correction;
    unscaled = opts.unscaled_divergence_term;
    f_inner.resize(field_atoms.size());
    d_inner.resize(div_atoms.size());
    p_inner.resize(packet.atoms.size());
  }

  void set_scalar(const PointMeasure& v) {
    scalar_atoms.assign(v.atoms().begin(), v.atoms().end());
    s_inner.resize(scalar_atoms.size());
  }

  void accumulate(const GridPath& w) {
    std::fill(f_inner.begin(), f_inner.end(), cplx(0.0));
    std::fill(d_inner.begin(), d_inner.end(), cplx(0.0));
    std::fill(s_inner.begin(), s_inner.end(), cplx(0.0));
    const int n = w.n_steps();
    const double dt = w.dt();
    const cplx ic = cplx(0.0, 1.0) * c;
    for (int j = 0; j < n; ++j) {
      Vec3 base;
      switch (rule) {
        case QuadratureRule::left: base = w.knots[j]; break;
        case QuadratureRule::right: base = w.knots[j + 1]; break;
        default: base = 0.5 * (w.knots[j] + w.knots[j + 1]); break;
      }
      const Vec3 dw = w.increment(j);
      for (std::size_t a = 0; a < field_atoms.size(); ++a)
        f_inner[a] += std::exp(ic * dot(field_atoms[a].k, base)) *
                      dw[field_atoms[a].comp];
      // time integrals (trapezoid on the knots)
      const double tw0 = (j == 0) ? 0.5 : 1.0;
      for (std::size_t a = 0; a < div_atoms.size(); ++a)
        d_inner[a] += tw0 * dt * std::exp(ic * dot(div_atoms[a].k, w.knots[j]));
      for (std::size_t a = 0; a < scalar_atoms.size(); ++a)
        s_inner[a] += tw0 * dt * std::exp(ic * dot(scalar_atoms[a].k, w.knots[j]));
    }
    for (std::size_t a = 0; a < div_atoms.size(); ++a)
      d_inner[a] += 0.5 * dt * std::exp(ic * dot(div_atoms[a].k, w.knots[n]));
    for (std::size_t a = 0; a < scalar_atoms.size(); ++a)
      s_inner[a] += 0.5 * dt * std::exp(ic * dot(scalar_atoms[a].k, w.knots[n]));
    for (std::size_t p = 0; p < psi0->atoms.size(); ++p)
      p_inner[p] = std::exp(ic * dot(psi0->atoms[p].y, w.knots[n]));
  }

  // Full scaled action sum at probe x:
  //   c * sum a(c w + x).dw  [rule]  + correction + int V(c w + x) ds.
  cplx action(const Vec3& x) const {
    cplx s = 0.0;
    for (std::size_t a = 0; a < field_atoms.size(); ++a)
      s += field_atoms[a].w * std::exp(cplx(0.0, dot(field_atoms[a].k, x))) *
           f_inner[a];
    s *= c;
    if (corr && !div_atoms.empty()) {
      cplx d = 0.0;
      for (std::size_t a = 0; a < div_atoms.size(); ++a)
        d += div_atoms[a].w * std::exp(cplx(0.0, dot(div_atoms[a].k, x))) *
             d_inner[a];
      s += (unscaled ? cplx(0.5) : 0.5 * c) * d;
    }
    for (std::size_t a = 0; a < scalar_atoms.size(); ++a)
      s += scalar_atoms[a].w * std::exp(cplx(0.0, dot(scalar_atoms[a].k, x))) *
           s_inner[a];
    return s;
  }

  cplx packet_factor(const Vec3& x) const {
    cplx s = 0.0;
    for (std::size_t p = 0; p < psi0->atoms.size(); ++p)
      s += psi0->atoms[p].w * std::exp(cplx(0.0, dot(psi0->atoms[p].y, x))) *
           p_inner[p];
    return s;
  }
};

}  // namespace detail

// Order-m coefficient of the path-average expansion at each probe:
//   (1/m!) (-i/hbar)^m E[ action(x)^m psi0(c w(t) + x) ],
// with action = c * (stochastic line sum) + int V ds.  PathScale::fresnel
// gives the oscillatory real-time coefficients, PathScale::diffusive the
// bounded-kernel ones.  The coupling power lambda^m is NOT applied.
inline std::vector<MCEstimate> moment_mc(const FourierPotential& pot,
                                         const WavePacket& psi0,
                                         const PhysicalParams& par, int m,
                                         const std::vector<Vec3>& probes,
                                         const MCOptions& opts,
                                         PathScale scale = PathScale::fresnel,
                                         const PointMeasure* scalar = nullptr) {
  detail::SampleCore proto;
  proto.init(pot, psi0, opts, path_scale_factor(scale, par.hbar), par.t);
  if (scalar) proto.set_scalar(*scalar);
  const cplx pref =
      std::pow(cplx(0.0, -1.0) / par.hbar, m) / std::tgamma(m + 1.0);
  return detail::run_samples(
      opts.n_samples, opts.threads, probes.size(),
      [&, proto](std::uint64_t i, std::vector<cplx>& row) mutable {
        const GridPath w = sample_brownian(par.t, opts.n_steps, opts.seed, i);
        proto.accumulate(w);
        for (std::size_t q = 0; q < probes.size(); ++q) {
          const cplx s = (m == 0) ? cplx(1.0) : std::pow(proto.action(probes[q]),
                                                         static_cast<double>(m));
          row[q] = pref * s * proto.packet_factor(probes[q]);
        }
      });
}

inline std::vector<MCEstimate> psi_m_mc(const FourierPotential& pot,
                                        const WavePacket& psi0,
                                        const PhysicalParams& par, int m,
                                        const std::vector<Vec3>& probes,
                                        const MCOptions& opts,
                                        const PointMeasure* scalar = nullptr) {
  return moment_mc(pot, psi0, par, m, probes, opts, PathScale::fresnel, scalar);
}

struct SeriesMC {
  std::vector<std::vector<MCEstimate>> orders;  // [m][probe], lambda excluded
  std::vector<MCEstimate> partial;              // sum lambda^m order_m
};

// All orders 0..M plus their lambda-weighted partial sum, evaluated on a
// common set of sample paths (so order estimates are maximally correlated
// and the partial sum is internally consistent).
inline SeriesMC psi_series_mc(const FourierPotential& pot,
                              const WavePacket& psi0,
                              const PhysicalParams& par, int M,
                              const std::vector<Vec3>& probes,
                              const MCOptions& opts,
                              PathScale scale = PathScale::fresnel,
                              const PointMeasure* scalar = nullptr) {
  detail::SampleCore proto;
  proto.init(pot, psi0, opts, path_scale_factor(scale, par.hbar), par.t);
  if (scalar) proto.set_scalar(*scalar);
  const std::size_t np = probes.size();
  const std::size_t n_out = np * (M + 2);
  std::vector<cplx> prefs(M + 1);
  for (int m = 0; m <= M; ++m)
    prefs[m] = std::pow(cplx(0.0, -1.0) / par.hbar, m) / std::tgamma(m + 1.0);
  const auto flat = detail::run_samples(
      opts.n_samples, opts.threads, n_out,
      [&, proto](std::uint64_t i, std::vector<cplx>& row) mutable {
        const GridPath w = sample_brownian(par.t, opts.n_steps, opts.seed, i);
        proto.accumulate(w);
        for (std::size_t q = 0; q < np; ++q) {
          const cplx act = proto.action(probes[q]);
          const cplx pk = proto.packet_factor(probes[q]);
          cplx spow = 1.0, partial = 0.0, lpow = 1.0;
          for (int m = 0; m <= M; ++m) {
            const cplx vm = prefs[m] * spow * pk;
            row[m * np + q] = vm;
            partial += lpow * vm;
            spow *= act;
            lpow *= par.lambda;
          }
          row[(M + 1) * np + q] = partial;
        }
      });
  SeriesMC out;
  out.orders.resize(M + 1);
  for (int m = 0; m <= M; ++m)
    out.orders[m].assign(flat.begin() + m * np, flat.begin() + (m + 1) * np);
  out.partial.assign(flat.begin() + (M + 1) * np, flat.end());
  return out;
}

// Full exponential functional for a linear (constant-field) potential:
//   E[ psi0(c w(t) + x) exp(-(i lambda/hbar) S(x)) ],  c = sqrt(i hbar),
// S = c * (line sum by opts.rule) + Stratonovich correction.  Only valid
// below the critical time t* of the potential, where the oscillatory
// second moments stay finite; beyond it the estimator has no variance and
// the call is refused.
// psi0 may be any packet-like state with eval(CVec3) (WavePacket,
// GaussianPacket): the functional only ever samples it pointwise.
template <class Psi0>
std::vector<MCEstimate> psi_exp_mc(const LinearPotential& pot,
                                   const Psi0& psi0,
                                   const PhysicalParams& par,
                                   const std::vector<Vec3>& probes,
                                   const MCOptions& opts) {
  const double ts = t_star(pot);
  if (par.t >= ts)
    throw precondition_error(
        "psi_exp_mc: t >= t* = " + std::to_string(ts) +
        "; the exponential functional is beyond its convergence threshold");
  const cplx c = sqrt_i_hbar(par.hbar);
  const cplx expo_pref = cplx(0.0, -par.lambda / par.hbar);
  const double tr = pot.divergence();
  return detail::run_samples(
      opts.n_samples, opts.threads, probes.size(),
      [&](std::uint64_t i, std::vector<cplx>& row) {
        const GridPath w = sample_brownian(par.t, opts.n_steps, opts.seed, i);
        // probe-independent pieces: sum M w . dw (c-scaled argument part)
        // and the endpoint; a(c w + x) = c M w + M x splits linearly.
        cplx inner = 0.0;
        const int n = w.n_steps();
        for (int j = 0; j < n; ++j) {
          Vec3 base;
          switch (opts.rule) {
            case QuadratureRule::left: base = w.knots[j]; break;
            case QuadratureRule::right: base = w.knots[j + 1]; break;
            default: base = 0.5 * (w.knots[j] + w.knots[j + 1]); break;
          }
          inner += dot(pot.eval(base), w.increment(j));
        }
        const Vec3 wt = w.knots[n];
        for (std::size_t q = 0; q < probes.size(); ++q) {
          const Vec3& x = probes[q];
          cplx s = c * (c * inner + dot(pot.eval(x), wt));
          if (opts.stratonovich_correction && tr != 0.0)
            s += (opts.unscaled_divergence_term ? cplx(0.5) : 0.5 * c) * tr *
                 par.t;
          const cplx pk = psi0.eval(c * wt + x);
          row[q] = pk * std::exp(expo_pref * s);
        }
      });
}

// Full exponential functional of a bounded almost-periodic field along
// diffusive paths (c = sqrt(hbar)): the phase is real, the integrand lies
// on the unit circle, and no time restriction is needed.
inline std::vector<MCEstimate> heat_exp_mc(const FourierPotential& pot,
                                           const WavePacket& psi0,
                                           const PhysicalParams& par,
                                           const std::vector<Vec3>& probes,
                                           const MCOptions& opts) {
  detail::SampleCore proto;
  proto.init(pot, psi0, opts, path_scale_factor(PathScale::diffusive, par.hbar),
             par.t);
  const cplx expo_pref = cplx(0.0, -par.lambda / par.hbar);
  return detail::run_samples(
      opts.n_samples, opts.threads, probes.size(),
      [&, proto](std::uint64_t i, std::vector<cplx>& row) mutable {
        const GridPath w = sample_brownian(par.t, opts.n_steps, opts.seed, i);
        proto.accumulate(w);
        for (std::size_t q = 0; q < probes.size(); ++q)
          row[q] = proto.packet_factor(probes[q]) *
                   std::exp(expo_pref * proto.action(probes[q]));
      });
}

// Diffusive per-order coefficients; real_time = true instead evaluates the
// oscillatory (fresnel-scaled) coefficients on the same sample paths.
inline std::vector<MCEstimate> heat_moment_mc(const FourierPotential& pot,
                                              const WavePacket& psi0,
                                              const PhysicalParams& par, int m,
                                              const std::vector<Vec3>& probes,
                                              const MCOptions& opts,
                                              bool real_time = false) {
  return moment_mc(pot, psi0, par, m, probes, opts,
                   real_time ? PathScale::fresnel : PathScale::diffusive);
}

}  // namespace magpi
