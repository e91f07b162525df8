#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "magpi/cameron_martin.hpp"
#include "magpi/fourier_measure.hpp"
#include "magpi/grid_path.hpp"
#include "magpi/reduction.hpp"

namespace magpi {

// Renormalization analysis for the quadratic functional
//   g(h) = <h, G h>,   (G h)(s) = int_0^s a(h(u)) du,
// on the Cameron-Martin space, for linear potentials a(x) = M x.  The
// basis-projected sums g_n = <P_n w, G P_n w> have mean Tr P_n G, which is
// basis-dependent: zero on tent families, log-divergent on planar trig
// subfamilies.  Subtracting the curl part of the trace (the constant r_n
// below) makes the limits basis-independent.

// Cumulative trapezoid of a(gamma(s)) on the path's grid.  For linear a
// and polygonal gamma the trapezoid per interval is exact, and
// cm_inner(gamma, g_apply(gamma)) equals the midpoint line-integral sum.
inline GridPath g_apply(const LinearPotential& pot, const GridPath& gamma) {
  GridPath out;
  out.t = gamma.t;
  out.knots.assign(gamma.knots.size(), Vec3{});
  const double dt = gamma.dt();
  Vec3 acc{};
  Vec3 prev = pot.eval(gamma.knots[0]);
  for (int j = 0; j < gamma.n_steps(); ++j) {
    const Vec3 next = pot.eval(gamma.knots[j + 1]);
    acc = acc + (0.5 * dt) * (prev + next);
    out.knots[j + 1] = acc;
    prev = next;
  }
  return out;
}

// Midpoint-rule line integral sum_j a(midpoint_j) . dgamma_j; exact
// Stratonovich value for linear fields on polygonal paths.
inline double midpoint_line_sum(const LinearPotential& pot,
                                const GridPath& gamma) {
  double s = 0.0;
  for (int j = 0; j < gamma.n_steps(); ++j) {
    const Vec3 mid = 0.5 * (gamma.knots[j] + gamma.knots[j + 1]);
    s += dot(pot.eval(mid), gamma.increment(j));
  }
  return s;
}

namespace detail {

// Breakpoint-split composite Gauss over [0, t] for scalar integrands that
// are smooth between the listed cut points.
template <typename Fn>
double piecewise_gauss(Fn&& f, std::vector<double> cuts, double t, int grid_n) {
  cuts.push_back(0.0);
  cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return std::abs(x - y) < 1e-15; }),
             cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const int m = std::max(1, static_cast<int>(std::ceil(grid_n * (hi - lo) / t)));
    for (int j = 0; j < m; ++j)
      acc += gauss8(f, lo + (hi - lo) * j / m, lo + (hi - lo) * (j + 1) / m);
  }
  return acc;
}

}  // namespace detail

// <e_i, G e_j> = int e_i'(s) . a(e_j(s)) ds by breakpoint-split Gauss
// panels (exact for tent elements, spectrally accurate for trig).
inline double g_form(const BasisElement& ei, const BasisElement& ej,
                     const LinearPotential& pot, int grid_n = 1 << 12) {
  std::vector<double> cuts;
  detail::add_breakpoints(ei, cuts);
  detail::add_breakpoints(ej, cuts);
  auto f = [&](double s) { return dot(ei.deriv(s), pot.eval(ej.eval(s))); };
  return detail::piecewise_gauss(f, std::move(cuts), ei.t, grid_n);
}

// Bilinear signed-area pairing (1/2) int u(s) x v'(s) ds.
inline Vec3 area_pairing(const BasisElement& u, const BasisElement& v,
                         int grid_n = 1 << 12) {
  std::vector<double> cuts;
  detail::add_breakpoints(u, cuts);
  detail::add_breakpoints(v, cuts);
  Vec3 out{};
  for (int comp = 0; comp < 3; ++comp) {
    auto f = [&](double s) { return cross(u.eval(s), v.deriv(s))[comp]; };
    out[comp] = 0.5 * detail::piecewise_gauss(f, cuts, u.t, grid_n);
  }
  return out;
}

// Full <e_i, G e_j> matrix over a list of elements; entries by quadrature,
// rows assembled in parallel (entries are independent, so the result does
// not depend on the thread count).
inline Eigen::MatrixXd gram_matrix_g(const LinearPotential& pot,
                                     const std::vector<BasisElement>& els,
                                     int grid_n = 1 << 12, int threads = 1) {
  const int n = static_cast<int>(els.size());
  Eigen::MatrixXd g(n, n);
  parallel_for_samples(n, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i)
      for (int j = 0; j < n; ++j)
        g(i, j) = g_form(els[i], els[j], pot, grid_n);
  });
  return g;
}

inline Eigen::MatrixXd gram_matrix_g(const LinearPotential& pot,
                                     BasisKind kind, int n, double t,
                                     int grid_n = 1 << 12, int threads = 1) {
  std::vector<BasisElement> els;
  els.reserve(n);
  for (int i = 0; i < n; ++i) els.push_back(basis_element(kind, i, t));
  return gram_matrix_g(pot, els, grid_n, threads);
}

// Tr P_n G = sum_i <e_i, G e_i> over the first n elements.  For a general
// linear field this includes a symmetric-part boundary term
// (1/2) e_i(t)^T S e_i(t) on elements that do not vanish at t; the
// renormalization constant below keeps only the curl part.
inline double trace_pn_g(const LinearPotential& pot, BasisKind kind, int n,
                         double t, int grid_n = 1 << 12) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const BasisElement e = basis_element(kind, i, t);
    s += g_form(e, e, pot, grid_n);
  }
  return s;
}

// Renormalization constant r_n = B . (1/2) sum_k int e_k x e_k' ds over an
// explicit index list (useful for subfamilies).
inline double renorm_constant_for(const Vec3& b, BasisKind kind,
                                  const std::vector<int>& indices, double t) {
  double s = 0.0;
  for (int i : indices)
    s += dot(b, area_integral(basis_element(kind, i, t)));
  return s;
}

// r_n over the first n elements of the standard enumeration.
inline double renorm_constant(const Vec3& b, BasisKind kind, int n, double t) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  return renorm_constant_for(b, kind, idx, t);
}

// Indices (into the full trig enumeration) of the planar subfamily
// {e_{k,m}: k = 1..freq_max, m in members}, ordered frequency-major so
// that every prefix is itself a subfamily.  Members 1 and 4 carry area
// +1/(4 pi k) each; their partial traces grow like the harmonic series.
inline std::vector<int> trig_subfamily(int freq_max,
                                       const std::vector<int>& members = {1}) {
  std::vector<int> idx;
  idx.reserve(freq_max * members.size());
  for (int k = 1; k <= freq_max; ++k)
    for (int m : members) idx.push_back(3 + 6 * (k - 1) + (m - 1));
  return idx;
}

// ---- spectrum of G*G on piecewise-linear subspaces -----------------------

// Eigenvalues of the compact operator G*G restricted to the span of
// piecewise-linear paths on a uniform n-interval grid per direction
// (dimension 3n).  In a CM-orthonormal ramp basis the matrix elements are
//   <G e_{d,p}, G e_{d',q}> = A_{d,d'} * int_0^t e_p(s) e_q(s) ds,
// with A = M^T M; the scalar factor is assembled by Simpson on a fine grid
// (exact when n divides it) and the 3n x 3n matrix diagonalized.
inline std::vector<double> gdagg_eigs(const LinearPotential& pot, double t,
                                      int n_per_direction,
                                      int fine_grid = 1 << 11) {
  const int n = n_per_direction;
  const double h = t / n;
  // CM-orthonormal ramps: slope sqrt(n/t) on [t_p, t_{p+1}], constant after
  auto ramp = [&](int p, double s) {
    const double u = s - p * h;
    if (u <= 0.0) return 0.0;
    return std::sqrt(n / t) * std::min(u, h);
  };
  Eigen::MatrixXd s_mat(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q) {
      const double v = composite_simpson<double>(
          [&](double s) { return ramp(p, s) * ramp(q, s); }, 0.0, t, fine_grid);
      s_mat(p, q) = v;
      s_mat(q, p) = v;
    }
  const auto a = pot.mtm();
  Eigen::Matrix3d a_mat;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a_mat(i, j) = a[i][j];
  Eigen::MatrixXd full(3 * n, 3 * n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      full.block<3, 3>(3 * p, 3 * q) = s_mat(p, q) * a_mat;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(full);
  std::vector<double> eigs(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + 3 * n);
  std::sort(eigs.rbegin(), eigs.rend());
  return eigs;
}

// The closed-form spectrum of G*G on the whole space:
//   lambda_{m,j} = 4 a_j t^2 / (pi^2 (1 + 2m)^2),  m = 0, 1, ...
// with a_j the eigenvalues of M^T M.  Returns the largest `count` values.
inline std::vector<double> gdagg_true_eigs(const LinearPotential& pot, double t,
                                           int count) {
  const auto a = pot.mtm();
  Eigen::Matrix3d a_mat;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a_mat(i, j) = a[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(a_mat);
  std::vector<double> out;
  const int mmax = count + 2;
  for (int j = 0; j < 3; ++j)
    for (int m = 0; m <= mmax; ++m)
      out.push_back(4.0 * solver.eigenvalues()(j) * t * t /
                    (pi * pi * (1.0 + 2.0 * m) * (1.0 + 2.0 * m)));
  std::sort(out.rbegin(), out.rend());
  out.resize(count);
  return out;
}

// Sum over the full closed-form spectrum (squared Hilbert-Schmidt norm of
// G): sum_{m,j} lambda_{m,j} = (t^2/2) sum_j a_j.
inline double gdagg_eig_sum(const LinearPotential& pot, double t) {
  const auto a = pot.mtm();
  return 0.5 * t * t * (a[0][0] + a[1][1] + a[2][2]);
}

// ---- Stokes decomposition of the midpoint sum ----------------------------

// For the closed contour "polygon gamma, then straight back from gamma(t)
// to the origin", the circulation of a linear field equals the flux of its
// curl through any spanning surface.  With
//   surface = B . (shoelace vector area of gamma),
//   line    = integral of a along the straight segment gamma(t) -> 0,
// the midpoint line-integral sum along gamma equals surface - line exactly
// (the return segment has zero shoelace area, and the symmetric part of M
// integrates to zero around any closed contour).
struct StokesParts {
  double surface = 0.0;
  double line = 0.0;
};

inline StokesParts stokes_decompose(const LinearPotential& pot,
                                    const GridPath& gamma) {
  StokesParts parts;
  parts.surface = dot(pot.b_field(), levy_area(gamma));
  // int_{p -> 0} a . dr = -int_0^1 a(u p) . p du = -(1/2) a(p) . p
  const Vec3 p = gamma.knots[gamma.n_steps()];
  parts.line = -0.5 * dot(pot.eval(p), p);
  return parts;
}

// ---- basis-(in)dependence experiment for h_n -----------------------------

struct HnRow {
  int n = 0;          // truncation: dyadic intervals (tent), elements (trig)
  double rn = 0.0;    // renormalization constant of the prefix
  double h_mean = 0.0;
  double h_stderr = 0.0;
  double gap_sq_mean = 0.0;  // E |h_n - h_ref|^2
  double gap_sq_stderr = 0.0;
};

struct HnOptions {
  std::vector<int> tent_ns = {4, 16, 64};
  std::vector<int> trig_shells = {1, 5, 10};  // full six-member shells
  std::vector<int> sub_freqs = {4, 16, 64};   // subfamily frequency cutoffs
  std::vector<int> sub_members = {1, 4};      // non-cancelling members
  int n_fine = 1 << 14;
  int n_samples = 20000;
  std::uint64_t seed = 1;
  int threads = 1;
  int gram_grid = 1 << 11;
};

struct HnReport {
  std::vector<HnRow> tent;      // renormalized (r_n = 0 for tents)
  std::vector<HnRow> trig;      // full shells, renormalized
  std::vector<HnRow> sub;       // subfamily, NOT renormalized (rn reported)
  double href_mean = 0.0;
  double href_stderr = 0.0;
  double href_var = 0.0;
  // common-random-numbers difference between the finest tent and trig rows
  double diff_mean = 0.0;
  double diff_stderr = 0.0;
  double diff_sq_mean = 0.0;
};

// Monte Carlo comparison of basis-projected quadratic sums.  Per Brownian
// sample (fine polygon, n_fine steps):
//   * tent h_n  = midpoint line sum of the path coarsened to n intervals
//     (the first 3n tent elements span exactly those polygons);
//   * trig h_n  = c^T Gram c - r_n with coefficients c_i = <e_i, omega>
//     read off the fine polygon (the stochastic-extension coefficients);
//   * subfamily g_n = the same quadratic form without the counterterm;
//   * h_ref = midpoint line sum of the fine polygon itself.
// Deterministic in (seed, n_samples) independent of the thread count.
inline HnReport hn_convergence_experiment(const LinearPotential& pot,
                                          const HnOptions& opt) {
  const double t = 1.0;  // trig basis is defined on t = 1
  for (int n : opt.tent_ns)
    if (n <= 0 || opt.n_fine % n != 0)
      throw precondition_error("hn experiment: tent n must divide n_fine");

  // element index lists
  std::vector<int> trig_counts;
  int trig_max = 0;
  for (int s : opt.trig_shells) {
    trig_counts.push_back(3 + 6 * s);
    trig_max = std::max(trig_max, 3 + 6 * s);
  }
  const int sub_kmax =
      *std::max_element(opt.sub_freqs.begin(), opt.sub_freqs.end());
  const std::vector<int> sub_idx = trig_subfamily(sub_kmax, opt.sub_members);
  const int mem = static_cast<int>(opt.sub_members.size());

  // distinct elements needed, with slot maps for the two quadratic forms
  std::vector<BasisElement> full_els, sub_els;
  for (int i = 0; i < trig_max; ++i)
    full_els.push_back(basis_element(BasisKind::trig, i, t));
  for (int i : sub_idx) sub_els.push_back(basis_element(BasisKind::trig, i, t));

  const Eigen::MatrixXd gram_full =
      gram_matrix_g(pot, full_els, opt.gram_grid, opt.threads);
  const Eigen::MatrixXd gram_sub =
      gram_matrix_g(pot, sub_els, opt.gram_grid, opt.threads);

  // counterterms
  const Vec3 b = pot.b_field();
  std::vector<double> trig_rn, sub_rn;
  for (int c : trig_counts)
    trig_rn.push_back(renorm_constant(b, BasisKind::trig, c, t));
  for (int k : opt.sub_freqs) {
    std::vector<int> pre(sub_idx.begin(), sub_idx.begin() + mem * k);
    sub_rn.push_back(renorm_constant_for(b, BasisKind::trig, pre, t));
  }

  // per-step increments of every element on the fine grid (flat tables)
  const int nf = opt.n_fine;
  auto increment_table = [&](const std::vector<BasisElement>& els) {
    std::vector<double> tab(els.size() * nf * 3);
    for (std::size_t e = 0; e < els.size(); ++e) {
      Vec3 prev = els[e].eval(0.0);
      for (int j = 0; j < nf; ++j) {
        const Vec3 next = els[e].eval(t * (j + 1) / nf);
        for (int c = 0; c < 3; ++c)
          tab[(e * nf + j) * 3 + c] = next[c] - prev[c];
        prev = next;
      }
    }
    return tab;
  };
  const std::vector<double> tab_full = increment_table(full_els);
  const std::vector<double> tab_sub = increment_table(sub_els);

  // per-sample statistics layout:
  //   [tent h ..][trig h ..][sub g ..][href][diff]
  const int n_tent = static_cast<int>(opt.tent_ns.size());
  const int n_trig = static_cast<int>(trig_counts.size());
  const int n_sub = static_cast<int>(opt.sub_freqs.size());
  const int n_cols = n_tent + n_trig + n_sub + 2;
  std::vector<double> buf(static_cast<std::size_t>(opt.n_samples) * n_cols);

  parallel_for_samples(opt.n_samples, opt.threads,
                       [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> coef_full(full_els.size());
    std::vector<double> coef_sub(sub_els.size());
    for (std::int64_t s = lo; s < hi; ++s) {
      const GridPath w = sample_brownian(t, nf, opt.seed, s);
      double* row = buf.data() + s * n_cols;
      int col = 0;
      for (int n : opt.tent_ns)
        row[col++] = midpoint_line_sum(pot, coarsen(w, n));
      // stochastic-extension coefficients: exact CM pairing with the polygon
      auto coefficients = [&](const std::vector<double>& tab,
                              std::vector<double>& out) {
        for (std::size_t e = 0; e < out.size(); ++e) {
          double acc = 0.0;
          const double* te = tab.data() + e * nf * 3;
          for (int j = 0; j < nf; ++j) {
            const Vec3 dw = w.increment(j);
            acc += dw[0] * te[3 * j] + dw[1] * te[3 * j + 1] +
                   dw[2] * te[3 * j + 2];
          }
          out[e] = acc * nf / t;
        }
      };
      coefficients(tab_full, coef_full);
      coefficients(tab_sub, coef_sub);
      for (int r = 0; r < n_trig; ++r) {
        const int m = trig_counts[r];
        double q = 0.0;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            q += coef_full[i] * coef_full[j] * gram_full(i, j);
        row[col++] = q - trig_rn[r];
      }
      for (int r = 0; r < n_sub; ++r) {
        const int m = mem * opt.sub_freqs[r];
        double q = 0.0;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            q += coef_sub[i] * coef_sub[j] * gram_sub(i, j);
        row[col++] = q;  // unrenormalized on purpose
      }
      const double href = midpoint_line_sum(pot, w);
      row[col++] = href;
      row[col++] = row[0 + n_tent - 1] - row[n_tent + n_trig - 1];
    }
  });

  // column-wise reduction (pairwise, thread-count independent)
  auto column_stats = [&](int col) {
    std::vector<cplx> tmp(opt.n_samples);
    for (int s = 0; s < opt.n_samples; ++s)
      tmp[s] = buf[static_cast<std::size_t>(s) * n_cols + col];
    return mean_stderr(tmp.data(), opt.n_samples);
  };
  auto gap_stats = [&](int col, int href_col) {
    std::vector<cplx> tmp(opt.n_samples);
    for (int s = 0; s < opt.n_samples; ++s) {
      const double* row = buf.data() + static_cast<std::size_t>(s) * n_cols;
      const double d = row[col] - row[href_col];
      tmp[s] = d * d;
    }
    return mean_stderr(tmp.data(), opt.n_samples);
  };

  HnReport rep;
  const int href_col = n_tent + n_trig + n_sub;
  int col = 0;
  for (int r = 0; r < n_tent; ++r, ++col) {
    HnRow row;
    row.n = opt.tent_ns[r];
    row.rn = 0.0;
    const auto st = column_stats(col);
    row.h_mean = st.mean.real();
    row.h_stderr = st.stderr_re;
    const auto gp = gap_stats(col, href_col);
    row.gap_sq_mean = gp.mean.real();
    row.gap_sq_stderr = gp.stderr_re;
    rep.tent.push_back(row);
  }
  for (int r = 0; r < n_trig; ++r, ++col) {
    HnRow row;
    row.n = trig_counts[r];
    row.rn = trig_rn[r];
    const auto st = column_stats(col);
    row.h_mean = st.mean.real();
    row.h_stderr = st.stderr_re;
    const auto gp = gap_stats(col, href_col);
    row.gap_sq_mean = gp.mean.real();
    row.gap_sq_stderr = gp.stderr_re;
    rep.trig.push_back(row);
  }
  for (int r = 0; r < n_sub; ++r, ++col) {
    HnRow row;
    row.n = mem * opt.sub_freqs[r];
    row.rn = sub_rn[r];
    const auto st = column_stats(col);
    row.h_mean = st.mean.real();
    row.h_stderr = st.stderr_re;
    const auto gp = gap_stats(col, href_col);
    row.gap_sq_mean = gp.mean.real();
    row.gap_sq_stderr = gp.stderr_re;
    rep.sub.push_back(row);
  }
  const auto hs = column_stats(href_col);
  rep.href_mean = hs.mean.real();
  rep.href_stderr = hs.stderr_re;
  rep.href_var = hs.stderr_re * hs.stderr_re * opt.n_samples;
  const auto ds = column_stats(href_col + 1);
  rep.diff_mean = ds.mean.real();
  rep.diff_stderr = ds.stderr_re;
  const auto dsq = gap_stats(n_tent - 1, n_tent + n_trig - 1);
  rep.diff_sq_mean = dsq.mean.real();
  return rep;
}

}  // namespace magpi
