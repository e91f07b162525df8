#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "magpi/cameron_martin.hpp"
#include "magpi/fourier_measure.hpp"
#include "magpi/grid_path.hpp"
#include "magpi/renorm.hpp"

using namespace magpi;

namespace {

LinearPotential identity_potential() {
  LinearPotential p;
  for (int i = 0; i < 3; ++i) p.m[i][i] = 1.0;
  return p;
}

LinearPotential skew_plus_stretch() {
  // symmetric gauge for B = (1,1,1) plus a symmetric part: exercises the
  // general-M paths (nonzero divergence is fine here, no quantum use).
  LinearPotential p = remark_field();
  p.m[0][0] += 0.3;
  p.m[1][1] -= 0.1;
  p.m[2][2] += 0.2;
  p.m[0][1] += 0.15;
  p.m[1][0] += 0.15;
  return p;
}

}  // namespace

TEST_CASE("g_apply cumulative integral and the midpoint identity") {
  const auto pot = remark_field();
  const GridPath w = sample_brownian(1.0, 64, 99u, 0);

  // cm_inner(gamma, G gamma) telescopes to the midpoint line-integral sum
  const GridPath gw = g_apply(pot, w);
  REQUIRE(cm_inner(w, gw) ==
          Catch::Approx(midpoint_line_sum(pot, w)).margin(1e-12));

  // same identity for a field with a symmetric part
  const auto gen = skew_plus_stretch();
  REQUIRE(cm_inner(w, g_apply(gen, w)) ==
          Catch::Approx(midpoint_line_sum(gen, w)).margin(1e-12));

  // zero potential maps to the zero path
  const GridPath z = g_apply(LinearPotential{}, w);
  for (const auto& k : z.knots) REQUIRE(std::sqrt(norm2(k)) == 0.0);

  // straight line to p: <gamma, G gamma> = (1/2) p . S p (symmetric part)
  GridPath seg;
  seg.t = 2.0;
  const Vec3 p{0.4, -1.1, 0.7};
  for (int j = 0; j <= 16; ++j) seg.knots.push_back((j / 16.0) * p);
  const auto s_part = gen.symmetric_part();
  double quad = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) quad += p[i] * s_part[i][j] * p[j];
  REQUIRE(cm_inner(seg, g_apply(gen, seg)) ==
          Catch::Approx(0.5 * quad).margin(1e-12));
}

TEST_CASE("Stokes decomposition: midpoint sum = surface - line") {
  const GridPath w = sample_brownian(1.0, 128, 7u, 0);

  for (const auto& pot : {remark_field(), skew_plus_stretch()}) {
    const StokesParts parts = stokes_decompose(pot, w);
    const double mid = midpoint_line_sum(pot, w);
    REQUIRE(mid == Catch::Approx(parts.surface - parts.line).margin(1e-10));
  }

  // straight segment: zero enclosed area, so the whole sum is -line
  GridPath seg;
  seg.t = 1.0;
  const Vec3 v{0.4, -1.1, 0.7};
  for (int j = 0; j <= 16; ++j) seg.knots.push_back((j / 16.0) * v);
  const auto gen = skew_plus_stretch();
  const StokesParts ps = stokes_decompose(gen, seg);
  REQUIRE(ps.surface == Catch::Approx(0.0).margin(1e-14));
  REQUIRE(midpoint_line_sum(gen, seg) ==
          Catch::Approx(-ps.line).margin(1e-12));
  // for the antisymmetric field every term vanishes on a ray through 0
  REQUIRE(midpoint_line_sum(remark_field(), seg) ==
          Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("Stokes identity on a batch of random polygons") {
  const auto pot = skew_plus_stretch();
  for (int trial = 0; trial < 1000; ++trial) {
    const GridPath w = sample_brownian(1.0, 32, 1234u, trial);
    const StokesParts parts = stokes_decompose(pot, w);
    REQUIRE(std::abs(midpoint_line_sum(pot, w) -
                     (parts.surface - parts.line)) < 1e-10);
  }
}

TEST_CASE("basis quadratic form <e, G e>: closed forms per element") {
  const auto pot = remark_field();  // B = (1,1,1), no symmetric part

  // trig shell k, members 1..6 carry signed areas +,-,-,+,0,0 / (4 pi k)
  for (int k = 1; k <= 2; ++k) {
    const double u = 1.0 / (4.0 * pi * k);
    const double expected[6] = {u, -u, -u, u, 0.0, 0.0};
    for (int m = 0; m < 6; ++m) {
      const auto e = basis_element(BasisKind::trig, 3 + 6 * (k - 1) + m, 1.0);
      REQUIRE(g_form(e, e, pot) == Catch::Approx(expected[m]).margin(1e-10));
    }
  }

  // tent elements all have zero self-form for antisymmetric M
  for (int i = 0; i < 12; ++i) {
    const auto e = basis_element(BasisKind::tent, i, 1.0);
    REQUIRE(g_form(e, e, pot) == Catch::Approx(0.0).margin(1e-10));
  }

  // symmetric M contributes the boundary term (1/2) e(t)^T S e(t):
  // for the first line element e(t) = sqrt(t) ex and S = diag(1,2,3)
  LinearPotential diag;
  diag.m[0][0] = 1.0;
  diag.m[1][1] = 2.0;
  diag.m[2][2] = 3.0;
  const auto line0 = basis_element(BasisKind::trig, 0, 1.0);
  REQUIRE(g_form(line0, line0, diag) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("antisymmetric Gram part equals the area pairing") {
  // <e_i, G e_j> - <e_j, G e_i> = B . (A(e_j, e_i) - A(e_i, e_j)) with
  // A(u, v) = (1/2) int u x v' ds, for any antisymmetric field
  const auto pot = remark_field();
  const Vec3 b = pot.b_field();
  std::vector<BasisElement> els;
  for (int i = 0; i < 16; ++i)
    els.push_back(basis_element(BasisKind::tent, i, 1.0));
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < i; ++j) {
      const double lhs = g_form(els[i], els[j], pot) - g_form(els[j], els[i], pot);
      const Vec3 rhs =
          area_pairing(els[j], els[i]) - area_pairing(els[i], els[j]);
      REQUIRE(lhs == Catch::Approx(dot(b, rhs)).margin(1e-8));
    }
}

TEST_CASE("renormalization constants: cancellation and harmonic growth") {
  const auto pot = remark_field();
  const Vec3 b{1.0, 1.0, 1.0};

  // full trig shells cancel: 3 lines + 2 shells
  REQUIRE(renorm_constant(b, BasisKind::trig, 15, 1.0) ==
          Catch::Approx(0.0).margin(1e-9));
  // tent prefixes are identically zero
  REQUIRE(renorm_constant(b, BasisKind::tent, 30, 1.0) ==
          Catch::Approx(0.0).margin(1e-9));
  // zero field kills every constant
  REQUIRE(renorm_constant(Vec3{}, BasisKind::trig, 15, 1.0) == 0.0);

  // for an antisymmetric field the full trace agrees with r_n
  REQUIRE(trace_pn_g(pot, BasisKind::trig, 15, 1.0) ==
          Catch::Approx(0.0).margin(1e-9));
  REQUIRE(trace_pn_g(pot, BasisKind::tent, 30, 1.0) ==
          Catch::Approx(0.0).margin(1e-9));

  // the planar subfamily accumulates the harmonic series H_n / (4 pi)
  const auto idx = trig_subfamily(8);
  double h8 = 0.0;
  for (int k = 1; k <= 8; ++k) h8 += 1.0 / k;
  REQUIRE(renorm_constant_for(b, BasisKind::trig, idx, 1.0) ==
          Catch::Approx(h8 / (4.0 * pi)).margin(1e-9));
  // members {1,4} double it
  REQUIRE(renorm_constant_for(b, BasisKind::trig, trig_subfamily(8, {1, 4}),
                              1.0) ==
          Catch::Approx(2.0 * h8 / (4.0 * pi)).margin(1e-9));

  // additivity: prefix + tail contributions recompose exactly
  const double r4 = renorm_constant_for(b, BasisKind::trig, trig_subfamily(4), 1.0);
  std::vector<int> tail;
  for (int k = 5; k <= 8; ++k) tail.push_back(3 + 6 * (k - 1));
  const double rt = renorm_constant_for(b, BasisKind::trig, tail, 1.0);
  REQUIRE(renorm_constant_for(b, BasisKind::trig, idx, 1.0) ==
          Catch::Approx(r4 + rt).margin(1e-14));
}

TEST_CASE("projected quadratic form matches a rendered-path line integral") {
  const auto pot = remark_field();
  const int n = 9;  // 3 lines + first trig shell
  const GridPath fine = sample_brownian(1.0, 1 << 10, 42u, 3);

  std::vector<BasisElement> els;
  std::vector<double> coef;
  for (int i = 0; i < n; ++i) {
    els.push_back(basis_element(BasisKind::trig, i, 1.0));
    coef.push_back(cm_inner_exact(els.back(), fine));
  }

  // bilinear route: sum_ij c_i c_j <e_i, G e_j>
  const Eigen::MatrixXd gram = gram_matrix_g(pot, BasisKind::trig, n, 1.0);
  double quad = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) quad += coef[i] * coef[j] * gram(i, j);

  // direct route: render the projection and take its midpoint sum
  GridPath proj;
  proj.t = 1.0;
  const int m = 1 << 12;
  proj.knots.resize(m + 1);
  for (int j = 0; j <= m; ++j) {
    Vec3 x{};
    for (int i = 0; i < n; ++i)
      x = x + coef[i] * els[i].eval(proj.t * j / m);
    proj.knots[j] = x;
  }
  REQUIRE(quad == Catch::Approx(midpoint_line_sum(pot, proj)).margin(1e-4));

  // threaded assembly is bit-identical (entries independent)
  const Eigen::MatrixXd gram3 =
      gram_matrix_g(pot, BasisKind::trig, n, 1.0, 1 << 12, 3);
  REQUIRE((gram - gram3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("G*G spectrum: Simpson assembly agrees with the exact ramp Gram") {
  const auto pot = skew_plus_stretch();
  const int n = 8;
  const double t = 1.0;
  const double h = t / n;

  // exact L2 Gram of the CM-normalized ramps (1-based closed form),
  // Kronecker M^T M
  Eigen::MatrixXd s_exact(n, n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      s_exact(i - 1, j - 1) = (i == j)
                                  ? h * h * (1.0 / 3.0 + n - i)
                                  : h * h * (0.5 + n - std::max(i, j));

  const auto a = pot.mtm();
  Eigen::Matrix3d a_mat;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a_mat(i, j) = a[i][j];
  Eigen::MatrixXd full(3 * n, 3 * n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      full.block<3, 3>(3 * p, 3 * q) = s_exact(p, q) * a_mat;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(full);

  const auto eigs = gdagg_eigs(pot, t, n);
  REQUIRE(static_cast<int>(eigs.size()) == 3 * n);
  for (int i = 0; i < 3 * n; ++i) {
    const double want = ref.eigenvalues()(3 * n - 1 - i);  // ascending order
    REQUIRE(eigs[i] == Catch::Approx(want).margin(1e-11));
  }
}

TEST_CASE("G*G spectrum converges to the closed-form eigenvalues") {
  // the cumulative-integral operator per direction: a(x) = x
  const auto id = identity_potential();
  const auto eigs = gdagg_eigs(id, 1.0, 64);
  const auto want = gdagg_true_eigs(id, 1.0, 9);

  // top eigenvalue 4/pi^2 with multiplicity 3
  REQUIRE(want[0] == Catch::Approx(4.0 / (pi * pi)).epsilon(1e-12));
  REQUIRE(want[2] == Catch::Approx(4.0 / (pi * pi)).epsilon(1e-12));
  REQUIRE(want[3] == Catch::Approx(4.0 / (9.0 * pi * pi)).epsilon(1e-12));
  REQUIRE(want[8] == Catch::Approx(4.0 / (25.0 * pi * pi)).epsilon(1e-12));

  for (int i = 0; i < 9; ++i)
    REQUIRE(std::abs(eigs[i] - want[i]) / want[i] < 5e-3);

  // no spurious negative modes
  for (double e : eigs) REQUIRE(e >= -1e-10);

  // trace bounded by the squared HS norm, and close to it: sum a_j t^2 / 2
  double sum = 0.0;
  for (double e : eigs) sum += e;
  const double hs = gdagg_eig_sum(id, 1.0);
  REQUIRE(hs == Catch::Approx(1.5).epsilon(1e-12));
  REQUIRE(sum <= hs + 1e-9);
  REQUIRE(sum > hs * 0.98);

  // zero potential: all zeros
  const auto zero_eigs = gdagg_eigs(LinearPotential{}, 1.0, 8);
  for (double e : zero_eigs) REQUIRE(std::abs(e) < 1e-14);

  // the symmetric-gauge benchmark has a_j = {3/4, 3/4, 0}
  const auto bw = gdagg_true_eigs(remark_field(), 1.0, 3);
  REQUIRE(bw[0] == Catch::Approx(3.0 / (pi * pi)).epsilon(1e-12));
  REQUIRE(bw[1] == Catch::Approx(3.0 / (pi * pi)).epsilon(1e-12));
  REQUIRE(bw[2] == Catch::Approx(3.0 / (9.0 * pi * pi)).epsilon(1e-12));
}

TEST_CASE("coarsened tent projections via the midpoint sum") {
  // the first 3 * 2^l tent elements span dyadic polygons, so the projected
  // quadratic form IS the midpoint sum of the coarsened path
  const auto pot = remark_field();
  const GridPath fine = sample_brownian(1.0, 1 << 8, 5u, 1);
  for (int n : {4, 16, 64}) {
    const GridPath coarse = coarsen(fine, n);
    REQUIRE(cm_inner(coarse, g_apply(pot, coarse)) ==
            Catch::Approx(midpoint_line_sum(pot, coarse)).margin(1e-12));
  }
}

TEST_CASE("h_n experiment: determinism and basic statistics") {
  HnOptions opt;
  opt.tent_ns = {4, 16};
  opt.trig_shells = {1, 2};
  opt.sub_freqs = {2, 4};
  opt.n_fine = 256;
  opt.n_samples = 600;
  opt.seed = 77;
  opt.threads = 1;
  opt.gram_grid = 1 << 10;

  const auto pot = remark_field();
  const HnReport rep = hn_convergence_experiment(pot, opt);

  opt.threads = 3;
  const HnReport rep3 = hn_convergence_experiment(pot, opt);
  REQUIRE(rep.href_mean == rep3.href_mean);
  REQUIRE(rep.diff_mean == rep3.diff_mean);
  for (std::size_t i = 0; i < rep.tent.size(); ++i) {
    REQUIRE(rep.tent[i].h_mean == rep3.tent[i].h_mean);
    REQUIRE(rep.tent[i].gap_sq_mean == rep3.tent[i].gap_sq_mean);
  }
  for (std::size_t i = 0; i < rep.trig.size(); ++i)
    REQUIRE(rep.trig[i].h_mean == rep3.trig[i].h_mean);
  for (std::size_t i = 0; i < rep.sub.size(); ++i)
    REQUIRE(rep.sub[i].h_mean == rep3.sub[i].h_mean);

  // the reference value is the midpoint sum on the fine polygon: mean ~ 0,
  // variance ~ |B|^2 t^2 / 4 = 3/4
  REQUIRE(std::abs(rep.href_mean) < 5.0 * rep.href_stderr);
  REQUIRE(rep.href_var == Catch::Approx(0.75).margin(0.15));

  // renormalized columns are centered
  for (const auto& row : rep.tent)
    REQUIRE(std::abs(row.h_mean) < 5.0 * row.h_stderr);
  for (const auto& row : rep.trig)
    REQUIRE(std::abs(row.h_mean) < 5.0 * row.h_stderr);

  // the unrenormalized subfamily mean tracks its r_n
  for (const auto& row : rep.sub)
    REQUIRE(std::abs(row.h_mean - row.rn) < 5.0 * row.h_stderr);

  // tent gaps shrink with n
  REQUIRE(rep.tent[1].gap_sq_mean < rep.tent[0].gap_sq_mean);

  // finer projections track the reference more closely than the CRN
  // difference between the two bases' coarse rows would suggest
  REQUIRE(rep.diff_sq_mean < rep.href_var);
}
