#include <catch2/catch_amalgamated.hpp>

#include "magpi/fourier_measure.hpp"

using namespace magpi;

TEST_CASE("point measures merge and prune atoms") {
  PointMeasure m;
  m.add({1.0, 0.0, 0.0}, cplx(0.5, 0.0));
  m.add({1.0, 0.0, 0.0}, cplx(0.25, 0.5));
  m.add({0.0, 2.0, 0.0}, cplx(-0.75, 0.0));
  m.merge();
  REQUIRE(m.size() == 2);
  CHECK(m.total_variation() == Catch::Approx(std::abs(cplx(0.75, 0.5)) + 0.75));

  PointMeasure cancel;
  cancel.add({0.0, 0.0, 1.0}, 1.0);
  cancel.add({0.0, 0.0, 1.0}, -1.0);
  cancel.prune(0.0);
  CHECK(cancel.empty());
}

TEST_CASE("field evaluation and convolution agree pointwise") {
  PointMeasure a, b;
  a.add({1.0, 0.0, 0.0}, cplx(0.3, -0.1));
  a.add({0.0, -2.0, 0.0}, cplx(0.0, 0.7));
  b.add({0.5, 0.5, 0.0}, cplx(1.0, 0.2));
  const PointMeasure c = PointMeasure::convolve(a, b);
  const Vec3 x = {0.7, -1.3, 0.4};
  CHECK(std::abs(c.eval(x) - a.eval(x) * b.eval(x)) < 1e-14);

  // analytic continuation: e^{ik.z} with bilinear k.z
  const CVec3 z = {cplx(0.7, 0.2), cplx(-1.3, -0.5), cplx(0.4, 0.0)};
  CHECK(std::abs(c.eval(z) - a.eval(z) * b.eval(z)) < 1e-12);
}

TEST_CASE("cos field is real, divergence free, band limited") {
  const FourierPotential p = cos_field();
  CHECK(p.total_variation() == Catch::Approx(1.0));
  CHECK(p.support_radius() == Catch::Approx(1.0));
  CHECK(p.coulomb_defect() == 0.0);
  CHECK(p.max_conjugate_symmetry_defect() < 1e-15);

  const Vec3 x = {0.3, 1.2, -0.5};
  const Vec3 v = p.eval_real(x);
  CHECK(v[0] == Catch::Approx(std::cos(1.2)));
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 0.0);

  // |a|^2 measure evaluates to cos^2
  const PointMeasure sq = p.a_squared_measure();
  CHECK(sq.size() == 3);
  CHECK(std::abs(sq.eval(x).real() - std::cos(1.2) * std::cos(1.2)) < 1e-14);
}

TEST_CASE("divergence measure picks up i k_j weights") {
  const FourierPotential p = delta_field({1.0, 0.0, 0.0}, 1.0, 0);
  const PointMeasure d = p.divergence_measure();
  REQUIRE(d.size() == 1);
  CHECK(std::abs(d.atoms()[0].w - cplx(0.0, 1.0)) < 1e-15);
  CHECK(p.coulomb_defect() == Catch::Approx(1.0));
}

TEST_CASE("sup norm bounds for the cos field") {
  const SupNormBound b = sup_norm_bound(cos_field());
  CHECK(b.certified == Catch::Approx(1.0));
  CHECK(b.sampled <= 1.0 + 1e-12);
  CHECK(b.sampled > 0.999);
}

TEST_CASE("series radius formulas") {
  CHECK(lambda_star(1.0, 1.0, 1.0, 1.0) == Catch::Approx(1.0 / std::sqrt(6.0)));
  // z = i t / hbar at t = hbar = 1 must agree with the real-time radius
  CHECK(lambda_star_z(1.0, 1.0, cplx(0.0, 1.0), 1.0) ==
        Catch::Approx(1.0 / std::sqrt(6.0)));
  CHECK(lambda_tilde(2.0, 1.0, 1.0, 1.0) == Catch::Approx(1.0 / std::sqrt(24.0)));
  // the scalar-potential variant has t/hbar in both factors
  CHECK(lambda_tilde(2.0, 1.0, 1.0, 2.0) ==
        Catch::Approx(1.0 / std::sqrt((2.0 * 4.0 * 0.5) * (2.0 * 0.5 + 1.0))));
}

TEST_CASE("constant-field gauges") {
  const LinearPotential sym = symmetric_gauge({0.0, 0.0, 2.0});
  const Vec3 v = sym.eval(Vec3{1.0, 2.0, 3.0});
  CHECK(v[0] == Catch::Approx(-2.0));
  CHECK(v[1] == Catch::Approx(1.0));
  CHECK(v[2] == 0.0);
  CHECK(sym.divergence() == 0.0);
  const Vec3 b = sym.b_field();
  CHECK(b[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(b[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(b[2] == Catch::Approx(2.0));

  const LinearPotential lan = landau_gauge(2.0);
  const Vec3 bl = lan.b_field();
  CHECK(bl[2] == Catch::Approx(2.0));
  CHECK(lan.divergence() == 0.0);
  const Vec3 vl = lan.eval(Vec3{1.0, 2.0, 3.0});
  CHECK(vl[0] == Catch::Approx(-4.0));
  CHECK(vl[1] == 0.0);
}

TEST_CASE("critical time of linear potentials") {
  // |B| = 2 in symmetric gauge: t* = pi / (2 |B|) = pi/4
  CHECK(t_star(symmetric_gauge({0.0, 0.0, 2.0})) == Catch::Approx(pi / 4.0));
  // B = (1,1,1): largest eigenvalue of M^T M is 3/4
  CHECK(max_eig_mtm(remark_field()) == Catch::Approx(0.75));
  CHECK(t_star(remark_field()) == Catch::Approx(pi / (2.0 * std::sqrt(3.0))));
}
