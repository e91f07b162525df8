#include <catch2/catch_amalgamated.hpp>

#include "magpi/feynman_mc.hpp"

using namespace magpi;

namespace {

WavePacket probe_packet() {
  WavePacket p;
  p.atoms.push_back({{0.5, 0.25, 0.0}, 1.0});
  return p;
}

const std::vector<Vec3> kProbes = {{0.0, 0.0, 0.0},
                                   {0.3, -0.2, 0.1},
                                   {-0.7, 0.4, 0.2}};

}  // namespace

TEST_CASE("sample averages are bit-identical for any thread count") {
  const PhysicalParams par{1.0, 1.0, 1.0};
  MCOptions opts;
  opts.n_samples = 4000;
  opts.n_steps = 64;
  opts.seed = 31;
  opts.threads = 1;
  const auto one = psi_m_mc(cos_field(), probe_packet(), par, 1, kProbes, opts);
  opts.threads = 5;  // deliberately not dividing n_samples
  const auto five = psi_m_mc(cos_field(), probe_packet(), par, 1, kProbes, opts);
  REQUIRE(one.size() == five.size());
  for (std::size_t q = 0; q < one.size(); ++q) {
    CHECK(one[q].mean.real() == five[q].mean.real());
    CHECK(one[q].mean.imag() == five[q].mean.imag());
    CHECK(one[q].stderr_re == five[q].stderr_re);
  }
}

TEST_CASE("order zero reproduces free evolution exactly in expectation") {
  const PhysicalParams par{1.0, 1.0, 1.0};
  MCOptions opts;
  opts.n_samples = 20000;
  opts.n_steps = 16;
  opts.seed = 7;
  opts.threads = 4;
  const WavePacket p0 = probe_packet();
  const WavePacket free_pkt = apply_free(p0, par.t, par.hbar);
  const auto est = psi_m_mc(cos_field(), p0, par, 0, kProbes, opts);
  for (std::size_t q = 0; q < kProbes.size(); ++q) {
    const cplx want = free_pkt.eval(kProbes[q]);
    CHECK(std::abs(est[q].mean.real() - want.real()) < 5.0 * est[q].stderr_re);
    CHECK(std::abs(est[q].mean.imag() - want.imag()) < 5.0 * est[q].stderr_im);
  }
}

TEST_CASE("per-order sample averages match the closed-form coefficients") {
  const PhysicalParams par{1.0, 1.0, 1.0};
  const FourierPotential pot = cos_field();
  const WavePacket p0 = probe_packet();
  MCOptions opts;
  opts.n_samples = 40000;
  opts.n_steps = 256;
  opts.seed = 12345;
  opts.threads = 4;
  for (int m : {1, 2}) {
    const WavePacket ref = phi_m(pot, p0, par, m);
    const auto est = psi_m_mc(pot, p0, par, m, kProbes, opts);
    for (std::size_t q = 0; q < kProbes.size(); ++q) {
      const cplx want = ref.eval(kProbes[q]);
      INFO("m=" << m << " probe " << q << " mean=" << est[q].mean
                << " want=" << want);
      // 5 sigma plus a small allowance for the O(dt) time-discretization bias
      CHECK(std::abs(est[q].mean.real() - want.real()) <
            5.0 * est[q].stderr_re + 2e-3);
      CHECK(std::abs(est[q].mean.imag() - want.imag()) <
            5.0 * est[q].stderr_im + 2e-3);
    }
  }
}

TEST_CASE("series runner is consistent with its own orders") {
  const PhysicalParams par{1.0, 1.0, 0.2};
  MCOptions opts;
  opts.n_samples = 2000;
  opts.n_steps = 32;
  opts.seed = 99;
  opts.threads = 2;
  const SeriesMC s =
      psi_series_mc(cos_field(), probe_packet(), par, 3, kProbes, opts);
  REQUIRE(s.orders.size() == 4);
  for (std::size_t q = 0; q < kProbes.size(); ++q) {
    cplx sum = 0.0;
    for (int m = 0; m <= 3; ++m)
      sum += std::pow(par.lambda, m) * s.orders[m][q].mean;
    CHECK(std::abs(sum - s.partial[q].mean) < 1e-12);
  }
}

TEST_CASE("scalar potential shifts the first-order coefficient") {
  const PhysicalParams par{1.0, 1.0, 1.0};
  const FourierPotential pot = cos_field();
  const WavePacket p0 = probe_packet();
  PointMeasure v;
  v.add({0.0, 0.0, 0.0}, 0.3);
  MCOptions opts;
  opts.n_samples = 30000;
  opts.n_steps = 128;
  opts.seed = 21;
  opts.threads = 4;
  const WavePacket ref = phi_m(pot, p0, par, 1, &v);
  const auto est = psi_m_mc(pot, p0, par, 1, kProbes, opts, &v);
  for (std::size_t q = 0; q < kProbes.size(); ++q) {
    const cplx want = ref.eval(kProbes[q]);
    CHECK(std::abs(est[q].mean.real() - want.real()) <
          5.0 * est[q].stderr_re + 2e-3);
    CHECK(std::abs(est[q].mean.imag() - want.imag()) <
          5.0 * est[q].stderr_im + 2e-3);
  }
}

TEST_CASE("exponential functional: domain guard and free limit") {
  const LinearPotential pot = symmetric_gauge({0.0, 0.0, 2.0});  // t* = pi/4
  const WavePacket p0 = probe_packet();
  MCOptions opts;
  opts.n_samples = 20000;
  opts.n_steps = 64;
  opts.seed = 4;
  opts.threads = 4;

  PhysicalParams late{1.0, pi / 4.0 + 0.01, 1.0};
  CHECK_THROWS_AS(psi_exp_mc(pot, p0, late, kProbes, opts), precondition_error);

  PhysicalParams free_par{1.0, 0.5, 0.0};  // lambda = 0: free evolution
  const auto est = psi_exp_mc(pot, p0, free_par, kProbes, opts);
  const WavePacket free_pkt = apply_free(p0, free_par.t, free_par.hbar);
  for (std::size_t q = 0; q < kProbes.size(); ++q) {
    const cplx want = free_pkt.eval(kProbes[q]);
    CHECK(std::abs(est[q].mean.real() - want.real()) < 5.0 * est[q].stderr_re);
    CHECK(std::abs(est[q].mean.imag() - want.imag()) < 5.0 * est[q].stderr_im);
  }
}

TEST_CASE("exponential functional is rule-independent for antisymmetric fields") {
  const LinearPotential pot = remark_field();
  const WavePacket p0 = probe_packet();
  const PhysicalParams par{1.0, 0.5, 1.0};
  MCOptions opts;
  opts.n_samples = 500;
  opts.n_steps = 128;
  opts.seed = 17;
  opts.threads = 1;
  opts.rule = QuadratureRule::left;
  const auto l = psi_exp_mc(pot, p0, par, kProbes, opts);
  opts.rule = QuadratureRule::midpoint;
  const auto m = psi_exp_mc(pot, p0, par, kProbes, opts);
  opts.rule = QuadratureRule::right;
  const auto r = psi_exp_mc(pot, p0, par, kProbes, opts);
  for (std::size_t q = 0; q < kProbes.size(); ++q) {
    CHECK(std::abs(l[q].mean - m[q].mean) < 1e-13);
    CHECK(std::abs(m[q].mean - r[q].mean) < 1e-13);
  }
}

TEST_CASE("diffusive scaling: moments and exponential agree with the series") {
  const FourierPotential pot = cos_field();
  const WavePacket p0 = probe_packet();
  const double hbar = 1.0, t = 0.4;
  const cplx z(t / hbar, 0.0);
  MCOptions opts;
  opts.n_samples = 30000;
  opts.n_steps = 128;
  opts.seed = 3030;
  opts.threads = 4;

  const PhysicalParams par{hbar, t, 1.0};
  for (int m : {0, 1, 2}) {
    const WavePacket ref = phi_m_complex_time(pot, p0, hbar, z, m);
    const auto est = heat_moment_mc(pot, p0, par, m, kProbes, opts);
    for (std::size_t q = 0; q < kProbes.size(); ++q) {
      const cplx want = ref.eval(kProbes[q]);
      INFO("m=" << m << " probe " << q);
      CHECK(std::abs(est[q].mean.real() - want.real()) <
            5.0 * est[q].stderr_re + 1e-3);
      CHECK(std::abs(est[q].mean.imag() - want.imag()) <
            5.0 * est[q].stderr_im + 1e-3);
    }
  }

  // full exponential at weak coupling vs the truncated series
  const PhysicalParams weak{hbar, t, 0.2};
  const auto full = heat_exp_mc(pot, p0, weak, kProbes, opts);
  for (std::size_t q = 0; q < kProbes.size(); ++q) {
    cplx partial = 0.0;
    for (int m = 0; m <= 3; ++m)
      partial += std::pow(weak.lambda, m) *
                 phi_m_complex_time(pot, p0, hbar, z, m).eval(kProbes[q]);
    CHECK(std::abs(full[q].mean - partial) <
          5.0 * (full[q].stderr_re + full[q].stderr_im) + 2e-3);
  }
}

TEST_CASE("real-time flag of the diffusive runner delegates to fresnel scaling") {
  const PhysicalParams par{1.0, 1.0, 1.0};
  MCOptions opts;
  opts.n_samples = 500;
  opts.n_steps = 32;
  opts.seed = 8;
  opts.threads = 1;
  const auto a = heat_moment_mc(cos_field(), probe_packet(), par, 1, kProbes,
                                opts, /*real_time=*/true);
  const auto b = psi_m_mc(cos_field(), probe_packet(), par, 1, kProbes, opts);
  for (std::size_t q = 0; q < kProbes.size(); ++q)
    CHECK(a[q].mean == b[q].mean);
}
