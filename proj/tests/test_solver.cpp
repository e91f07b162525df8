#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

#include "magpi/dyson.hpp"
#include "magpi/feynman_mc.hpp"
#include "magpi/fourier_measure.hpp"
#include "magpi/split_step.hpp"

using namespace magpi;

namespace {

// frequencies are multiples of 1/2, so the packet is periodic on any box
// with half-width a multiple of 2 pi
WavePacket two_atom_packet() {
  WavePacket p;
  p.atoms.push_back({Vec3{0.5, -0.5, 0.0}, cplx{0.8, 0.0}});
  p.atoms.push_back({Vec3{-1.0, 1.5, 0.0}, cplx{0.3, 0.2}});
  return p;
}

double state_max_diff(const GridState& a, const GridState& b) {
  double m = 0.0;
  for (std::size_t q = 0; q < a.v.size(); ++q)
    m = std::max(m, std::abs(a.v[q] - b.v[q]));
  return m;
}

}  // namespace

TEST_CASE("free evolution reproduces the exact kinetic phase") {
  GridState s = make_state(64, 2.0 * pi);  // dk = 0.5
  const WavePacket p = two_atom_packet();
  init_packet(s, p);

  const double t = 1.0, hbar = 1.0;
  const GridState out = evolve(s, FourierPotential{}, 0.0, t, 128, hbar);

  // the packet under free flow: each atom picks up e^{-i hbar |y|^2 t / 2};
  // probe exact grid points so interpolation contributes nothing
  const WavePacket fr = apply_free(p, t, hbar);
  for (const auto& [i, j] : {std::pair{32, 32}, {37, 25}, {3, 60}}) {
    const Vec3 x{s.x_at(i), s.x_at(j), 0.0};
    REQUIRE(std::abs(value_at(out, x) - fr.eval(x)) < 1e-10);
  }
}

TEST_CASE("real-time evolution is unitary on the grid") {
  GridState s = make_state(64, 2.0 * pi);
  init_packet(s, two_atom_packet());
  const double n0 = grid_l2_norm(s);
  const GridState out = evolve(s, cos_field(), 0.4, 1.0, 256, 1.0);
  REQUIRE(std::abs(grid_l2_norm(out) - n0) < 1e-10 * n0);
}

TEST_CASE("self-convergence is second order in the step size") {
  GridState s = make_state(64, 2.0 * pi);
  init_packet(s, two_atom_packet());
  const auto pot = cos_field();
  const GridState a = evolve(s, pot, 0.3, 1.0, 128, 1.0);
  const GridState b = evolve(s, pot, 0.3, 1.0, 256, 1.0);
  const GridState c = evolve(s, pot, 0.3, 1.0, 512, 1.0);
  const double d_ab = state_max_diff(a, b);
  const double d_bc = state_max_diff(b, c);
  REQUIRE(d_ab / d_bc >= 3.0);  // expect ~4 for a second-order scheme
}

TEST_CASE("grid propagator agrees with the perturbative series") {
  // cos field at lambda = 0.3 lambda*: the true tail beyond order 4 is tiny,
  // so the comparison budget covers splitting error only
  const auto pot = cos_field();
  const WavePacket psi0 = two_atom_packet();
  PhysicalParams par;
  const double alpha = sup_norm_bound(pot).certified;
  const double r = std::max(psi0.support_radius(), pot.support_radius());
  par.lambda = 0.3 * lambda_star(alpha, r, par.t, par.hbar);
  const auto sum = dyson_partial_sum(pot, psi0, par, 4);
  REQUIRE(sum.tail_convergent);

  GridState s = make_state(128, 4.0 * pi);  // dk = 0.25, atoms on-grid
  init_packet(s, psi0);
  const GridState out = evolve(s, pot, par.lambda, par.t, 512, par.hbar);

  int checked = 0;
  for (int mi : {-25, 0, 13, 37})
    for (int mj : {-30, -10, 5, 25}) {
      const Vec3 x{s.x_at(64 + mi), s.x_at(64 + mj), 0.0};  // on-grid probes
      REQUIRE(std::abs(value_at(out, x) - sum.partial.eval(x)) < 5e-3);
      ++checked;
    }
  REQUIRE(checked == 16);
}

TEST_CASE("imaginary time: heat spreading of a Gaussian") {
  GridState s = make_state(64, 6.0);
  init_gaussian(s, Vec3{}, 0.8);
  const double t = 0.5, hbar = 1.0;
  const GridState out = evolve(s, FourierPotential{}, 0.0, t, 64, hbar, true);
  // diffusion at D = hbar/2 adds hbar * t to the second moment per axis
  const double want = 0.8 * 0.8 + hbar * t;
  for (int axis : {0, 1}) {
    const cplx m2 = second_moment(out, axis);
    REQUIRE(std::abs(m2.real() - want) < 1e-3 * want);
    REQUIRE(std::abs(m2.imag()) < 1e-12);
  }
  // heat flow is a contraction, not norm-preserving
  GridState ref = s;
  REQUIRE(grid_l2_norm(out) < grid_l2_norm(ref));
}

TEST_CASE("gauge round trip with a linear gauge function") {
  // chi = q . x shifts the potential by a constant; evolving the gauged
  // pair and stripping the phase reproduces the direct evolution
  const double b = 1.0, lam = 1.0, hbar = 1.0, t = 0.5;
  const AffineLinearPotential pot{symmetric_gauge({0.0, 0.0, b}), Vec3{}};

  GridState s = make_state(128, 4.0 * pi);
  GaussianPacket gp{two_atom_packet(), 2.5};
  init_gaussian_packet(s, gp);

  GaugeChi chi;
  chi.lin = Vec3{0.5, 0.25, 0.0};  // lambda q / hbar on the grid wavenumbers

  const GridState direct = evolve(s, pot, lam, t, 512, hbar);
  auto [gs, gpot] = gauge_transform(s, pot, chi, lam, hbar);
  GridState evolved = evolve(gs, gpot, lam, t, 512, hbar);
  // strip the gauge phase
  GaugeChi minus;
  minus.lin = -1.0 * chi.lin;
  auto [stripped, back] = gauge_transform(evolved, gpot, minus, lam, hbar);

  REQUIRE(state_max_diff(stripped, direct) < 1e-6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      REQUIRE(back.lin.m[i][j] == Catch::Approx(pot.lin.m[i][j]).margin(1e-14));
  REQUIRE(std::abs(back.offset[0]) + std::abs(back.offset[1]) < 1e-14);
}

TEST_CASE("symmetric and Landau gauges agree on amplitudes") {
  const double b = 1.0, lam = 1.0, hbar = 1.0, t = 0.5;
  GridState s = make_state(128, 4.0 * pi);
  GaussianPacket gp{two_atom_packet(), 2.5};
  init_gaussian_packet(s, gp);

  const auto sym = symmetric_gauge({0.0, 0.0, b});
  const GridState out_sym = evolve(s, sym, lam, t, 512, hbar);

  // gauge the initial state to Landau and evolve there
  const GaugeChi chi = symmetric_to_landau_chi(b);
  auto [gs, gpot] = gauge_transform(s, AffineLinearPotential{sym, Vec3{}}, chi,
                                    lam, hbar);
  REQUIRE(gpot.lin.m[0][1] == Catch::Approx(-b).margin(1e-14));
  REQUIRE(gpot.lin.m[1][0] == Catch::Approx(0.0).margin(1e-14));
  const GridState out_lan = evolve(gs, gpot, lam, t, 512, hbar);

  double worst = 0.0;
  for (std::size_t q = 0; q < out_sym.v.size(); ++q)
    worst = std::max(worst,
                     std::abs(std::abs(out_sym.v[q]) - std::abs(out_lan.v[q])));
  REQUIRE(worst < 1e-5);
}

TEST_CASE("solver matches the closed exponential functional") {
  // the corollary-scale check: B = (0,0,1), t = 0.5 < t* = pi/2
  const double b = 1.0, lam = 1.0, hbar = 1.0, t = 0.5;
  const auto pot = symmetric_gauge({0.0, 0.0, b});
  // t_star estimates the top eigenvalue iteratively; 1e-8 is its resolution
  REQUIRE(t_star(pot) == Catch::Approx(0.5 * pi).epsilon(1e-8));

  GaussianPacket gp{two_atom_packet(), 2.5};
  GridState s = make_state(128, 4.0 * pi);
  init_gaussian_packet(s, gp);
  REQUIRE(boundary_mass(s, 1.0) < 1e-8);
  const GridState out = evolve(s, pot, lam, t, 512, hbar);

  PhysicalParams par;
  par.t = t;
  par.lambda = lam;
  std::vector<Vec3> probes;
  for (int mi : {-8, 2, 10, 18})
    probes.push_back(Vec3{s.x_at(64 + mi), s.x_at(64 + mi + 4), 0.0});
  MCOptions opts;
  opts.n_samples = 40000;
  opts.n_steps = 256;
  opts.seed = 11;
  opts.threads = 4;
  opts.rule = QuadratureRule::midpoint;
  const auto est = psi_exp_mc(pot, gp, par, probes, opts);
  for (std::size_t q = 0; q < probes.size(); ++q) {
    const cplx grid = value_at(out, probes[q]);
    const double tol = 3.0 * (est[q].stderr_re + est[q].stderr_im) + 5e-3;
    REQUIRE(std::abs(est[q].mean - grid) < tol);
  }
}

TEST_CASE("preconditions: grid, atoms, axis coupling, stability") {
  REQUIRE_THROWS_AS(make_state(48, 1.0), precondition_error);
  REQUIRE_THROWS_AS(make_state(64, -1.0), precondition_error);

  GridState s = make_state(64, 2.0 * pi);
  WavePacket off;
  off.atoms.push_back({Vec3{0.3, 0.0, 0.0}, cplx{1.0, 0.0}});  // 0.3 not on dk grid
  REQUIRE_THROWS_AS(init_packet(s, off), precondition_error);
  WavePacket out_of_plane;
  out_of_plane.atoms.push_back({Vec3{0.5, 0.0, 0.5}, cplx{1.0, 0.0}});
  REQUIRE_THROWS_AS(init_packet(s, out_of_plane), precondition_error);

  init_packet(s, two_atom_packet());

  // a_1 depending on x_1 breaks the per-axis translation scheme
  REQUIRE_THROWS_AS(evolve(s, delta_field({1.0, 0.0, 0.0}, 1.0, 0), 0.1, 1.0,
                           128, 1.0),
                    precondition_error);
  // the B = (1,1,1) symmetric gauge couples the plane to x3
  REQUIRE_THROWS_AS(evolve(s, remark_field(), 0.1, 1.0, 128, 1.0),
                    precondition_error);
  // step size beyond the kinetic phase bound
  REQUIRE_THROWS_AS(evolve(s, cos_field(), 0.1, 1.0, 8, 1.0),
                    precondition_error);
  // imaginary-time growth guard
  REQUIRE_THROWS_AS(evolve(s, cos_field(), 40.0, 1.0, 4096, 1.0, true),
                    precondition_error);
}

TEST_CASE("state files round-trip exactly") {
  GridState s = make_state(32, 3.0);
  init_gaussian(s, Vec3{0.5, -0.25, 0.0}, 0.7);
  const char* path = "solver_state_roundtrip.bin";
  save_state(s, path);
  const GridState r = load_state(path);
  std::remove(path);
  REQUIRE(r.n == s.n);
  REQUIRE(r.box == s.box);
  REQUIRE(state_max_diff(r, s) == 0.0);
  REQUIRE_THROWS_AS(load_state("no_such_state_file.bin"), config_error);
}
