#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "magpi/config.hpp"
#include "magpi/dyson.hpp"
#include "magpi/feynman_mc.hpp"
#include "magpi/fourier_measure.hpp"
#include "magpi/renorm.hpp"
#include "magpi/split_step.hpp"
#include "magpi/stoch_integral.hpp"

namespace magpi {

// Named batch experiments.  Each runner reads its parameters from a Config,
// computes one study, and writes two files into the output directory:
//   <name>.csv   full table, first row = column names
//   <name>.dat   gnuplot-ready numeric columns ('#'-prefixed header)
// Every CSV row starts with (config_hash, seed), no timestamps are written,
// and all Monte Carlo loops reduce thread-independently, so re-running the
// same config yields byte-identical files.

struct ExperimentOutput {
  std::vector<std::string> files;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "ito-vs-strat",  "dyson-converge", "feynman-map",
      "renorm-basis",  "solver-compare", "heat-analytic"};
  return names;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

// Streams one table to .csv and mirrors numeric columns to .dat.
class TableWriter {
 public:
  TableWriter(const std::string& out_dir, const std::string& name,
              ExperimentOutput& out) {
    std::filesystem::create_directories(out_dir);
    csv_path_ = out_dir + "/" + name + ".csv";
    dat_path_ = out_dir + "/" + name + ".dat";
    csv_.open(csv_path_);
    dat_.open(dat_path_);
    if (!csv_ || !dat_)
      throw config_error("cannot open output files in " + out_dir);
    out.files.push_back(csv_path_);
    out.files.push_back(dat_path_);
  }

  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      csv_ << (i ? "," : "") << cols[i];
    csv_ << '\n';
    dat_ << '#';
    for (const auto& c : cols) dat_ << ' ' << c;
    dat_ << '\n';
  }

  // cells are preformatted strings; numeric cells should come from fmt()
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      csv_ << (i ? "," : "") << cells[i];
    csv_ << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i)
      dat_ << (i ? " " : "") << cells[i];
    dat_ << '\n';
  }

  // blank line in the .dat file: gnuplot treats it as a dataset break
  void block_break() { dat_ << '\n'; }

 private:
  std::string csv_path_, dat_path_;
  std::ofstream csv_, dat_;
};

// ---- config -> domain objects --------------------------------------------

inline FourierPotential fourier_field_from(const Config& cfg) {
  const std::string kind = cfg.get_string("field.kind", "cos");
  if (kind == "cos") return cos_field();
  if (kind == "delta1")
    // unit point mass at frequency e_1 on the first component
    return delta_field(Vec3{1.0, 0.0, 0.0}, cplx{1.0, 0.0}, 0);
  if (kind == "delta") {
    const Vec3 k = cfg.get_vec3("field.k");
    const cplx w{cfg.get_double("field.w_re", 1.0),
                 cfg.get_double("field.w_im", 0.0)};
    const int comp = static_cast<int>(cfg.get_int("field.component", 0));
    if (comp < 0 || comp > 2)
      throw config_error("field.component must be 0, 1 or 2");
    return delta_field(k, w, comp);
  }
  throw config_error("unknown field.kind '" + kind +
                     "' (expected cos, delta1 or delta)");
}

inline LinearPotential linear_field_from(const Config& cfg) {
  return symmetric_gauge(cfg.has("field.b") ? cfg.get_vec3("field.b")
                                            : Vec3{0.0, 0.0, 1.0});
}

// "y1 y2 y3 w_re w_im; ..." -> packet atoms
inline WavePacket packet_from(const Config& cfg) {
  WavePacket p;
  if (!cfg.has("packet.atoms")) {
    p.atoms.push_back({Vec3{0.5, -0.5, 0.0}, cplx{0.8, 0.0}});
    p.atoms.push_back({Vec3{-1.0, 1.5, 0.0}, cplx{0.3, 0.2}});
    return p;
  }
  std::stringstream ss(cfg.raw("packet.atoms"));
  std::string group;
  while (std::getline(ss, group, ';')) {
    std::stringstream gs(group);
    std::vector<double> v;
    double d;
    while (gs >> d) v.push_back(d);
    if (v.empty()) continue;
    if (v.size() != 5)
      throw config_error(
          "packet.atoms: each ';' group needs 5 numbers (y1 y2 y3 w_re w_im)");
    p.atoms.push_back({Vec3{v[0], v[1], v[2]}, cplx{v[3], v[4]}});
  }
  if (p.atoms.empty()) throw config_error("packet.atoms is empty");
  return p;
}

inline std::vector<Vec3> probes_from(const Config& cfg) {
  if (cfg.has("probes.points")) {
    auto pts = cfg.get_vec3_list("probes.points");
    if (pts.empty()) throw config_error("probes.points is empty");
    return pts;
  }
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) {
    const double u = -1.4 + 0.4 * i;
    pts.push_back(Vec3{u, 0.3 - 0.25 * i, 0.0});
  }
  return pts;
}

inline MCOptions mc_options_from(const Config& cfg) {
  MCOptions o;
  o.n_samples = cfg.get_uint("budget.samples", 100000);
  o.n_steps = static_cast<int>(cfg.get_int("budget.steps", 512));
  o.seed = cfg.get_uint("run.seed", 1);
  o.threads = static_cast<int>(cfg.get_int("budget.threads", 1));
  if (o.n_samples == 0 || o.n_steps <= 0 || o.threads <= 0)
    throw config_error("budgets must be positive");
  const std::string rule = cfg.get_string("mc.rule", "midpoint");
  if (rule == "left")
    o.rule = QuadratureRule::left;
  else if (rule == "right")
    o.rule = QuadratureRule::right;
  else if (rule == "midpoint")
    o.rule = QuadratureRule::midpoint;
  else
    throw config_error("unknown mc.rule '" + rule + "'");
  return o;
}

struct RowPrefix {
  std::string hash, seed;
};

inline RowPrefix prefix_from(const Config& cfg) {
  return {hash_hex(config_hash(cfg)),
          std::to_string(cfg.get_uint("run.seed", 1))};
}

inline double combined_stderr(const MCEstimate& e) {
  return std::sqrt(e.stderr_re * e.stderr_re + e.stderr_im * e.stderr_im);
}

// ---- individual experiments ----------------------------------------------

// Left- vs right-endpoint cylinder expectations of the stochastic line
// integral: the left rule vanishes identically while the right rule
// converges at first order to a nonzero limit.
inline void run_ito_vs_strat(const Config& cfg, TableWriter& w) {
  Config d = cfg;
  if (!d.has("field.kind")) d.set("field.kind", "delta1");
  const FourierPotential pot = fourier_field_from(d);
  const double t = cfg.get_double("params.t", 1.0);
  const double hbar = cfg.get_double("params.hbar", 1.0);
  std::vector<int> ns = cfg.has("series.ns")
                            ? cfg.get_int_list("series.ns")
                            : std::vector<int>{32, 64, 128, 256, 512, 1024};
  const cplx limit = cylinder_right_limit(pot, t, hbar);

  w.header({"config", "seed", "n", "left_re", "left_im", "right_re",
            "right_im", "limit_re", "limit_im", "gap_abs", "gap_ratio"});
  const RowPrefix p = prefix_from(cfg);
  double prev_gap = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const int n = ns[i];
    const cplx left = cylinder_left_expectation(pot, t, n, hbar);
    const cplx right = cylinder_right_expectation(pot, t, n, hbar);
    const double gap = std::abs(right - limit);
    const double ratio = (i > 0 && prev_gap > 0.0) ? gap / prev_gap : 0.0;
    w.row({p.hash, p.seed, std::to_string(n), fmt(left.real()),
           fmt(left.imag()), fmt(right.real()), fmt(right.imag()),
           fmt(limit.real()), fmt(limit.imag()), fmt(gap), fmt(ratio)});
    prev_gap = gap;
  }
}

// Per-order norms of the perturbative series against the certified
// convergence radius.  The final row (m = -1) summarizes the partial sum.
inline void run_dyson_converge(const Config& cfg, TableWriter& w) {
  const FourierPotential pot = fourier_field_from(cfg);
  const WavePacket psi0 = packet_from(cfg);
  PhysicalParams par;
  par.t = cfg.get_double("params.t", 1.0);
  par.hbar = cfg.get_double("params.hbar", 1.0);

  const double alpha =
      cfg.get_double("field.alpha", sup_norm_bound(pot).certified);
  const double r = cfg.get_double(
      "field.r", std::max(psi0.support_radius(), pot.support_radius()));
  const double lstar = lambda_star(alpha, r, par.t, par.hbar);
  par.lambda = cfg.has("params.lambda")
                   ? cfg.get_double("params.lambda")
                   : cfg.get_double("params.lambda_factor", 0.5) * lstar;
  const int M = static_cast<int>(cfg.get_int("series.orders", 7));
  if (M < 0) throw config_error("series.orders must be >= 0");

  const DysonSum sum = dyson_partial_sum(pot, psi0, par, M);

  w.header({"config", "seed", "m", "term_tv", "term_l2", "ratio_l2", "lambda",
            "lambda_star", "tail_bound", "convergent"});
  const RowPrefix p = prefix_from(cfg);
  double prev_l2 = 0.0;
  for (int m = 0; m <= M; ++m) {
    const double lm = std::pow(std::abs(par.lambda), m);
    const double l2 = lm * sum.terms[m].l2_norm();
    const double ratio = (m > 0 && prev_l2 > 0.0) ? l2 / prev_l2 : 0.0;
    w.row({p.hash, p.seed, std::to_string(m), fmt(sum.term_norms[m]), fmt(l2),
           fmt(ratio), fmt(par.lambda), fmt(lstar), fmt(sum.tail_bound),
           sum.tail_convergent ? "1" : "0"});
    prev_l2 = l2;
  }
  w.block_break();
  w.row({p.hash, p.seed, "-1", fmt(sum.partial.norm()),
         fmt(sum.partial.l2_norm()), "0", fmt(par.lambda), fmt(lstar),
         fmt(sum.tail_bound), sum.tail_convergent ? "1" : "0"});
}

// Monte Carlo per-order coefficients against the deterministic chain
// engine, probe by probe.
inline void run_feynman_map(const Config& cfg, TableWriter& w) {
  const FourierPotential pot = fourier_field_from(cfg);
  const WavePacket psi0 = packet_from(cfg);
  PhysicalParams par;
  par.t = cfg.get_double("params.t", 1.0);
  par.hbar = cfg.get_double("params.hbar", 1.0);
  par.lambda = cfg.get_double("params.lambda", 1.0);
  const int M = static_cast<int>(cfg.get_int("series.orders", 2));
  const std::vector<Vec3> probes = probes_from(cfg);
  const MCOptions opts = mc_options_from(cfg);

  w.header({"config", "seed", "m", "x1", "x2", "x3", "mc_re", "mc_im", "se_re",
            "se_im", "exact_re", "exact_im", "sigmas"});
  const RowPrefix p = prefix_from(cfg);
  for (int m = 0; m <= M; ++m) {
    const auto mc = psi_m_mc(pot, psi0, par, m, probes, opts);
    const WavePacket exact = phi_m(pot, psi0, par, m);
    for (std::size_t q = 0; q < probes.size(); ++q) {
      const cplx ex = exact.eval(probes[q]);
      const double se = combined_stderr(mc[q]);
      const double sig = se > 0.0 ? std::abs(mc[q].mean - ex) / se : 0.0;
      w.row({p.hash, p.seed, std::to_string(m), fmt(probes[q][0]),
             fmt(probes[q][1]), fmt(probes[q][2]), fmt(mc[q].mean.real()),
             fmt(mc[q].mean.imag()), fmt(mc[q].stderr_re),
             fmt(mc[q].stderr_im), fmt(ex.real()), fmt(ex.imag()), fmt(sig)});
    }
    if (m < M) w.block_break();
  }
}

// Basis-projected quadratic sums: renormalized tent/trig families against
// the common reference, and the divergent unrenormalized subfamily.
inline void run_renorm_basis(const Config& cfg, TableWriter& w) {
  const LinearPotential pot =
      cfg.has("field.b") ? symmetric_gauge(cfg.get_vec3("field.b"))
                         : remark_field();
  HnOptions opt;
  if (cfg.has("renorm.tent_ns")) opt.tent_ns = cfg.get_int_list("renorm.tent_ns");
  if (cfg.has("renorm.trig_shells"))
    opt.trig_shells = cfg.get_int_list("renorm.trig_shells");
  if (cfg.has("renorm.sub_freqs"))
    opt.sub_freqs = cfg.get_int_list("renorm.sub_freqs");
  if (cfg.has("renorm.sub_members"))
    opt.sub_members = cfg.get_int_list("renorm.sub_members");
  opt.n_fine = static_cast<int>(cfg.get_int("renorm.n_fine", opt.n_fine));
  opt.gram_grid = static_cast<int>(cfg.get_int("renorm.gram_grid", opt.gram_grid));
  opt.n_samples = static_cast<int>(cfg.get_int("budget.samples", opt.n_samples));
  opt.seed = cfg.get_uint("run.seed", 1);
  opt.threads = static_cast<int>(cfg.get_int("budget.threads", 1));

  const HnReport rep = hn_convergence_experiment(pot, opt);

  w.header({"config", "seed", "family", "n", "rn", "h_mean", "h_stderr",
            "gap_sq_mean", "gap_sq_stderr"});
  const RowPrefix p = prefix_from(cfg);
  auto rows = [&](const char* family, const std::vector<HnRow>& v) {
    for (const HnRow& r : v)
      w.row({p.hash, p.seed, family, std::to_string(r.n), fmt(r.rn),
             fmt(r.h_mean), fmt(r.h_stderr), fmt(r.gap_sq_mean),
             fmt(r.gap_sq_stderr)});
    w.block_break();
  };
  rows("tent", rep.tent);
  rows("trig", rep.trig);
  rows("subfamily", rep.sub);
  // reference and finest-row difference, packed into the same schema:
  // for "href" the gap column holds the variance, for "diff" the mean square
  w.row({p.hash, p.seed, "href", "0", "0", fmt(rep.href_mean),
         fmt(rep.href_stderr), fmt(rep.href_var), "0"});
  w.row({p.hash, p.seed, "diff", "0", "0", fmt(rep.diff_mean),
         fmt(rep.diff_stderr), fmt(rep.diff_sq_mean), "0"});
}

// Path-space exponential functional vs the grid propagator for a constant
// magnetic field, at shared probe points.
inline void run_solver_compare(const Config& cfg, TableWriter& w) {
  const LinearPotential pot = linear_field_from(cfg);
  PhysicalParams par;
  par.t = cfg.get_double("params.t", 0.5);
  par.hbar = cfg.get_double("params.hbar", 1.0);
  par.lambda = cfg.get_double("params.lambda", 1.0);

  const int gn = static_cast<int>(cfg.get_int("grid.n", 128));
  const double box = cfg.get_double("grid.box", 4.0 * pi);
  const int gsteps = static_cast<int>(cfg.get_int("grid.steps", 512));
  const double sigma = cfg.get_double("packet.sigma", 2.5);

  const GaussianPacket gp{packet_from(cfg), sigma};
  GridState s = make_state(gn, box);
  init_gaussian_packet(s, gp);
  const GridState out = evolve(s, pot, par.lambda, par.t, gsteps, par.hbar);

  // default probes snap to grid nodes so interpolation is exact
  std::vector<Vec3> probes;
  if (cfg.has("probes.points")) {
    probes = probes_from(cfg);
  } else {
    for (int i = 0; i < 8; ++i) {
      const int mi = -8 + 3 * i;
      probes.push_back(
          Vec3{s.x_at(gn / 2 + mi), s.x_at(gn / 2 + mi + 4), 0.0});
    }
  }
  const MCOptions opts = mc_options_from(cfg);
  const double budget = cfg.get_double("grid.error_budget", 5e-3);
  const auto est = psi_exp_mc(pot, gp, par, probes, opts);

  w.header({"config", "seed", "x1", "x2", "grid_re", "grid_im", "mc_re",
            "mc_im", "se_re", "se_im", "dist", "tol", "within"});
  const RowPrefix p = prefix_from(cfg);
  for (std::size_t q = 0; q < probes.size(); ++q) {
    const cplx g = value_at(out, probes[q]);
    const double dist = std::abs(est[q].mean - g);
    const double tol =
        3.0 * (est[q].stderr_re + est[q].stderr_im) + budget;
    w.row({p.hash, p.seed, fmt(probes[q][0]), fmt(probes[q][1]),
           fmt(g.real()), fmt(g.imag()), fmt(est[q].mean.real()),
           fmt(est[q].mean.imag()), fmt(est[q].stderr_re),
           fmt(est[q].stderr_im), fmt(dist), fmt(tol),
           dist <= tol ? "1" : "0"});
  }
}

// Imaginary-time full exponential against real-z complex-time series
// coefficients: both sides of the analytic continuation, empirically.
inline void run_heat_analytic(const Config& cfg, TableWriter& w) {
  const FourierPotential pot = fourier_field_from(cfg);
  const WavePacket psi0 = packet_from(cfg);
  const double hbar = cfg.get_double("params.hbar", 1.0);
  const double z = cfg.get_double("params.z", 1.0);
  if (!(z > 0.0)) throw config_error("params.z must be positive");
  const int M = static_cast<int>(cfg.get_int("series.orders", 2));

  const double alpha =
      cfg.get_double("field.alpha", sup_norm_bound(pot).certified);
  const double r = cfg.get_double(
      "field.r", std::max(psi0.support_radius(), pot.support_radius()));
  const double lstar_z = lambda_star_z(alpha, r, cplx(z, 0.0), hbar);
  PhysicalParams par;
  par.hbar = hbar;
  par.t = z * hbar;  // e^{-tH/hbar} with z = t/hbar
  par.lambda = cfg.has("params.lambda")
                   ? cfg.get_double("params.lambda")
                   : cfg.get_double("params.lambda_factor", 0.3) * lstar_z;

  const std::vector<Vec3> probes = probes_from(cfg);
  const MCOptions opts = mc_options_from(cfg);
  const auto mc = heat_exp_mc(pot, psi0, par, probes, opts);

  std::vector<cplx> series(probes.size(), cplx{});
  for (int m = 0; m <= M; ++m) {
    const WavePacket pm = phi_m_complex_time(pot, psi0, hbar, cplx(z, 0.0), m);
    const cplx lm = std::pow(cplx(par.lambda), m);
    for (std::size_t q = 0; q < probes.size(); ++q)
      series[q] += lm * pm.eval(probes[q]);
  }

  w.header({"config", "seed", "x1", "x2", "x3", "mc_re", "mc_im", "se_re",
            "se_im", "series_re", "series_im", "lambda", "lambda_star_z",
            "sigmas"});
  const RowPrefix p = prefix_from(cfg);
  for (std::size_t q = 0; q < probes.size(); ++q) {
    const double se = combined_stderr(mc[q]);
    const double sig =
        se > 0.0 ? std::abs(mc[q].mean - series[q]) / se : 0.0;
    w.row({p.hash, p.seed, fmt(probes[q][0]), fmt(probes[q][1]),
           fmt(probes[q][2]), fmt(mc[q].mean.real()), fmt(mc[q].mean.imag()),
           fmt(mc[q].stderr_re), fmt(mc[q].stderr_im), fmt(series[q].real()),
           fmt(series[q].imag()), fmt(par.lambda), fmt(lstar_z), fmt(sig)});
  }
}

}  // namespace detail

// Runs the experiment named in run.experiment; writes <name>.csv/.dat into
// run.out (default "."), returns the file list.  config_error for unknown
// names or malformed parameters; numeric preconditions (e.g. t >= t*)
// propagate as precondition_error.
inline ExperimentOutput run_experiment(const Config& cfg) {
  const std::string name = cfg.get_string("run.experiment");
  const std::string out_dir = cfg.get_string("run.out", ".");
  const auto& known = experiment_names();
  if (std::find(known.begin(), known.end(), name) == known.end())
    throw config_error("unknown experiment '" + name + "'");
  ExperimentOutput out;
  detail::TableWriter w(out_dir, name, out);
  if (name == "ito-vs-strat")
    detail::run_ito_vs_strat(cfg, w);
  else if (name == "dyson-converge")
    detail::run_dyson_converge(cfg, w);
  else if (name == "feynman-map")
    detail::run_feynman_map(cfg, w);
  else if (name == "renorm-basis")
    detail::run_renorm_basis(cfg, w);
  else if (name == "solver-compare")
    detail::run_solver_compare(cfg, w);
  else
    detail::run_heat_analytic(cfg, w);
  return out;
}

}  // namespace magpi
