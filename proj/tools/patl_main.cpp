// patl: per-mode photoacoustic forward solves, trace inversion, optical
// coefficient reconstruction, stability certificates, and sweep experiments
// for layered media.  Exit codes: 0 success, 2 configuration error,
// 3 numerical failure, 4 certificate violation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "patl/harness.hpp"
#include "patl/medium_io.hpp"
#include "patl/numerics.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCertificate = 4;

void write_table(const std::string& path, const std::string& header,
                 const std::vector<std::vector<double>>& columns, std::size_t rows,
                 const std::vector<int>* int_column = nullptr) {
  std::ofstream out(path);
  if (!out) throw patl::config_error("cannot open for writing: " + path);
  out << header << "\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ",";
      out << patl::format_double(columns[c][i]);
    }
    if (int_column) out << "," << (*int_column)[i];
    out << "\n";
  }
  if (!out) throw patl::config_error("write failed: " + path);
}

void emit_json(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw patl::config_error("cannot open for writing: " + out_path);
    out << text;
    if (!out) throw patl::config_error("write failed: " + out_path);
  }
}

patl::Calibration parse_calib(const std::string& spec) {
  patl::Calibration calib;
  bool have_dh = false, have_dph = false;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw patl::config_error("--calib entries must look like key=value, got \"" + item + "\"");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t pos = 0;
      value = std::stod(item.substr(eq + 1), &pos);
      if (pos != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw patl::config_error("--calib value for \"" + key + "\" is not a number");
    }
    if (key == "D_H") {
      calib.D_H = value;
      have_dh = true;
    } else if (key == "D_prime_H") {
      calib.D_prime_H = value;
      have_dph = true;
    } else if (key == "mu_a_H" || key == "mu_a_prime_H") {
      // accepted for interface compatibility; the reconstruction never needs them
    } else {
      throw patl::config_error("--calib: unknown key \"" + key + "\"");
    }
  }
  if (!have_dh || !have_dph)
    throw patl::config_error("--calib must provide both D_H and D_prime_H");
  return calib;
}

// Reads an initial-data profile and checks it against the medium grid.
patl::CoefficientProfile load_initial(const std::string& path, const patl::Grid1D& grid,
                                      const char* what) {
  patl::CoefficientProfile f = patl::read_profile_csv(path);
  if (!f.grid.matches(grid))
    throw patl::structural_error(std::string(what) + " grid in " + path +
                                 " does not match the medium grid");
  return f;
}

struct CertifyArgs {
  std::string medium_path;
  std::string mode;
  std::vector<long> ks;
  std::vector<std::string> f0_paths;
  std::vector<std::string> f1_paths;
  double T = 0.0;
  double beta = 1.0;
  double dt = 0.0;
  double m_tilde = 1.0;
  long n_cap = 256;
  std::size_t n_points = 0;
  std::string out_path;
};

int run_certify(const CertifyArgs& a) {
  const patl::LayeredMedium medium = patl::load_medium(a.medium_path, a.n_points);
  const patl::Grid1D& grid = medium.grid();
  if (a.ks.empty()) throw patl::config_error("certify: need at least one --k");
  if (a.f0_paths.size() != a.ks.size())
    throw patl::config_error("certify: need one --f0 per --k");
  if (!a.f1_paths.empty() && a.f1_paths.size() != a.ks.size())
    throw patl::config_error("certify: --f1 must be given once per mode or not at all");
  if (!(a.T > 0.0)) throw patl::config_error("certify: --T must be positive");

  std::vector<patl::ModalInitialData> inits;
  std::vector<patl::BoundaryTrace> traces;
  patl::SimulationOptions sim;
  sim.T = a.T;
  sim.beta = a.beta;
  sim.dt = a.dt;
  sim.record_energy = false;
  for (std::size_t i = 0; i < a.ks.size(); ++i) {
    patl::ModalInitialData init;
    init.k = a.ks[i];
    init.f0 = load_initial(a.f0_paths[i], grid, "--f0");
    if (!a.f1_paths.empty()) {
      init.f1 = load_initial(a.f1_paths[i], grid, "--f1");
    } else {
      init.f1 = patl::CoefficientProfile(grid, std::vector<double>(grid.n_points, 0.0));
    }
    traces.push_back(patl::simulate_modal_wave(medium, init, sim).trace);
    inits.push_back(std::move(init));
  }

  const patl::ObservabilityConstants oc = patl::observability_constants(medium, a.beta);
  json constants = {{"theta", oc.theta},   {"C_M", oc.c_M},   {"C_m1", oc.c_m1},
                    {"C_m2", oc.c_m2},     {"C_m3", oc.c_m3}, {"t_min", oc.t_min},
                    {"beta", a.beta},      {"T", a.T}};

  json rep;
  rep["mode"] = a.mode;
  rep["constants"] = constants;
  bool passed = true;

  if (a.mode == "observability") {
    json per_mode = json::array();
    double worst_margin = 0.0, worst_rhs = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < a.ks.size(); ++i) {
      const patl::ObservabilityCertificate c =
          patl::certify_observability(medium, inits[i], traces[i], a.beta);
      per_mode.push_back({{"k", c.k},
                          {"lambda", c.lambda},
                          {"lhs", {{"f0_term", c.lhs_f0}, {"grad_term", c.lhs_grad}}},
                          {"rhs", c.rhs},
                          {"margin", c.margin},
                          {"T_effective", c.t_effective},
                          {"passed", c.passed()}});
      passed = passed && c.passed();
      if (first || c.margin < worst_margin) {
        worst_margin = c.margin;
        worst_rhs = c.rhs;
        first = false;
      }
    }
    rep["per_mode"] = per_mode;
    rep["lhs"] = "max of the per-mode initial-data terms";
    rep["rhs"] = worst_rhs;
    rep["margin"] = worst_margin;
  } else if (a.mode == "finite-fourier") {
    const patl::AggregateCertificate c =
        patl::certify_finite_fourier(medium, inits, traces, a.beta);
    json per_mode = json::array();
    for (const auto& m : c.per_mode)
      per_mode.push_back({{"k", m.k},
                          {"lambda", m.lambda},
                          {"lhs", {{"f0_term", m.lhs_f0}, {"grad_term", m.lhs_grad}}},
                          {"rhs", m.rhs},
                          {"margin", m.margin},
                          {"passed", m.passed()}});
    rep["per_mode"] = per_mode;
    rep["lhs"] = {{"grad_term", c.lhs_grad}, {"velocity_term", c.lhs_vel}};
    rep["rhs"] = c.rhs;
    rep["margin"] = std::min(c.margin_grad, c.margin_vel);
    passed = c.passed();
  } else if (a.mode == "holder") {
    const patl::HolderBound b =
        patl::holder_one_side_bound(medium, traces, a.beta, a.m_tilde, a.n_cap);
    rep["lhs"] = {{"velocity_term", b.velocity_term}, {"trace_h12", b.trace_h12}};
    rep["rhs"] = b.bound_discrete;
    rep["margin"] = b.bound_discrete - b.bound_continuous;
    rep["tail"] = {{"m_tilde", b.m_tilde},
                   {"lambda_star", b.lambda_star},
                   {"continuous_min", b.continuous_min},
                   {"n_star", b.n_star},
                   {"discrete_min", b.discrete_min},
                   {"bound_continuous", b.bound_continuous},
                   {"bound_discrete", b.bound_discrete},
                   {"bound_closed_form", b.bound_closed_form},
                   {"degenerate", b.degenerate}};
    // self-consistency: the discrete tail minimum can never undercut the
    // continuous infimum
    passed = b.bound_discrete >= b.bound_continuous - 1e-8 * std::abs(b.bound_continuous);
  } else {
    throw patl::config_error("certify: unknown --mode \"" + a.mode + "\"");
  }

  rep["passed"] = passed;
  emit_json(rep, a.out_path);
  return passed ? kExitOk : kExitCertificate;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step photoacoustic inversion toolbox for layered media"};
  app.require_subcommand(1);

  // ---- optical-solve ----
  struct {
    std::string medium, out;
    long k = 1;
    std::size_t n_points = 0;
  } osv;
  auto* sub_osv = app.add_subcommand("optical-solve", "Solve the modal optical BVP");
  sub_osv->add_option("--medium", osv.medium, "medium definition JSON")->required();
  sub_osv->add_option("--k", osv.k, "Fourier mode index")->required();
  sub_osv->add_option("--out", osv.out, "output CSV (y,u,u_prime,envelope_lo,envelope_hi)")
      ->required();
  sub_osv->add_option("--n-points", osv.n_points, "resolution override");

  // ---- acoustic-simulate ----
  struct {
    std::string medium, f0, f1, out_trace, out_energy;
    long k = 1;
    double T = 0.0, beta = 1.0, dt = 0.0;
    std::size_t n_points = 0;
  } asim;
  auto* sub_asim = app.add_subcommand("acoustic-simulate", "Integrate the modal wave equation");
  sub_asim->add_option("--medium", asim.medium)->required();
  sub_asim->add_option("--k", asim.k)->required();
  sub_asim->add_option("--f0", asim.f0, "initial pressure CSV")->required();
  sub_asim->add_option("--f1", asim.f1, "initial velocity CSV (default zero)");
  sub_asim->add_option("--T", asim.T, "final time")->required();
  sub_asim->add_option("--beta", asim.beta, "boundary damping");
  sub_asim->add_option("--dt", asim.dt, "time step (0 = stability limit)");
  sub_asim->add_option("--out-trace", asim.out_trace, "trace CSV (t,p_H,pt_H)")->required();
  sub_asim->add_option("--out-energy", asim.out_energy,
                       "energy CSV (t,E,cumulative_dissipation)");
  sub_asim->add_option("--n-points", asim.n_points, "resolution override");

  // ---- acoustic-invert ----
  struct {
    std::string medium, trace, out;
    long k = 1;
    double T = 0.0, beta = 1.0, eps = 1e-10, tol = 1e-8, discrepancy = 0.0;
    std::size_t max_iters = 500, n_points = 0;
  } ainv;
  auto* sub_ainv = app.add_subcommand("acoustic-invert",
                                      "Recover modal initial data from a boundary trace");
  sub_ainv->add_option("--medium", ainv.medium)->required();
  sub_ainv->add_option("--trace", ainv.trace, "trace CSV (t,p_H,pt_H)")->required();
  sub_ainv->add_option("--k", ainv.k)->required();
  sub_ainv->add_option("--T", ainv.T, "truncate the trace to [0,T] (0 = use all samples)");
  sub_ainv->add_option("--beta", ainv.beta, "boundary damping used when recording");
  sub_ainv->add_option("--eps", ainv.eps, "Tikhonov shift");
  sub_ainv->add_option("--tol", ainv.tol, "CG relative tolerance");
  sub_ainv->add_option("--max-iters", ainv.max_iters, "CG iteration cap");
  sub_ainv->add_option("--discrepancy", ainv.discrepancy,
                       "L2(0,T) noise level of the pressure trace; stops the "
                       "iteration at that misfit (0 = off)");
  sub_ainv->add_option("--out", ainv.out, "output CSV (y,f0_rec,f1_rec)")->required();
  sub_ainv->add_option("--n-points", ainv.n_points, "resolution override");

  // ---- optical-invert ----
  struct {
    std::string h1, h2, out, calib, medium;
    long k1 = 1, k2 = 2;
    double L = 0.0;
    double smooth_h1 = 0.0, smooth_h2 = 0.0;
  } oinv;
  auto* sub_oinv = app.add_subcommand("optical-invert",
                                      "Reconstruct (D, mu_a) from two internal data profiles");
  sub_oinv->add_option("--h1", oinv.h1, "internal data CSV for k1")->required();
  sub_oinv->add_option("--h2", oinv.h2, "internal data CSV for k2")->required();
  sub_oinv->add_option("--smooth-h1", oinv.smooth_h1,
                       "L2 noise level of the k1 profile; smooths to that discrepancy "
                       "before differentiating (0 = off)");
  sub_oinv->add_option("--smooth-h2", oinv.smooth_h2, "same for the k2 profile");
  sub_oinv->add_option("--k1", oinv.k1)->required();
  sub_oinv->add_option("--k2", oinv.k2)->required();
  sub_oinv->add_option("--calib", oinv.calib, "D_H=<v>,D_prime_H=<v>")->required();
  sub_oinv->add_option("--L", oinv.L, "transverse width (sets lambda_k; required without --medium)");
  sub_oinv->add_option("--medium", oinv.medium,
                       "optional medium JSON: supplies L and the envelope weight");
  sub_oinv->add_option("--out", oinv.out,
                       "output CSV (y,F,u_rec,D_rec,mu_rec,weight,trusted)")
      ->required();

  // ---- certify ----
  CertifyArgs cert;
  auto* sub_cert = app.add_subcommand("certify", "Evaluate stability certificates");
  sub_cert->add_option("--medium", cert.medium_path)->required();
  sub_cert
      ->add_option("--mode", cert.mode, "observability | finite-fourier | holder")
      ->required();
  sub_cert->add_option("--k", cert.ks, "mode indices (repeat or comma-separate)")
      ->required()
      ->delimiter(',');
  sub_cert->add_option("--f0", cert.f0_paths, "initial pressure CSVs, one per mode")
      ->required()
      ->delimiter(',');
  sub_cert->add_option("--f1", cert.f1_paths, "initial velocity CSVs (default zero)")
      ->delimiter(',');
  sub_cert->add_option("--T", cert.T, "observation time")->required();
  sub_cert->add_option("--beta", cert.beta, "boundary damping");
  sub_cert->add_option("--dt", cert.dt, "time step (0 = stability limit)");
  sub_cert->add_option("--m-tilde", cert.m_tilde, "a-priori tail mass (holder mode)");
  sub_cert->add_option("--n-cap", cert.n_cap, "largest discrete mode count (holder mode)");
  sub_cert->add_option("--n-points", cert.n_points, "resolution override");
  sub_cert->add_option("--out", cert.out_path, "write the JSON report here instead of stdout");

  // ---- sweep ----
  struct {
    std::string config, medium, out_dir;
    long k1 = 0, k2 = 0;
    double beta = -1.0, T = -1.0, dt = -1.0, f1_amplitude = std::nan("");
    double depth_threshold = -1.0;
    std::vector<double> noise;
    std::vector<std::uint64_t> seeds;
    std::size_t n_points = 0;
  } swp;
  auto* sub_swp = app.add_subcommand("sweep", "Run the noise-stability sweep pipeline");
  sub_swp->add_option("--config", swp.config, "experiment config JSON");
  sub_swp->add_option("--medium", swp.medium, "medium JSON (overrides config)");
  sub_swp->add_option("--k1", swp.k1);
  sub_swp->add_option("--k2", swp.k2);
  sub_swp->add_option("--beta", swp.beta);
  sub_swp->add_option("--T", swp.T);
  sub_swp->add_option("--dt", swp.dt);
  sub_swp->add_option("--f1-amplitude", swp.f1_amplitude);
  sub_swp->add_option("--depth-threshold", swp.depth_threshold);
  sub_swp->add_option("--noise", swp.noise, "noise RMS levels")->delimiter(',');
  sub_swp->add_option("--seeds", swp.seeds, "RNG seeds")->delimiter(',');
  sub_swp->add_option("--out-dir", swp.out_dir, "output directory (overrides config)");
  sub_swp->add_option("--n-points", swp.n_points, "resolution override");

  // ---- depth-curve ----
  struct {
    std::string medium, out;
    long k = 1;
    double threshold = 1e-6;
    std::size_t n_points = 0;
  } dcv;
  auto* sub_dcv = app.add_subcommand("depth-curve", "Envelope-weight depth resolution curve");
  sub_dcv->add_option("--medium", dcv.medium)->required();
  sub_dcv->add_option("--k", dcv.k)->required();
  sub_dcv->add_option("--threshold", dcv.threshold, "resolvability threshold on envelope_lo^2");
  sub_dcv->add_option("--out", dcv.out, "output CSV (y,depth,weight,local_error,resolvable)")
      ->required();
  sub_dcv->add_option("--n-points", dcv.n_points, "resolution override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sub_osv->parsed()) {
      const patl::LayeredMedium medium = patl::load_medium(osv.medium, osv.n_points);
      const patl::ModalSolution sol = patl::solve_modal_bvp(medium, osv.k);
      const patl::Envelopes env = patl::compute_envelopes(medium, osv.k);
      const patl::Grid1D& g = medium.grid();
      std::vector<double> ys(g.n_points);
      for (std::size_t i = 0; i < g.n_points; ++i) ys[i] = g.y(i);
      const std::vector<double> zeros(g.n_points, 0.0);
      write_table(osv.out, "y,u,u_prime,envelope_lo,envelope_hi",
                  {ys, sol.u.values, sol.u_prime.values,
                   env.k_large_enough ? env.envelope_lo.values : zeros,
                   env.k_large_enough ? env.envelope_hi.values : zeros},
                  g.n_points);
      if (!env.k_large_enough)
        std::cerr << "note: kappa_min = " << patl::format_double(env.kappa_min)
                  << " <= 0 for k = " << osv.k << "; envelope columns are zero\n";
      return kExitOk;
    }

    if (sub_asim->parsed()) {
      const patl::LayeredMedium medium = patl::load_medium(asim.medium, asim.n_points);
      const patl::Grid1D& g = medium.grid();
      patl::ModalInitialData init;
      init.k = asim.k;
      init.f0 = load_initial(asim.f0, g, "--f0");
      init.f1 = asim.f1.empty()
                    ? patl::CoefficientProfile(g, std::vector<double>(g.n_points, 0.0))
                    : load_initial(asim.f1, g, "--f1");
      patl::SimulationOptions sim;
      sim.T = asim.T;
      sim.beta = asim.beta;
      sim.dt = asim.dt;
      sim.record_energy = !asim.out_energy.empty();
      const patl::SimulationResult res = patl::simulate_modal_wave(medium, init, sim);
      patl::write_trace_csv(asim.out_trace, res.trace);
      if (!asim.out_energy.empty())
        write_table(asim.out_energy, "t,E,cumulative_dissipation",
                    {res.energy.times, res.energy.energy, res.energy.boundary_dissipation},
                    res.energy.times.size());
      return kExitOk;
    }

    if (sub_ainv->parsed()) {
      const patl::LayeredMedium medium = patl::load_medium(ainv.medium, ainv.n_points);
      patl::BoundaryTrace trace = patl::read_trace_csv(ainv.trace, ainv.k);
      if (ainv.T > 0.0) {
        if (ainv.T > trace.t_final() + 0.5 * trace.dt)
          throw patl::config_error("--T exceeds the trace duration " +
                                   patl::format_double(trace.t_final()));
        const std::size_t keep =
            static_cast<std::size_t>(std::floor(ainv.T / trace.dt + 1e-12)) + 1;
        trace.times.resize(keep);
        trace.samples_p.resize(keep);
        trace.samples_pt.resize(keep);
      }
      patl::RecoveryOptions opt;
      opt.tikhonov_eps = ainv.eps;
      opt.tolerance = ainv.tol;
      opt.max_iterations = ainv.max_iters;
      opt.discrepancy = ainv.discrepancy;
      const patl::RecoveryResult rec =
          patl::recover_modal_initial_data(medium, trace, ainv.beta, opt);
      const patl::Grid1D& g = medium.grid();
      std::vector<double> ys(g.n_points);
      for (std::size_t i = 0; i < g.n_points; ++i) ys[i] = g.y(i);
      write_table(ainv.out, "y,f0_rec,f1_rec", {ys, rec.f0_rec.values, rec.f1_rec.values},
                  g.n_points);
      if (!rec.converged)
        std::cerr << "note: CG stopped at the iteration cap (relative residual "
                  << patl::format_double(rec.residual_norm) << ")\n";
      if (rec.t_below_uniqueness)
        std::cerr << "note: trace shorter than 2*theta*H; recovery is not certified unique\n";
      return kExitOk;
    }

    if (sub_oinv->parsed()) {
      const patl::Calibration calib = parse_calib(oinv.calib);
      patl::CoefficientProfile h1_prof = patl::read_profile_csv(oinv.h1);
      patl::CoefficientProfile h2_prof = patl::read_profile_csv(oinv.h2);
      const patl::SmoothedData sm1 =
          patl::smooth_to_discrepancy(h1_prof.values, h1_prof.grid.h_step, oinv.smooth_h1);
      const patl::SmoothedData sm2 =
          patl::smooth_to_discrepancy(h2_prof.values, h2_prof.grid.h_step, oinv.smooth_h2);
      patl::InternalDatum d1{oinv.k1, patl::CoefficientProfile(h1_prof.grid, sm1.values),
                             patl::CoefficientProfile(h1_prof.grid, sm1.slope)};
      patl::InternalDatum d2{oinv.k2, patl::CoefficientProfile(h2_prof.grid, sm2.values),
                             patl::CoefficientProfile(h2_prof.grid, sm2.slope)};

      double width_L = oinv.L;
      patl::Envelopes env1, env2;
      bool have_medium = !oinv.medium.empty();
      patl::LayeredMedium medium;
      if (have_medium) {
        medium = patl::load_medium(oinv.medium, h1_prof.grid.n_points);
        if (!medium.grid().matches(h1_prof.grid))
          throw patl::structural_error("--medium grid does not match the data grid");
        width_L = medium.width_L;
        env1 = patl::compute_envelopes(medium, oinv.k1);
        env2 = patl::compute_envelopes(medium, oinv.k2);
      } else if (!(width_L > 0.0)) {
        throw patl::config_error("optical-invert needs --L (or --medium) to set lambda_k");
      }
      const double lambda1 = patl::wavenumber(oinv.k1, width_L);
      const double lambda2 = patl::wavenumber(oinv.k2, width_L);

      const patl::RatioData ratio =
          have_medium ? patl::build_ratio(d1, d2, medium, env1, env2)
                      : patl::build_ratio(d1, d2);
      std::size_t f_trunc = 0;
      const patl::CoefficientProfile F =
          patl::reconstruct_F(ratio, lambda1, lambda2, calib.D_H, &f_trunc);

      patl::CoefficientProfile weight;
      if (have_medium && env1.k_large_enough) {
        std::vector<double> w(h1_prof.grid.n_points);
        for (std::size_t i = 0; i < w.size(); ++i)
          w[i] = env1.envelope_lo[i] * env1.envelope_lo[i];
        weight = patl::CoefficientProfile(h1_prof.grid, std::move(w));
      }
      patl::OpticalReconstruction rec = patl::reconstruct_coefficients(
          F, d1, lambda1, calib, weight, have_medium ? &medium.bounds : nullptr);
      if (weight.values.empty()) {
        // no medium: report the empirical weight u_rec^2 (zero where untrusted)
        std::vector<double> w(h1_prof.grid.n_points, 0.0);
        for (std::size_t i = 0; i < w.size(); ++i)
          if (rec.trusted[i]) w[i] = rec.u_rec[i] * rec.u_rec[i];
        rec.weight = patl::CoefficientProfile(h1_prof.grid, std::move(w));
      }

      const patl::Grid1D& g = h1_prof.grid;
      std::vector<double> ys(g.n_points);
      for (std::size_t i = 0; i < g.n_points; ++i) ys[i] = g.y(i);
      std::vector<int> trusted(g.n_points);
      for (std::size_t i = 0; i < g.n_points; ++i) trusted[i] = rec.trusted[i] ? 1 : 0;
      write_table(oinv.out, "y,F,u_rec,D_rec,mu_rec,weight,trusted",
                  {ys, rec.F.values, rec.u_rec.values, rec.D_rec.values, rec.mu_rec.values,
                   rec.weight.values},
                  g.n_points, &trusted);
      return kExitOk;
    }

    if (sub_cert->parsed()) return run_certify(cert);

    if (sub_swp->parsed()) {
      patl::ExperimentConfig cfg;
      if (!swp.config.empty()) cfg = patl::load_config(swp.config);
      if (!swp.medium.empty()) cfg.medium_path = swp.medium;
      if (swp.k1 > 0) cfg.k1 = swp.k1;
      if (swp.k2 > 0) cfg.k2 = swp.k2;
      if (swp.beta >= 0.0) cfg.beta = swp.beta;
      if (swp.T >= 0.0) cfg.T = swp.T;
      if (swp.dt >= 0.0) cfg.dt = swp.dt;
      if (!std::isnan(swp.f1_amplitude)) cfg.f1_amplitude = swp.f1_amplitude;
      if (swp.depth_threshold > 0.0) cfg.depth_threshold = swp.depth_threshold;
      if (!swp.noise.empty()) cfg.noise_levels = swp.noise;
      if (!swp.seeds.empty()) cfg.seeds = swp.seeds;
      if (!swp.out_dir.empty()) cfg.out_dir = swp.out_dir;
      if (swp.n_points > 0) cfg.n_points = swp.n_points;
      if (cfg.out_dir.empty()) throw patl::config_error("sweep: missing out_dir");
      cfg.validate();

      const patl::StabilityReport report = patl::run_pipeline(cfg);
      const std::vector<std::string> manifest = patl::emit_outputs(report, cfg.out_dir);
      for (const std::string& p : manifest) std::cout << p << "\n";
      if (!report.failures.empty()) {
        std::cerr << report.failures.size() << " sweep point(s) failed:\n";
        for (const std::string& f : report.failures) std::cerr << "  " << f << "\n";
        return kExitNumerical;
      }
      return kExitOk;
    }

    if (sub_dcv->parsed()) {
      const patl::LayeredMedium medium = patl::load_medium(dcv.medium, dcv.n_points);
      const patl::DepthCurve curve =
          patl::depth_resolution_curve(medium, dcv.k, dcv.threshold);
      const std::size_t n = curve.samples.size();
      std::vector<double> ys(n), depth(n), w(n), le(n);
      std::vector<int> res(n);
      const double H = medium.depth_H();
      for (std::size_t i = 0; i < n; ++i) {
        ys[i] = curve.samples[i].y;
        depth[i] = H - curve.samples[i].y;
        w[i] = curve.samples[i].weight;
        le[i] = curve.samples[i].local_error;
        res[i] = curve.samples[i].resolvable ? 1 : 0;
      }
      write_table(dcv.out, "y,depth,weight,local_error,resolvable", {ys, depth, w, le}, n, &res);
      std::cout << "resolvable_depth " << patl::format_double(curve.resolvable_depth) << "\n"
                << "fitted_decay_rate " << patl::format_double(curve.fitted_decay_rate) << "\n"
                << "predicted_decay_rate " << patl::format_double(curve.predicted_decay_rate)
                << "\n";
      return kExitOk;
    }
  } catch (const patl::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const patl::structural_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const patl::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;  // unreachable with require_subcommand(1)
}
