#pragma once

// End-to-end experiment driver: configuration ingestion, noise injection,
// stability sweeps over (noise level, seed) points, interpolation-chain
// evaluation, depth-resolution curves, and CSV / gnuplot emission.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "patl/acoustic.hpp"
#include "patl/inversion_acoustic.hpp"
#include "patl/inversion_optical.hpp"
#include "patl/medium.hpp"
#include "patl/optical.hpp"

namespace patl {

struct ExperimentConfig {
  std::string medium_path;
  long k1 = 1;
  long k2 = 2;
  double beta = 1.0;
  double T = 0.0;          // 0 => 3*theta*H after the medium is loaded
  double dt = 0.0;         // 0 => stability-limited automatic step
  std::size_t n_points = 0;  // 0 => resolution from the medium file
  double f1_amplitude = 0.0;  // initial velocity hook: f1 = amp*sin(pi*y/(2H))
  std::vector<double> noise_levels;  // nonnegative, ascending
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  double depth_threshold = 1e-6;
  RecoveryOptions recovery;

  void validate() const;  // throws config_error on violations
};

ExperimentConfig config_from_json_text(const std::string& text,
                                       const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

struct SweepRecord {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double boundary_misfit = 0.0;  // sum over modes of the weighted trace-misfit integrals
  double weighted_err_D = 0.0;   // || envelope_lo^2 (D - D_rec) ||_inf over trusted nodes
  double weighted_err_mu = 0.0;  // || envelope_lo^2 (mu_a - mu_rec) ||_inf over trusted nodes
  double rhs_bound = 0.0;        // c_emp * boundary_misfit^{1/4}
  long iterations_k1 = 0;
  long iterations_k2 = 0;
  bool converged = true;
};

struct DepthSample {
  double y = 0.0;
  double weight = 0.0;       // envelope_lo(y)^2
  double local_error = 0.0;  // |D - D_rec| at y on the clean run (0 if unknown)
  bool resolvable = false;   // weight >= threshold
};

struct DepthCurve {
  double threshold = 0.0;
  double resolvable_depth = 0.0;      // largest H - y with weight >= threshold
  double fitted_decay_rate = 0.0;     // d ln(weight)/dy fitted over y in [H/2, H]
  double predicted_decay_rate = 0.0;  // 2*sqrt(kappa_max): the weight is the
                                      // squared lower envelope, which carries
                                      // sqrt(kappa_max); equals 2*sqrt(kappa_min)
                                      // for constant coefficients
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  std::vector<DepthSample> samples;  // by increasing y
};

struct StabilityReport {
  long k1 = 0, k2 = 0;
  double beta = 0.0;
  double t_used = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double kappa_min_1 = 0.0, kappa_min_2 = 0.0;
  ObservabilityConstants constants{};
  Calibration calib{};
  double clean_err_D = 0.0, clean_err_mu = 0.0;  // discretization floor (no noise)
  double c_emp = 0.0;        // calibrated at the smallest positive noise level
  double fitted_slope = 0.0;  // d log(mean weighted err) / d log(eps)
  std::vector<SweepRecord> records;    // ordered by (epsilon, seed)
  std::vector<std::string> failures;   // per-point stage errors, points skipped
  DepthCurve depth;
};

// Adds zero-mean Gaussian noise of RMS eps to both trace channels in place.
void add_trace_noise(BoundaryTrace& trace, double eps, std::mt19937_64& rng);

// Full pipeline: optical forward (k1, k2) -> acoustic forward -> noise ->
// trace inversion -> coefficient reconstruction -> weighted errors and the
// quarter-power misfit bound, for every (noise level, seed) point.  Points
// run concurrently up to PATL_THREADS; the reduction is ordered, so outputs
// are independent of the thread count.
StabilityReport run_pipeline(const ExperimentConfig& config);
StabilityReport run_pipeline(const ExperimentConfig& config, const LayeredMedium& medium);

// C1-from-H1 interpolation bound: c_interp * sqrt(h1_misfit) * sqrt(a_priori_h3).
// The constant was calibrated by maximizing ||f||_C1 / (||f||_H1^1/2 ||f||_H3^1/2)
// over affine, polynomial (degree <= 5, optimized), oscillatory, boundary-layer,
// bump and random smooth families on [0,1] at n = 2049: the measured supremum is
// 1.93 (attained by a cubic/quintic with |f|, |f'| peaking at the boundary; the
// best affine 1 + 4.5y already gives 1.754, so no constant below that can work).
// Frozen at 2.5 for ~29% margin; the unit tests pin both the affine witness and
// the margin.
inline constexpr double kInterpolationConstant = 2.5;
double interpolation_bound(double h1_misfit, double a_priori_h3,
                           double c_interp = kInterpolationConstant);

struct InterpolationCheck {
  double actual_c1 = 0.0;  // discrete C1 norm of the difference
  double h1_misfit = 0.0;
  double h3_norm = 0.0;    // discrete H3 norm of the difference
  double bound = 0.0;
  bool satisfied = false;  // actual_c1 <= bound
};

// Measures the discrete norms of f - f_tilde and evaluates the bound.
InterpolationCheck interpolation_check(const CoefficientProfile& f,
                                       const CoefficientProfile& f_tilde,
                                       double c_interp = kInterpolationConstant);

// Depth-resolution curve for mode k1: weight envelope_lo^2 on the grid, the
// largest depth at which the weight clears `threshold`, and the fitted
// exponential decay rate of the weight against the prediction 2*sqrt(kappa_min).
DepthCurve depth_resolution_curve(const LayeredMedium& medium, long k1, double threshold);

// Writes sweep CSV, depth CSV, summary JSON, and gnuplot .dat/.plt files into
// `directory` (created if absent); returns the paths written, each verified to
// exist.  An empty report produces only the summary.
std::vector<std::string> emit_outputs(const StabilityReport& report,
                                      const std::string& directory);

// Smooth random medium inside the admissible set: constants plus a 3-term
// amplitude-clamped cosine series; bounds {d0=0.25, mu0=0.25, M=50, c_m=0.25}.
LayeredMedium random_admissible_medium(std::uint64_t seed, std::size_t n_points = 257,
                                       double depth_H = 1.0, double width_L = 6.283185307179586);

// Smallest k >= 1 with kappa_min(k) > 0; throws config_error if none up to k_max.
long smallest_admitted_mode(const LayeredMedium& medium, long k_max = 64);

// Worker cap for sweep points: PATL_THREADS if set (>=1), else hardware
// concurrency, else 1.
std::size_t sweep_thread_cap();

}  // namespace patl
