#pragma once

#include <functional>
#include <vector>

#include "coldlase/transport.hpp"

namespace coldlase {

/// Per-order escaped intensity with the tail-fit window [n_lo, n_hi].
struct OrderSeries {
  Eigen::ArrayXd intensities;
  std::uint64_t n_photons = 0;
  int n_lo = 0;
  int n_hi = 0;
};

struct TailFit {
  double q = 0;     ///< estimated asymptotic ratio I_{n+1} / I_n
  double q_err = 0; ///< standard error of q
  bool ok = false;  ///< false when the window has nonpositive intensities
};

enum class Verdict { converging, diverging, inconclusive };

struct StabilityReport {
  double q = 0;
  double q_err = 0;
  Verdict verdict = Verdict::inconclusive;
  double truncated_fraction = 0;
  double amplification = 0;
  int window_lo = 0;
  int window_hi = 0;
};

enum class ScanParam { pump_rabi, gain_g0, cloud_radius };

struct ThresholdReport {
  ScanParam param = ScanParam::pump_rabi;
  double critical_value = 0;
  double bracket_lo = 0;
  double bracket_hi = 0;
  double analytic_letokhov = 0; ///< analytic critical gain length, when applicable
  double relative_gap = 0;      ///< |measured l_g - analytic| / analytic
  int probes = 0;
  bool clean = true; ///< false when the bracket had to be widened
};

struct SpectralScanRow {
  double delta_c = 0;
  double b0 = 0;
  double elastic = 0;
  double anti_stokes = 0;
  double sum = 0;
  bool diverged = false;
};

/// One complete Monte-Carlo configuration.
struct RunSetup {
  Medium medium;
  SpectralModel spectral;
  RunConfig run;
};

/// Geometric tail ratio from the least-squares slope of log I_n over the
/// window. Scale-invariant: multiplying all intensities by c > 0 leaves
/// the fit unchanged.
TailFit tail_ratio(const OrderSeries& series);

/// Build the tail window from the escaped-order distribution and decide
/// converging / diverging / inconclusive. A diverged overflow flag or a
/// truncated fraction above 0.5 forces a diverging verdict.
StabilityReport classify_stability(const Tally& tally, const RunConfig& cfg);

/// Apply the scanned parameter to a run setup.
RunSetup with_param(RunSetup setup, ScanParam param, double value);

/// Bisection on a noisy monotone verdict function. Inconclusive probes
/// are retried with 4x photons at most twice, after which the current
/// bracket is reported with clean = false.
struct Bisection {
  double bracket_lo = 0;
  double bracket_hi = 0;
  double critical = 0;
  int probes = 0;
  bool clean = true;
};
Bisection bisect_threshold(const std::function<Verdict(double, int)>& verdict,
                           double lo, double hi, double rel_tol);

/// Full-run threshold bisection over the scanned parameter. The bracket
/// must straddle the instability: verdict(lo) converging, verdict(hi)
/// diverging, otherwise an invalid_argument asks the caller to widen it.
ThresholdReport threshold_scan(const RunSetup& base, ScanParam param,
                               double lo, double hi, double rel_tol = 0.05,
                               bool extrapolation_correction = true);

/// One Monte-Carlo run per (delta_c, b0) grid point; totals are taken at
/// the observation angle (relative to the x polarization axis).
std::vector<SpectralScanRow> spectral_scan(const RunSetup& base,
                                           const std::vector<double>& delta_c_grid,
                                           const std::vector<double>& b0_list,
                                           double obs_angle_rad);

/// Mean elastic scattering order of a completed (passive) run.
double mean_scattering_order(const Tally& tally);

const char* to_string(Verdict v);
const char* to_string(ScanParam p);

} // namespace coldlase
