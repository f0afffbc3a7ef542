#include "coldlase/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace coldlase {

namespace {

constexpr double kMinWindowEscapes = 100.0;
constexpr int kMinWindowSpan = 4;

} // namespace

TailFit tail_ratio(const OrderSeries& series) {
  TailFit fit;
  const int lo = series.n_lo, hi = series.n_hi;
  if (lo < 0 || hi >= series.intensities.size() || hi - lo < 1) return fit;
  const int m = hi - lo + 1;
  // OLS of log I_n on n.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int n = lo; n <= hi; ++n) {
    const double I = series.intensities[n];
    if (!(I > 0)) return fit;
    const double y = std::log(I);
    sx += n;
    sy += y;
    sxx += double(n) * n;
    sxy += n * y;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;
  double ss_res = 0;
  for (int n = lo; n <= hi; ++n) {
    const double r = std::log(series.intensities[n]) - (intercept + slope * n);
    ss_res += r * r;
  }
  const double slope_var = m > 2 ? ss_res / (m - 2) * m / denom : 0.0;
  // q_err is sized so that the 2*q_err verdict margin is a conservative
  // (99%, small-sample t) interval of the fitted slope; near-threshold
  // runs then land in the inconclusive band instead of flipping verdicts.
  const int dof = std::max(m - 2, 1);
  const double t99 = 2.576 + 5.2 / dof + 60.0 / (double(dof) * dof * dof);
  fit.q = std::exp(slope);
  fit.q_err = fit.q * 0.5 * t99 * std::sqrt(std::max(slope_var, 0.0));
  fit.ok = true;
  return fit;
}

StabilityReport classify_stability(const Tally& tally, const RunConfig& cfg) {
  StabilityReport rep;
  const double total = tally.escaped_total() + tally.truncated_weight;
  rep.truncated_fraction = total > 0 ? tally.truncated_weight / total : 0.0;
  rep.amplification =
      tally.photons_launched > 0 ? total / double(tally.photons_launched) : 0.0;

  // Above threshold the escaped weight grows without bound; a large net
  // amplification certifies instability even when the tail fit is too
  // noisy to decide (rare high-weight trajectories dominate late orders).
  if (tally.diverged || rep.truncated_fraction > 0.5 ||
      rep.amplification > 1e3) {
    rep.verdict = Verdict::diverging;
  }

  // Tail window: upper half of the orders that still hold enough
  // weight-carrying escapes for the fit to be meaningful.
  int n_hi = -1;
  for (int n = 0; n < tally.escaped_elastic_count.size(); ++n)
    if (tally.escaped_elastic_count[n] >= kMinWindowEscapes) n_hi = n;
  const int n_lo = n_hi / 2;
  if (n_hi < 0 || n_hi - n_lo < kMinWindowSpan) {
    if (rep.verdict != Verdict::diverging) rep.verdict = Verdict::inconclusive;
    return rep;
  }

  OrderSeries series;
  series.intensities = tally.escaped_elastic;
  series.n_photons = tally.photons_launched;
  series.n_lo = n_lo;
  series.n_hi = n_hi;
  rep.window_lo = n_lo;
  rep.window_hi = n_hi;

  const TailFit fit = tail_ratio(series);
  if (!fit.ok) {
    if (rep.verdict != Verdict::diverging) rep.verdict = Verdict::inconclusive;
    return rep;
  }
  rep.q = fit.q;
  rep.q_err = fit.q_err;
  if (rep.verdict == Verdict::diverging) return rep;

  if (rep.q - 2.0 * rep.q_err > 1.0)
    rep.verdict = Verdict::diverging;
  else if (rep.q + 2.0 * rep.q_err < 1.0)
    rep.verdict = Verdict::converging;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

RunSetup with_param(RunSetup setup, ScanParam param, double value) {
  switch (param) {
    case ScanParam::pump_rabi:
      setup.spectral.rabi_2v = value;
      break;
    case ScanParam::gain_g0:
      setup.spectral.gain_g0 = value;
      break;
    case ScanParam::cloud_radius:
      if (setup.medium.cloud.shape == CloudShape::uniform_sphere)
        setup.medium.cloud.radius = value;
      else
        setup.medium.cloud = CloudGeometry::gaussian(
            value, setup.medium.cloud.n0,
            setup.medium.cloud.cutoff_r / setup.medium.cloud.sigma_r);
      break;
  }
  return setup;
}

Bisection bisect_threshold(const std::function<Verdict(double, int)>& verdict,
                           double lo, double hi, double rel_tol) {
  auto probe = [&](double v) {
    Verdict r = verdict(v, 1);
    for (int mult = 4; r == Verdict::inconclusive && mult <= 16; mult *= 4)
      r = verdict(v, mult);
    return r;
  };

  Bisection out;
  const Verdict v_lo = probe(lo);
  out.probes += 1;
  const Verdict v_hi = probe(hi);
  out.probes += 1;
  if (v_lo != Verdict::converging || v_hi != Verdict::diverging)
    throw std::invalid_argument(
        "bisect_threshold: bracket does not straddle the instability; "
        "widen [lo, hi]");

  while (hi - lo > rel_tol * 0.5 * (hi + lo)) {
    const double mid = 0.5 * (lo + hi);
    const Verdict v = probe(mid);
    out.probes += 1;
    if (v == Verdict::diverging) {
      hi = mid;
    } else if (v == Verdict::converging) {
      lo = mid;
    } else {
      // Persistent ambiguity right at the threshold: stop and report
      // the current (widened) bracket.
      out.clean = false;
      break;
    }
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.critical = 0.5 * (lo + hi);
  return out;
}

ThresholdReport threshold_scan(const RunSetup& base, ScanParam param,
                               double lo, double hi, double rel_tol,
                               bool extrapolation_correction) {
  std::uint64_t probe_counter = 0;
  auto verdict = [&](double value, int photon_mult) {
    RunSetup setup = with_param(base, param, value);
    setup.run.n_photons *= photon_mult;
    setup.run.seed = Rng::for_stream(base.run.seed, ++probe_counter).next();
    const Tally tally = run(setup.medium, setup.spectral, setup.run);
    return classify_stability(tally, setup.run).verdict;
  };

  const Bisection bi = bisect_threshold(verdict, lo, hi, rel_tol);

  ThresholdReport rep;
  rep.param = param;
  rep.critical_value = bi.critical;
  rep.bracket_lo = bi.bracket_lo;
  rep.bracket_hi = bi.bracket_hi;
  rep.probes = bi.probes;
  rep.clean = bi.clean;

  // Diffusion-theory cross-check for the uniform-gain validation mode.
  if (param == ScanParam::gain_g0 && base.medium.overlap_gain &&
      base.medium.cloud.shape == CloudShape::uniform_sphere) {
    const double n0 = base.medium.cloud.n0;
    const double l_tr = 1.0 / (n0 * sigma_sc(base.run.delta, base.spectral));
    const double r_eff = base.medium.cloud.radius +
                         (extrapolation_correction ? 0.71 * l_tr : 0.0);
    const double pi = 3.14159265358979323846;
    rep.analytic_letokhov = 3.0 * r_eff * r_eff / (pi * pi * l_tr);
    const double g_crit = rep.critical_value * n0 * base.spectral.sigma0;
    const double l_g_measured = 1.0 / g_crit;
    rep.relative_gap =
        std::abs(l_g_measured - rep.analytic_letokhov) / rep.analytic_letokhov;
  }
  return rep;
}

std::vector<SpectralScanRow> spectral_scan(const RunSetup& base,
                                           const std::vector<double>& delta_c_grid,
                                           const std::vector<double>& b0_list,
                                           double obs_angle_rad) {
  std::vector<SpectralScanRow> rows;
  rows.reserve(delta_c_grid.size() * b0_list.size());
  std::uint64_t point = 0;
  for (const double b0_target : b0_list) {
    RunSetup setup = base;
    setup.medium.cloud = CloudGeometry::uniform(
        b0_target / (2.0 * base.medium.cloud.n0 * base.spectral.sigma0),
        base.medium.cloud.n0);
    for (const double dc : delta_c_grid) {
      setup.spectral.delta_c = dc;
      setup.run.seed = Rng::for_stream(base.run.seed, ++point).next();
      const Tally tally = run(setup.medium, setup.spectral, setup.run);

      SpectralScanRow row;
      row.delta_c = dc;
      row.b0 = b0_target;
      const StabilityReport rep = classify_stability(tally, setup.run);
      if (tally.diverged || rep.truncated_fraction > 0.5) {
        row.diverged = true;
        row.elastic = row.anti_stokes = row.sum =
            std::numeric_limits<double>::quiet_NaN();
      } else {
        int bin = static_cast<int>(obs_angle_rad / M_PI * setup.run.n_theta_bins);
        bin = std::min(std::max(bin, 0), setup.run.n_theta_bins - 1);
        row.elastic = tally.angular_elastic.row(bin).sum();
        row.anti_stokes = tally.angular_anti_stokes.row(bin).sum();
        row.sum = row.elastic + row.anti_stokes;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

double mean_scattering_order(const Tally& tally) {
  const double total = tally.escaped_elastic.sum();
  if (!(total > 0))
    throw std::invalid_argument("mean_scattering_order: empty tally");
  double weighted = 0;
  for (int n = 0; n < tally.escaped_elastic.size(); ++n)
    weighted += n * tally.escaped_elastic[n];
  return weighted / total;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converging: return "converging";
    case Verdict::diverging: return "diverging";
    default: return "inconclusive";
  }
}

const char* to_string(ScanParam p) {
  switch (p) {
    case ScanParam::pump_rabi: return "pump_rabi";
    case ScanParam::gain_g0: return "gain_g0";
    default: return "cloud_radius";
  }
}

} // namespace coldlase
