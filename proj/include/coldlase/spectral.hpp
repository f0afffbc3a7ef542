#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace coldlase {

/// Classification of a point in the medium.
enum class RegionKind { gain_channel, trap, vacuum };

enum class BetaMode { constant, lorentzian };

/// Frequency-dependent material response of the atomic cloud.
///
/// Units: gamma fixes the frequency scale (default 1), sigma0 the
/// resonant cross section (default 1), so the resonant mean free path
/// at peak density n0 = 1 is the length unit.
struct SpectralModel {
  double gamma = 1.0;      ///< natural linewidth of the closed transition
  double sigma0 = 1.0;     ///< resonant elastic cross section
  double rabi_2v = 0.0;    ///< control-mode Rabi parameter 2V, in units of gamma
  double delta_c = 0.0;    ///< control-mode detuning from the forbidden transition
  double gain_kappa = 0.0; ///< calibration constant mapping (2V/gamma)^2 to peak gain
  double gain_width = 1.0; ///< width of the gain resonance vs delta_c
  double beta0 = 0.0;      ///< peak inverse anti-Stokes branching fraction
  BetaMode beta_mode = BetaMode::constant;
  double quasi_width = 1.0; ///< quasi-energy resonance width (lorentzian beta mode)
  double gain_g0 = -1.0;    ///< direct peak gain coefficient; >= 0 overrides the
                            ///< gain_kappa formula (used by threshold scans)

  bool valid() const {
    return gamma > 0 && sigma0 > 0 && beta0 >= 0 && beta0 <= 1 &&
           gain_kappa >= 0 && gain_width > 0 && quasi_width > 0;
  }
};

struct KineticLengths {
  double l_ex_inv = 0; ///< inverse extinction length; negative for net gain
  double l_sc_inv = 0; ///< inverse scattering length, >= 0
  double l_ls_inv = 0; ///< inverse loss length; negative branch is -1/l_g
  double l_tr = 0;     ///< transport length (= scattering length here)
};

/// Elastic cross section on the closed transition at emission detuning delta.
inline double sigma_sc(double delta, const SpectralModel& m) {
  const double x = 2.0 * delta / m.gamma;
  return m.sigma0 / (1.0 + x * x);
}

/// Branching probability into the inverse anti-Stokes loss channel.
inline double beta_inel(double delta, const SpectralModel& m) {
  if (m.beta_mode == BetaMode::constant) return m.beta0;
  const double x = 2.0 * (delta - m.delta_c) / m.quasi_width;
  return m.beta0 / (1.0 + x * x);
}

/// Raman gain coefficient for atoms pumped into the lower hyperfine level,
/// at local atomic density `density`. Quadratic in the pump Rabi parameter,
/// resonant in the control detuning.
inline double gain_coeff(double /*delta*/, const SpectralModel& m, double density) {
  if (m.gain_g0 >= 0) return density * m.sigma0 * m.gain_g0;
  const double pump = m.rabi_2v / m.gamma;
  const double x = 2.0 * m.delta_c / m.gain_width;
  return density * m.sigma0 * m.gain_kappa * pump * pump / (1.0 + x * x);
}

/// Kinetic lengths at one point: extinction, scattering, and loss/gain.
/// The loss identity l_ls_inv = l_ex_inv - l_sc_inv holds exactly.
///
/// In a trap region the anti-Stokes branching beta acts as the loss
/// channel: extinction is reported as l_sc_inv / (1 - beta) so the loss
/// length corresponds to a mean of 1/beta collisions before conversion.
/// In a gain region there is no elastic scattering and extinction is the
/// negative of the gain coefficient.
inline KineticLengths kinetic_lengths(double delta, const SpectralModel& m,
                                      double density, RegionKind region) {
  KineticLengths k;
  if (density <= 0 || region == RegionKind::vacuum) {
    k.l_tr = std::numeric_limits<double>::infinity();
    return k;
  }
  if (region == RegionKind::trap) {
    k.l_sc_inv = density * sigma_sc(delta, m);
    const double beta = beta_inel(delta, m);
    k.l_ex_inv = beta < 1.0 ? k.l_sc_inv / (1.0 - beta)
                            : std::numeric_limits<double>::infinity();
  } else {
    k.l_sc_inv = 0.0;
    k.l_ex_inv = -gain_coeff(delta, m, density);
  }
  k.l_ls_inv = k.l_ex_inv - k.l_sc_inv;
  k.l_tr = k.l_sc_inv > 0 ? 1.0 / k.l_sc_inv
                          : std::numeric_limits<double>::infinity();
  return k;
}

/// Critical sample radius of the diffusive lasing threshold,
/// r0 = pi * sqrt(l_tr * l_g / 3).
inline double letokhov_radius(double l_tr, double l_g) {
  if (!(l_tr > 0) || !(l_g > 0))
    throw std::domain_error("letokhov_radius: lengths must be positive");
  return 3.14159265358979323846 * std::sqrt(l_tr * l_g / 3.0);
}

} // namespace coldlase
