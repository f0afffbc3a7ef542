#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>

#include "coldlase/medium.hpp"
#include "coldlase/rng.hpp"
#include "coldlase/spectral.hpp"

namespace coldlase {

enum class SpectralChannel { raman_elastic, anti_stokes };
enum class PhaseFunction { isotropic, dipole };
enum class SourceKind { center_point_dipole, channel_raman };

struct Photon {
  Vec3 pos = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();
  double delta = 0.0;  ///< emission detuning from the closed transition
  double weight = 1.0;
  int order = 0;       ///< number of elastic scatterings undergone
  SpectralChannel channel = SpectralChannel::raman_elastic;
  bool alive = true;
};

struct RunConfig {
  std::uint64_t n_photons = 100000;
  int max_order = 400;
  double w_min = 1e-4;            ///< roulette threshold
  double roulette_survive = 0.1;
  double detector_cone_half_angle = 0.1; ///< cone about +z, radians
  PhaseFunction phase_function = PhaseFunction::dipole;
  std::uint64_t seed = 1;
  SourceKind source = SourceKind::center_point_dipole;
  double delta = 0.0;             ///< monochromatic emission detuning
  int n_workers = 1;              ///< worker threads; result independent of this
  int n_theta_bins = 18;          ///< angular bins relative to the x (polarization) axis
};

/// Mergeable accumulator of escaped weight. Merging is entrywise
/// addition; block merge order is fixed by the driver so results are
/// bitwise independent of the worker count.
struct Tally {
  Eigen::ArrayXd escaped_elastic;       ///< weight per scattering order
  Eigen::ArrayXd escaped_anti_stokes;   ///< weight per order at conversion
  Eigen::ArrayXd escaped_elastic_count; ///< escape counts (window selection)
  Eigen::ArrayXd detector_cone;         ///< weight per order within the +z cone
  Eigen::ArrayXd collision_weight;      ///< weight reaching each collision order
  Eigen::ArrayXXd angular_elastic;      ///< theta-bin x order-bucket
  Eigen::ArrayXXd angular_anti_stokes;
  double truncated_weight = 0.0;
  std::uint64_t photons_launched = 0;
  bool diverged = false;

  Tally() = default;
  Tally(int max_order, int n_theta_bins);

  void merge(const Tally& other);
  double escaped_total() const {
    return escaped_elastic.sum() + escaped_anti_stokes.sum();
  }

  static constexpr int kOrderBuckets = 4;
  /// Buckets: 0, 1-4, 5-19, >= 20.
  static int order_bucket(int order) {
    if (order <= 0) return 0;
    if (order < 5) return 1;
    if (order < 20) return 2;
    return 3;
  }
};

struct FlightCollision { Vec3 at; };
struct FlightEscape { Vec3 exit; };
using FlightOutcome = std::variant<FlightCollision, FlightEscape>;

struct CollisionElastic { Vec3 new_dir; };
struct CollisionAntiStokes { Vec3 new_dir; };
using CollisionOutcome = std::variant<CollisionElastic, CollisionAntiStokes>;

/// Emit one source photon: a point dipole at the center, or a Raman
/// photon from a density-weighted position inside the gain channel.
/// Dipole emission pattern is taken about the x polarization axis.
Photon emit_source(const RunConfig& cfg, const Medium& medium, Rng& rng);

/// Woodcock delta tracking of one free flight from photon.pos along
/// photon.dir: real collisions only in scattering regions, escape at
/// the cloud boundary.
FlightOutcome sample_free_path(const Photon& photon, const Medium& medium,
                               const SpectralModel& spec, Rng& rng);

/// Multiply the photon weight by the exponential gain accumulated over
/// the channel segments of a straight flight of length s_len. Returns
/// false when the overflow cap (1e300) was hit.
bool apply_gain(Photon& photon, const Vec3& start, double s_len,
                const Medium& medium, const SpectralModel& spec);

/// Resolve a collision at a trap-region point: anti-Stokes conversion
/// with probability beta_inel, otherwise elastic redirection.
CollisionOutcome collide(const Photon& photon, const SpectralModel& spec,
                         PhaseFunction phase, Rng& rng);

/// New propagation direction after scattering: uniform on the sphere,
/// or dipole (Rayleigh) distributed about the incoming direction.
Vec3 sample_phase_function(const Vec3& in_dir, PhaseFunction kind, Rng& rng);

/// Sample a direction with p(cos t) = (3/8)(1 + cos^2 t) about `axis`.
Vec3 sample_dipole_direction(const Vec3& axis, Rng& rng);

/// Unbiased termination of low-weight photons. Returns false when the
/// photon was killed.
bool russian_roulette(Photon& photon, const RunConfig& cfg, Rng& rng);

/// Follow one photon history to escape, truncation, or roulette death,
/// accumulating into the tally.
void trace(Photon photon, const Medium& medium, const SpectralModel& spec,
           const RunConfig& cfg, Rng& rng, Tally& tally);

/// Launch cfg.n_photons independent histories. Per-photon substreams are
/// derived from (seed, photon index); the result is bitwise reproducible
/// for a given seed regardless of n_workers.
Tally run(const Medium& medium, const SpectralModel& spec, const RunConfig& cfg);

} // namespace coldlase
