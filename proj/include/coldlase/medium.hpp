#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "coldlase/spectral.hpp"

namespace coldlase {

using Vec3 = Eigen::Vector3d;

/// Parameter interval [s_in, s_out] along a ray.
struct RaySegment {
  double s_in = 0;
  double s_out = 0;
  double length() const { return s_out - s_in; }
};

enum class CloudShape { uniform_sphere, gaussian };

/// Atomic cloud density field. Gaussian clouds carry a hard cutoff
/// radius (default 4 sigma_r) so escape is well-defined.
struct CloudGeometry {
  CloudShape shape = CloudShape::uniform_sphere;
  double radius = 5.0;   ///< uniform sphere radius
  double sigma_r = 1.0;  ///< gaussian rms radius
  double cutoff_r = 4.0; ///< gaussian hard cutoff
  double n0 = 1.0;       ///< peak density

  static CloudGeometry uniform(double R, double n0 = 1.0);
  static CloudGeometry gaussian(double sigma_r, double n0 = 1.0,
                                double cutoff_sigmas = 4.0);

  /// Radius of the support sphere (uniform radius, or gaussian cutoff).
  double boundary_radius() const {
    return shape == CloudShape::uniform_sphere ? radius : cutoff_r;
  }
};

/// Cylindrical gain channel along the z-axis through the origin.
/// radius 0 disables the channel; +infinity covers the whole cloud.
struct ChannelGeometry {
  double radius = 0.0;

  bool enabled() const { return radius > 0; }
  bool whole_cloud() const {
    return radius == std::numeric_limits<double>::infinity();
  }
};

struct Medium {
  CloudGeometry cloud;
  ChannelGeometry channel;
  double trap_fraction = 1.0; ///< fraction of scattering atoms outside the channel
  bool overlap_gain = false;  ///< validation mode: uniform gain over the whole cloud

  double density(const Vec3& x) const;
  RegionKind region(const Vec3& x) const;
};

double density(const Medium& m, const Vec3& x);
RegionKind region(const Medium& m, const Vec3& x);

/// Distance to the exit of the support sphere along dir, from a point
/// inside or on the sphere. Returns 0 when the ray never enters.
double ray_boundary_exit(const Medium& m, const Vec3& x, const Vec3& dir);

/// Intersection of the ray with the support sphere, clipped to s >= 0.
/// Empty when the ray misses.
std::vector<RaySegment> ray_cloud_segments(const Medium& m, const Vec3& x,
                                           const Vec3& dir, double s_max);

/// Maximal disjoint intervals within [0, s_max] where x + s*dir lies in
/// the gain channel; ordered and non-overlapping.
std::vector<RaySegment> ray_channel_segments(const Medium& m, const Vec3& x,
                                             const Vec3& dir, double s_max);

/// Resonant-frame optical depth of trap atoms along the ray, integrated
/// to the cloud boundary. Gain regions carry no attenuation and are
/// excluded from the integral.
double optical_depth_along(const Medium& m, const SpectralModel& spec,
                           const Vec3& x, const Vec3& dir, double delta);

/// Through-center diameter optical depth at resonance with the channel
/// disabled: the trapping depth b0 of the surrounding atoms.
double b0(const Medium& m, const SpectralModel& spec, double delta = 0.0);

/// Upper bound on the local scattering coefficient, n0 * sigma_sc(delta).
double majorant(const Medium& m, const SpectralModel& spec, double delta);

/// Line integral of the local density over [s_lo, s_hi] along the ray
/// (adaptive quadrature for gaussian clouds, exact for uniform ones).
double density_line_integral(const Medium& m, const Vec3& x, const Vec3& dir,
                             double s_lo, double s_hi);

} // namespace coldlase
