#include "coldlase/medium.hpp"

#include <algorithm>
#include <cmath>

namespace coldlase {

CloudGeometry CloudGeometry::uniform(double R, double n0) {
  CloudGeometry c;
  c.shape = CloudShape::uniform_sphere;
  c.radius = R;
  c.n0 = n0;
  return c;
}

CloudGeometry CloudGeometry::gaussian(double sigma_r, double n0,
                                      double cutoff_sigmas) {
  CloudGeometry c;
  c.shape = CloudShape::gaussian;
  c.sigma_r = sigma_r;
  c.cutoff_r = cutoff_sigmas * sigma_r;
  c.n0 = n0;
  return c;
}

double Medium::density(const Vec3& x) const {
  const double r2 = x.squaredNorm();
  if (cloud.shape == CloudShape::uniform_sphere) {
    return r2 < cloud.radius * cloud.radius ? cloud.n0 : 0.0;
  }
  if (r2 >= cloud.cutoff_r * cloud.cutoff_r) return 0.0;
  return cloud.n0 * std::exp(-0.5 * r2 / (cloud.sigma_r * cloud.sigma_r));
}

RegionKind Medium::region(const Vec3& x) const {
  if (density(x) <= 0.0) return RegionKind::vacuum;
  if (overlap_gain || channel.whole_cloud()) return RegionKind::gain_channel;
  if (channel.enabled()) {
    const double rho2 = x.x() * x.x() + x.y() * x.y();
    if (rho2 < channel.radius * channel.radius) return RegionKind::gain_channel;
  }
  return RegionKind::trap;
}

double density(const Medium& m, const Vec3& x) { return m.density(x); }
RegionKind region(const Medium& m, const Vec3& x) { return m.region(x); }

namespace {

// Intersection of the ray with a sphere of radius R about the origin,
// as a parameter interval; nullopt semantics via the bool flag.
bool ray_sphere(const Vec3& x, const Vec3& dir, double R, double& s0,
                double& s1) {
  const double b = x.dot(dir);
  const double c = x.squaredNorm() - R * R;
  const double disc = b * b - c;
  if (disc <= 0) return false;
  const double sq = std::sqrt(disc);
  s0 = -b - sq;
  s1 = -b + sq;
  return true;
}

// Intersection with the infinite cylinder of radius rho about the z-axis.
// Returns false for no overlap; an unbounded interval is clamped by caller.
bool ray_cylinder(const Vec3& x, const Vec3& dir, double rho, double& s0,
                  double& s1) {
  const double a = dir.x() * dir.x() + dir.y() * dir.y();
  const double c = x.x() * x.x() + x.y() * x.y() - rho * rho;
  if (a < 1e-30) {
    if (c >= 0) return false;
    s0 = -std::numeric_limits<double>::infinity();
    s1 = std::numeric_limits<double>::infinity();
    return true;
  }
  const double b = x.x() * dir.x() + x.y() * dir.y();
  const double disc = b * b - a * c;
  if (disc <= 0) return false;
  const double sq = std::sqrt(disc);
  s0 = (-b - sq) / a;
  s1 = (-b + sq) / a;
  return true;
}

// Adaptive Simpson quadrature, absolute tolerance tol.
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

constexpr double kQuadTol = 1e-8;

} // namespace

double ray_boundary_exit(const Medium& m, const Vec3& x, const Vec3& dir) {
  double s0, s1;
  if (!ray_sphere(x, dir, m.cloud.boundary_radius(), s0, s1)) return 0.0;
  return std::max(s1, 0.0);
}

std::vector<RaySegment> ray_cloud_segments(const Medium& m, const Vec3& x,
                                           const Vec3& dir, double s_max) {
  double s0, s1;
  if (!ray_sphere(x, dir, m.cloud.boundary_radius(), s0, s1)) return {};
  const double lo = std::max(s0, 0.0);
  const double hi = std::min(s1, s_max);
  if (hi <= lo) return {};
  return {RaySegment{lo, hi}};
}

std::vector<RaySegment> ray_channel_segments(const Medium& m, const Vec3& x,
                                             const Vec3& dir, double s_max) {
  auto cloud = ray_cloud_segments(m, x, dir, s_max);
  if (cloud.empty()) return {};
  if (m.overlap_gain || m.channel.whole_cloud()) return cloud;
  if (!m.channel.enabled()) return {};
  double c0, c1;
  if (!ray_cylinder(x, dir, m.channel.radius, c0, c1)) return {};
  const double lo = std::max(cloud[0].s_in, c0);
  const double hi = std::min(cloud[0].s_out, c1);
  if (hi <= lo) return {};
  return {RaySegment{lo, hi}};
}

double density_line_integral(const Medium& m, const Vec3& x, const Vec3& dir,
                             double s_lo, double s_hi) {
  if (s_hi <= s_lo) return 0.0;
  if (m.cloud.shape == CloudShape::uniform_sphere)
    return m.cloud.n0 * (s_hi - s_lo);
  return adaptive_simpson(
      [&](double s) { return m.density(x + s * dir); }, s_lo, s_hi, kQuadTol);
}

double optical_depth_along(const Medium& m, const SpectralModel& spec,
                           const Vec3& x, const Vec3& dir, double delta) {
  auto cloud = ray_cloud_segments(m, x, dir,
                                  std::numeric_limits<double>::infinity());
  if (cloud.empty()) return 0.0;
  double integral = density_line_integral(m, x, dir, cloud[0].s_in, cloud[0].s_out);
  // Channel atoms are pumped away from the scattering level: the channel
  // does not attenuate, so subtract its share of the line integral. In
  // overlap mode gain coexists with scattering and nothing is subtracted.
  if (!m.overlap_gain) {
    for (const auto& seg : ray_channel_segments(
             m, x, dir, std::numeric_limits<double>::infinity()))
      integral -= density_line_integral(m, x, dir, seg.s_in, seg.s_out);
  }
  return std::max(integral, 0.0) * sigma_sc(delta, spec);
}

double b0(const Medium& m, const SpectralModel& spec, double delta) {
  Medium passive = m;
  passive.channel.radius = 0.0;
  passive.overlap_gain = false;
  const Vec3 dir = Vec3::UnitZ();
  return 2.0 * optical_depth_along(passive, spec, Vec3::Zero(), dir, delta);
}

double majorant(const Medium& m, const SpectralModel& spec, double delta) {
  return m.cloud.n0 * sigma_sc(delta, spec);
}

} // namespace coldlase
