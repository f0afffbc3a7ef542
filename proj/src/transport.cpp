#include "coldlase/transport.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace coldlase {

namespace {

constexpr double kWeightCap = 1e300;

// Orthonormal frame with w as the third axis.
void make_frame(const Vec3& w, Vec3& u, Vec3& v) {
  const Vec3 a = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = w.cross(a).normalized();
  v = w.cross(u);
}

// Inverse CDF of p(mu) = (3/8)(1 + mu^2) on [-1, 1] (Cardano form).
double sample_dipole_cosine(double u) {
  const double w = 4.0 * u - 2.0;
  const double c = std::cbrt(w + std::sqrt(w * w + 1.0));
  return c - 1.0 / c;
}

Vec3 direction_about(const Vec3& axis, double mu, double phi) {
  Vec3 u, v;
  make_frame(axis, u, v);
  const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  return (mu * axis + st * (std::cos(phi) * u + std::sin(phi) * v)).normalized();
}

// Local elastic scattering coefficient seen by the random walk.
double scatter_coeff(const Medium& medium, const SpectralModel& spec,
                     double delta, const Vec3& x) {
  const double n = medium.density(x);
  if (n <= 0) return 0.0;
  if (medium.overlap_gain) return n * sigma_sc(delta, spec);
  const RegionKind r = medium.region(x);
  if (r != RegionKind::trap) return 0.0;
  return medium.trap_fraction * n * sigma_sc(delta, spec);
}

} // namespace

Tally::Tally(int max_order, int n_theta_bins) {
  const int n = max_order + 1;
  escaped_elastic = Eigen::ArrayXd::Zero(n);
  escaped_anti_stokes = Eigen::ArrayXd::Zero(n);
  escaped_elastic_count = Eigen::ArrayXd::Zero(n);
  detector_cone = Eigen::ArrayXd::Zero(n);
  collision_weight = Eigen::ArrayXd::Zero(n);
  angular_elastic = Eigen::ArrayXXd::Zero(n_theta_bins, kOrderBuckets);
  angular_anti_stokes = Eigen::ArrayXXd::Zero(n_theta_bins, kOrderBuckets);
}

void Tally::merge(const Tally& other) {
  escaped_elastic += other.escaped_elastic;
  escaped_anti_stokes += other.escaped_anti_stokes;
  escaped_elastic_count += other.escaped_elastic_count;
  detector_cone += other.detector_cone;
  collision_weight += other.collision_weight;
  angular_elastic += other.angular_elastic;
  angular_anti_stokes += other.angular_anti_stokes;
  truncated_weight += other.truncated_weight;
  photons_launched += other.photons_launched;
  diverged = diverged || other.diverged;
}

Vec3 sample_dipole_direction(const Vec3& axis, Rng& rng) {
  const double mu = sample_dipole_cosine(rng.uniform());
  const double phi = 2.0 * M_PI * rng.uniform();
  return direction_about(axis, mu, phi);
}

Vec3 sample_phase_function(const Vec3& in_dir, PhaseFunction kind, Rng& rng) {
  if (kind == PhaseFunction::isotropic) {
    const double mu = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * M_PI * rng.uniform();
    return direction_about(Vec3::UnitZ(), mu, phi);
  }
  return sample_dipole_direction(in_dir, rng);
}

Photon emit_source(const RunConfig& cfg, const Medium& medium, Rng& rng) {
  Photon ph;
  ph.delta = cfg.delta;
  if (cfg.source == SourceKind::center_point_dipole) {
    ph.pos = Vec3::Zero();
    ph.dir = sample_dipole_direction(Vec3::UnitX(), rng);
    return ph;
  }
  // Raman photon from the channel volume, density-weighted.
  const double rb = medium.cloud.boundary_radius();
  const double rho_max = medium.channel.enabled() && !medium.channel.whole_cloud()
                             ? std::min(medium.channel.radius, rb)
                             : rb;
  for (;;) {
    const double rho = rho_max * std::sqrt(rng.uniform());
    const double phi = 2.0 * M_PI * rng.uniform();
    const double z = rb * (2.0 * rng.uniform() - 1.0);
    const Vec3 x(rho * std::cos(phi), rho * std::sin(phi), z);
    if (medium.region(x) != RegionKind::gain_channel && !medium.overlap_gain)
      continue;
    if (rng.uniform() * medium.cloud.n0 <= medium.density(x)) {
      ph.pos = x;
      ph.dir = sample_dipole_direction(Vec3::UnitX(), rng);
      return ph;
    }
  }
}

FlightOutcome sample_free_path(const Photon& photon, const Medium& medium,
                               const SpectralModel& spec, Rng& rng) {
  const double mu_maj = majorant(medium, spec, photon.delta);
  const double s_exit = ray_boundary_exit(medium, photon.pos, photon.dir);
  if (mu_maj <= 0)
    return FlightEscape{photon.pos + s_exit * photon.dir};
  double s = 0.0;
  for (;;) {
    s += rng.exponential(mu_maj);
    if (s >= s_exit)
      return FlightEscape{photon.pos + s_exit * photon.dir};
    const Vec3 x = photon.pos + s * photon.dir;
    const double mu = scatter_coeff(medium, spec, photon.delta, x);
    if (rng.uniform() * mu_maj < mu)
      return FlightCollision{x};
  }
}

bool apply_gain(Photon& photon, const Vec3& start, double s_len,
                const Medium& medium, const SpectralModel& spec) {
  if (spec.gain_kappa <= 0 && spec.gain_g0 < 0) return true;
  double exponent = 0.0;
  for (const auto& seg :
       ray_channel_segments(medium, start, photon.dir, s_len)) {
    const double col_density =
        density_line_integral(medium, start, photon.dir, seg.s_in, seg.s_out);
    // gain_coeff is linear in density, so the path integral reduces to
    // the gain per unit column density times the column.
    exponent += gain_coeff(photon.delta, spec, 1.0) * col_density;
  }
  if (exponent == 0.0) return true;
  const double w = photon.weight * std::exp(exponent);
  if (!(w < kWeightCap)) {
    photon.weight = kWeightCap;
    return false;
  }
  photon.weight = w;
  return true;
}

CollisionOutcome collide(const Photon& photon, const SpectralModel& spec,
                         PhaseFunction phase, Rng& rng) {
  const double beta = beta_inel(photon.delta, spec);
  const Vec3 new_dir = sample_phase_function(photon.dir, phase, rng);
  if (rng.uniform() < beta) return CollisionAntiStokes{new_dir};
  return CollisionElastic{new_dir};
}

bool russian_roulette(Photon& photon, const RunConfig& cfg, Rng& rng) {
  if (photon.weight >= cfg.w_min) return true;
  if (rng.uniform() < cfg.roulette_survive) {
    photon.weight /= cfg.roulette_survive;
    return true;
  }
  photon.alive = false;
  return false;
}

namespace {

void record_escape(Tally& tally, const RunConfig& cfg, const Photon& ph) {
  const int order = std::min(ph.order, cfg.max_order);
  const int bucket = Tally::order_bucket(ph.order);
  const double theta_pol = std::acos(std::clamp(ph.dir.x(), -1.0, 1.0));
  int bin = static_cast<int>(theta_pol / M_PI * cfg.n_theta_bins);
  bin = std::min(bin, cfg.n_theta_bins - 1);
  if (ph.channel == SpectralChannel::raman_elastic) {
    tally.escaped_elastic[order] += ph.weight;
    tally.escaped_elastic_count[order] += 1.0;
    tally.angular_elastic(bin, bucket) += ph.weight;
  } else {
    tally.escaped_anti_stokes[order] += ph.weight;
    tally.angular_anti_stokes(bin, bucket) += ph.weight;
  }
  const double cos_z = ph.dir.z();
  if (cos_z > std::cos(cfg.detector_cone_half_angle))
    tally.detector_cone[order] += ph.weight;
}

} // namespace

void trace(Photon ph, const Medium& medium, const SpectralModel& spec,
           const RunConfig& cfg, Rng& rng, Tally& tally) {
  while (ph.alive) {
    const FlightOutcome flight = sample_free_path(ph, medium, spec, rng);
    const Vec3 end = std::holds_alternative<FlightEscape>(flight)
                         ? std::get<FlightEscape>(flight).exit
                         : std::get<FlightCollision>(flight).at;
    const double s_len = (end - ph.pos).norm();
    if (!apply_gain(ph, ph.pos, s_len, medium, spec)) {
      tally.diverged = true;
      tally.truncated_weight += ph.weight;
      return;
    }
    if (std::holds_alternative<FlightEscape>(flight)) {
      record_escape(tally, cfg, ph);
      return;
    }
    ph.pos = std::get<FlightCollision>(flight).at;
    const CollisionOutcome col = collide(ph, spec, cfg.phase_function, rng);
    if (std::holds_alternative<CollisionAntiStokes>(col)) {
      // Converted light is off-resonant for the whole cloud: it flies
      // straight to the boundary and is tallied at its current order.
      ph.channel = SpectralChannel::anti_stokes;
      ph.dir = std::get<CollisionAntiStokes>(col).new_dir;
      record_escape(tally, cfg, ph);
      return;
    }
    ph.order += 1;
    if (ph.order > cfg.max_order) {
      tally.truncated_weight += ph.weight;
      return;
    }
    tally.collision_weight[ph.order] += ph.weight;
    ph.dir = std::get<CollisionElastic>(col).new_dir;
    if (!russian_roulette(ph, cfg, rng)) return;
  }
}

Tally run(const Medium& medium, const SpectralModel& spec,
          const RunConfig& cfg) {
  constexpr std::uint64_t kBlock = 4096;
  const std::uint64_t n = cfg.n_photons;
  const std::uint64_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<Tally> blocks(n_blocks);

  std::atomic<std::uint64_t> next_block{0};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      Tally local(cfg.max_order, cfg.n_theta_bins);
      const std::uint64_t lo = b * kBlock;
      const std::uint64_t hi = std::min(n, lo + kBlock);
      for (std::uint64_t i = lo; i < hi; ++i) {
        Rng rng = Rng::for_stream(cfg.seed, i);
        trace(emit_source(cfg, medium, rng), medium, spec, cfg, rng, local);
        ++local.photons_launched;
      }
      blocks[b] = std::move(local);
    }
  };

  const int n_workers = std::max(1, cfg.n_workers);
  if (n_workers == 1 || n_blocks <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Merge in block-index order: bitwise identical for any worker count.
  Tally total(cfg.max_order, cfg.n_theta_bins);
  for (const auto& blk : blocks)
    if (blk.escaped_elastic.size() > 0) total.merge(blk);
  return total;
}

} // namespace coldlase
