#include "coldlase/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace coldlase {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

void reject_unknown(const json& obj, const std::string& scope,
                    const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key '" + scope + item.key() + "'");
  }
}

template <class T>
T get_or(const json& obj, const std::string& scope, const std::string& key,
         T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("type mismatch for key '" + scope + key + "'");
  }
}

void require(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw ConfigError("constraint violation on '" + key + "': " + rule);
}

void parse_medium(const json& j, ExperimentConfig& cfg) {
  const std::string scope = "medium.";
  reject_unknown(j, scope,
                 {"shape", "b0", "radius", "sigma_r", "cutoff_sigmas", "n0",
                  "channel_radius", "channel_radius_frac", "overlap_gain",
                  "trap_fraction"});
  Medium& m = cfg.setup.medium;

  const std::string shape = get_or<std::string>(j, scope, "shape", "uniform_sphere");
  require(shape == "uniform_sphere" || shape == "gaussian", "medium.shape",
          "must be uniform_sphere or gaussian");

  const double n0 = get_or<double>(j, scope, "n0", 1.0);
  require(n0 > 0, "medium.n0", "must be > 0");

  const bool has_b0 = j.contains("b0") && !j.at("b0").is_null();
  const bool has_size = (j.contains("radius") && !j.at("radius").is_null()) ||
                        (j.contains("sigma_r") && !j.at("sigma_r").is_null());
  require(!(has_b0 && has_size), "medium.b0",
          "b0 and an explicit size (radius / sigma_r) are mutually exclusive");

  const double cutoff_sigmas = get_or<double>(j, scope, "cutoff_sigmas", 4.0);
  require(cutoff_sigmas >= 3.0, "medium.cutoff_sigmas", "must be >= 3");

  // Sizes resolve from b0 at resonance: sigma0 = 1 at parse time is not
  // assumed; resolution happens after the spectral block below, so stash
  // the request. sigma0 is read first by the caller ordering in
  // parse_config, which parses spectral before medium.
  const double sigma0 = cfg.setup.spectral.sigma0;
  if (shape == "uniform_sphere") {
    double R = get_or<double>(j, scope, "radius", 0.0);
    if (has_b0) {
      const double b0v = get_or<double>(j, scope, "b0", 10.0);
      require(b0v >= 0, "medium.b0", "must be >= 0");
      R = b0v / (2.0 * n0 * sigma0);
    } else if (!has_size) {
      R = 10.0 / (2.0 * n0 * sigma0); // default b0 = 10
    }
    require(R > 0, "medium.radius", "must be > 0");
    m.cloud = CloudGeometry::uniform(R, n0);
  } else {
    double sr = get_or<double>(j, scope, "sigma_r", 0.0);
    if (has_b0) {
      const double b0v = get_or<double>(j, scope, "b0", 10.0);
      require(b0v >= 0, "medium.b0", "must be >= 0");
      sr = b0v / (std::sqrt(2.0 * kPi) * n0 * sigma0);
    } else if (!has_size) {
      sr = 10.0 / (std::sqrt(2.0 * kPi) * n0 * sigma0);
    }
    require(sr > 0, "medium.sigma_r", "must be > 0");
    m.cloud = CloudGeometry::gaussian(sr, n0, cutoff_sigmas);
  }

  const bool has_cr = j.contains("channel_radius") && !j.at("channel_radius").is_null();
  const bool has_crf =
      j.contains("channel_radius_frac") && !j.at("channel_radius_frac").is_null();
  require(!(has_cr && has_crf), "medium.channel_radius",
          "channel_radius and channel_radius_frac are mutually exclusive");
  if (has_crf) {
    const double frac = get_or<double>(j, scope, "channel_radius_frac", 0.0);
    require(frac >= 0, "medium.channel_radius_frac", "must be >= 0");
    m.channel.radius = frac * m.cloud.boundary_radius();
  } else {
    m.channel.radius = get_or<double>(j, scope, "channel_radius", 0.0);
    require(m.channel.radius >= 0, "medium.channel_radius", "must be >= 0");
  }

  m.overlap_gain = get_or<bool>(j, scope, "overlap_gain", false);
  m.trap_fraction = get_or<double>(j, scope, "trap_fraction", 1.0);
  require(m.trap_fraction >= 0 && m.trap_fraction <= 1.0,
          "medium.trap_fraction", "must be in [0, 1]");
}

void parse_spectral(const json& j, ExperimentConfig& cfg) {
  const std::string scope = "spectral.";
  reject_unknown(j, scope,
                 {"gamma", "sigma0", "rabi_2v", "delta_c", "gain_kappa",
                  "gain_width", "beta0", "beta_mode", "quasi_width", "gain_g0"});
  SpectralModel& s = cfg.setup.spectral;
  s.gamma = get_or<double>(j, scope, "gamma", 1.0);
  s.sigma0 = get_or<double>(j, scope, "sigma0", 1.0);
  s.rabi_2v = get_or<double>(j, scope, "rabi_2v", 0.0);
  s.delta_c = get_or<double>(j, scope, "delta_c", 0.0);
  s.gain_kappa = get_or<double>(j, scope, "gain_kappa", 0.0);
  s.gain_width = get_or<double>(j, scope, "gain_width", 1.0);
  s.beta0 = get_or<double>(j, scope, "beta0", 0.0);
  const std::string mode = get_or<std::string>(j, scope, "beta_mode", "constant");
  require(mode == "constant" || mode == "lorentzian", "spectral.beta_mode",
          "must be constant or lorentzian");
  s.beta_mode = mode == "constant" ? BetaMode::constant : BetaMode::lorentzian;
  s.quasi_width = get_or<double>(j, scope, "quasi_width", 1.0);
  s.gain_g0 = get_or<double>(j, scope, "gain_g0", -1.0);
  require(s.gamma > 0, "spectral.gamma", "must be > 0");
  require(s.sigma0 > 0, "spectral.sigma0", "must be > 0");
  require(s.beta0 >= 0 && s.beta0 <= 1, "spectral.beta0", "must be in [0, 1]");
  require(s.gain_kappa >= 0, "spectral.gain_kappa", "must be >= 0");
  require(s.gain_width > 0, "spectral.gain_width", "must be > 0");
  require(s.quasi_width > 0, "spectral.quasi_width", "must be > 0");
}

void parse_run(const json& j, ExperimentConfig& cfg) {
  const std::string scope = "run.";
  reject_unknown(j, scope,
                 {"photons", "max_order", "w_min", "roulette_survive",
                  "detector_cone_half_angle", "phase_function", "seed",
                  "source", "delta", "workers", "theta_bins"});
  RunConfig& r = cfg.setup.run;
  r.n_photons = get_or<std::uint64_t>(j, scope, "photons", 100000ull);
  require(r.n_photons >= 1, "run.photons", "must be >= 1");
  r.max_order = get_or<int>(j, scope, "max_order", 400);
  require(r.max_order >= 1, "run.max_order", "must be >= 1");
  r.w_min = get_or<double>(j, scope, "w_min", 1e-4);
  require(r.w_min > 0, "run.w_min", "must be > 0");
  r.roulette_survive = get_or<double>(j, scope, "roulette_survive", 0.1);
  require(r.roulette_survive > 0 && r.roulette_survive < 1,
          "run.roulette_survive", "must be in (0, 1)");
  r.detector_cone_half_angle =
      get_or<double>(j, scope, "detector_cone_half_angle", 0.1);
  require(r.detector_cone_half_angle > 0, "run.detector_cone_half_angle",
          "must be > 0");
  const std::string pf = get_or<std::string>(j, scope, "phase_function", "dipole");
  require(pf == "dipole" || pf == "isotropic", "run.phase_function",
          "must be dipole or isotropic");
  r.phase_function =
      pf == "dipole" ? PhaseFunction::dipole : PhaseFunction::isotropic;
  r.seed = get_or<std::uint64_t>(j, scope, "seed", 1ull);
  const std::string src =
      get_or<std::string>(j, scope, "source", "center_point_dipole");
  require(src == "center_point_dipole" || src == "channel_raman", "run.source",
          "must be center_point_dipole or channel_raman");
  r.source = src == "center_point_dipole" ? SourceKind::center_point_dipole
                                          : SourceKind::channel_raman;
  r.delta = get_or<double>(j, scope, "delta", 0.0);
  r.n_workers = get_or<int>(j, scope, "workers", 1);
  require(r.n_workers >= 1, "run.workers", "must be >= 1");
  r.n_theta_bins = get_or<int>(j, scope, "theta_bins", 18);
  require(r.n_theta_bins >= 1, "run.theta_bins", "must be >= 1");
}

void parse_scan(const json& j, ExperimentConfig& cfg) {
  const std::string scope = "scan.";
  reject_unknown(j, scope,
                 {"param", "bracket", "tol", "extrapolation_correction",
                  "delta_c_grid", "b0_list", "observation_angle_deg"});
  const std::string p = get_or<std::string>(j, scope, "param", "pump_rabi");
  require(p == "pump_rabi" || p == "gain_g0" || p == "cloud_radius",
          "scan.param", "must be pump_rabi, gain_g0 or cloud_radius");
  cfg.scan_param = p == "pump_rabi"
                       ? ScanParam::pump_rabi
                       : (p == "gain_g0" ? ScanParam::gain_g0
                                         : ScanParam::cloud_radius);
  const auto bracket =
      get_or<std::vector<double>>(j, scope, "bracket", {0.0, 0.0});
  require(bracket.size() == 2, "scan.bracket", "must be [lo, hi]");
  cfg.scan_lo = bracket[0];
  cfg.scan_hi = bracket[1];
  cfg.scan_tol = get_or<double>(j, scope, "tol", 0.05);
  require(cfg.scan_tol > 0, "scan.tol", "must be > 0");
  cfg.extrapolation_correction =
      get_or<bool>(j, scope, "extrapolation_correction", true);
  cfg.delta_c_grid = get_or<std::vector<double>>(j, scope, "delta_c_grid", {});
  cfg.b0_list = get_or<std::vector<double>>(j, scope, "b0_list", {});
  const double deg = get_or<double>(j, scope, "observation_angle_deg", 45.0);
  require(deg >= 0 && deg <= 180, "scan.observation_angle_deg",
          "must be in [0, 180]");
  cfg.observation_angle_rad = deg * kPi / 180.0;
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  if (!text.empty() && text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
  } else {
    j = json::object();
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(j, "",
                 {"experiment", "output_dir", "medium", "spectral", "run",
                  "scan"});

  ExperimentConfig cfg;
  const std::string exp = get_or<std::string>(j, "", "experiment", "simulate");
  if (exp == "simulate") cfg.experiment = ExperimentKind::simulate;
  else if (exp == "scan_spectrum") cfg.experiment = ExperimentKind::scan_spectrum;
  else if (exp == "scan_threshold") cfg.experiment = ExperimentKind::scan_threshold;
  else if (exp == "validate") cfg.experiment = ExperimentKind::validate;
  else
    throw ConfigError("constraint violation on 'experiment': must be "
                      "simulate, scan_spectrum, scan_threshold or validate");
  cfg.output_dir = get_or<std::string>(j, "", "output_dir", "out");

  // spectral first: sigma0 fixes the b0 -> size conversion.
  parse_spectral(j.contains("spectral") ? j.at("spectral") : json::object(), cfg);
  parse_medium(j.contains("medium") ? j.at("medium") : json::object(), cfg);
  parse_run(j.contains("run") ? j.at("run") : json::object(), cfg);
  parse_scan(j.contains("scan") ? j.at("scan") : json::object(), cfg);
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"fig3-scan", "fig5-b30", "fig5-b50", "letokhov-validate"};
}

std::string preset_text(const std::string& name) {
  if (name == "fig5-b30" || name == "fig5-b50") {
    json j = {
        {"experiment", "simulate"},
        {"medium",
         {{"shape", "uniform_sphere"},
          {"b0", name == "fig5-b30" ? 30.0 : 50.0},
          {"channel_radius_frac", 0.1}}},
        {"spectral",
         {{"rabi_2v", 30.0},
          {"gain_kappa", 1e-3},
          {"gain_width", 2.0},
          {"delta_c", 0.0}}},
        {"run",
         {{"photons", 30000},
          {"max_order", 600},
          {"phase_function", "dipole"},
          {"source", "center_point_dipole"}}},
    };
    return j.dump(2);
  }
  if (name == "fig3-scan") {
    json grid = json::array();
    for (int i = -10; i <= 10; ++i) grid.push_back(double(i));
    json j = {
        {"experiment", "scan_spectrum"},
        {"medium",
         {{"shape", "uniform_sphere"}, {"b0", 20.0}, {"overlap_gain", true}}},
        {"spectral",
         {{"rabi_2v", 30.0},
          {"gain_kappa", 2e-5},
          {"gain_width", 2.0},
          {"beta0", 0.02},
          {"beta_mode", "lorentzian"},
          {"quasi_width", 2.0}}},
        {"run", {{"photons", 160000}, {"max_order", 400}}},
        {"scan",
         {{"delta_c_grid", grid},
          {"b0_list", {1.0, 5.0, 10.0, 15.0, 20.0}},
          {"observation_angle_deg", 45.0}}},
    };
    return j.dump(2);
  }
  if (name == "letokhov-validate") {
    json j = {
        {"experiment", "scan_threshold"},
        {"medium",
         {{"shape", "uniform_sphere"}, {"b0", 40.0}, {"overlap_gain", true}}},
        {"run",
         {{"photons", 60000},
          {"max_order", 2000},
          {"phase_function", "isotropic"}}},
        {"scan",
         {{"param", "gain_g0"},
          {"bracket", {0.003, 0.02}},
          {"tol", 0.04},
          {"extrapolation_correction", true}}},
    };
    return j.dump(2);
  }
  throw ConfigError("unknown preset '" + name + "'");
}

namespace {

json echo_json(const ExperimentConfig& cfg) {
  const Medium& m = cfg.setup.medium;
  const SpectralModel& s = cfg.setup.spectral;
  const RunConfig& r = cfg.setup.run;
  json jm = {
      {"shape", m.cloud.shape == CloudShape::uniform_sphere ? "uniform_sphere"
                                                            : "gaussian"},
      {"n0", m.cloud.n0},
      {"channel_radius", m.channel.radius},
      {"overlap_gain", m.overlap_gain},
      {"trap_fraction", m.trap_fraction},
  };
  if (m.cloud.shape == CloudShape::uniform_sphere) {
    jm["radius"] = m.cloud.radius;
  } else {
    jm["sigma_r"] = m.cloud.sigma_r;
    jm["cutoff_sigmas"] = m.cloud.cutoff_r / m.cloud.sigma_r;
  }
  json js = {
      {"gamma", s.gamma},
      {"sigma0", s.sigma0},
      {"rabi_2v", s.rabi_2v},
      {"delta_c", s.delta_c},
      {"gain_kappa", s.gain_kappa},
      {"gain_width", s.gain_width},
      {"beta0", s.beta0},
      {"beta_mode", s.beta_mode == BetaMode::constant ? "constant" : "lorentzian"},
      {"quasi_width", s.quasi_width},
      {"gain_g0", s.gain_g0},
  };
  json jr = {
      {"photons", r.n_photons},
      {"max_order", r.max_order},
      {"w_min", r.w_min},
      {"roulette_survive", r.roulette_survive},
      {"detector_cone_half_angle", r.detector_cone_half_angle},
      {"phase_function",
       r.phase_function == PhaseFunction::dipole ? "dipole" : "isotropic"},
      {"seed", r.seed},
      {"source", r.source == SourceKind::center_point_dipole
                     ? "center_point_dipole"
                     : "channel_raman"},
      {"delta", r.delta},
      {"workers", r.n_workers},
      {"theta_bins", r.n_theta_bins},
  };
  json jscan = {
      {"param", to_string(cfg.scan_param)},
      {"bracket", {cfg.scan_lo, cfg.scan_hi}},
      {"tol", cfg.scan_tol},
      {"extrapolation_correction", cfg.extrapolation_correction},
      {"delta_c_grid", cfg.delta_c_grid},
      {"b0_list", cfg.b0_list},
      {"observation_angle_deg", cfg.observation_angle_rad * 180.0 / kPi},
  };
  const char* exp = "simulate";
  switch (cfg.experiment) {
    case ExperimentKind::simulate: exp = "simulate"; break;
    case ExperimentKind::scan_spectrum: exp = "scan_spectrum"; break;
    case ExperimentKind::scan_threshold: exp = "scan_threshold"; break;
    case ExperimentKind::validate: exp = "validate"; break;
  }
  return json{{"experiment", exp},
              {"output_dir", cfg.output_dir},
              {"medium", jm},
              {"spectral", js},
              {"run", jr},
              {"scan", jscan}};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int do_simulate(const ExperimentConfig& cfg) {
  const Tally tally = run(cfg.setup.medium, cfg.setup.spectral, cfg.setup.run);
  const StabilityReport rep = classify_stability(tally, cfg.setup.run);

  std::string csv = "order,elastic_weight,anti_stokes_weight,detector_cone_weight\n";
  for (int n = 0; n < tally.escaped_elastic.size(); ++n) {
    csv += std::to_string(n) + "," + fmt17(tally.escaped_elastic[n]) + "," +
           fmt17(tally.escaped_anti_stokes[n]) + "," +
           fmt17(tally.detector_cone[n]) + "\n";
  }
  const auto dir = std::filesystem::path(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "orders.csv", csv);

  json summary = {
      {"photons_launched", tally.photons_launched},
      {"escaped_elastic_total", tally.escaped_elastic.sum()},
      {"escaped_anti_stokes_total", tally.escaped_anti_stokes.sum()},
      {"detector_cone_total", tally.detector_cone.sum()},
      {"truncated_fraction", rep.truncated_fraction},
      {"amplification", rep.amplification},
      {"diverged", tally.diverged},
      {"q", rep.q},
      {"q_err", rep.q_err},
      {"verdict", to_string(rep.verdict)},
      {"seed", cfg.setup.run.seed},
      {"derived", {{"b0", b0(cfg.setup.medium, cfg.setup.spectral)}}},
      {"preset_notes", cfg.preset_notes},
      {"config", echo_json(cfg)},
  };
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int do_scan_spectrum(const ExperimentConfig& cfg) {
  std::vector<double> grid = cfg.delta_c_grid;
  if (grid.empty()) grid = {0.0};
  std::vector<double> b0s = cfg.b0_list;
  if (b0s.empty()) b0s = {b0(cfg.setup.medium, cfg.setup.spectral)};

  const auto rows =
      spectral_scan(cfg.setup, grid, b0s, cfg.observation_angle_rad);
  std::string csv = "delta_c,b0,elastic,anti_stokes,sum,diverged\n";
  for (const auto& row : rows) {
    csv += fmt17(row.delta_c) + "," + fmt17(row.b0) + "," + fmt17(row.elastic) +
           "," + fmt17(row.anti_stokes) + "," + fmt17(row.sum) + "," +
           (row.diverged ? "1" : "0") + "\n";
  }
  const auto dir = std::filesystem::path(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "spectrum.csv", csv);
  return 0;
}

int do_scan_threshold(const ExperimentConfig& cfg) {
  if (!(cfg.scan_lo < cfg.scan_hi))
    throw ConfigError("constraint violation on 'scan.bracket': lo < hi required");
  const ThresholdReport rep =
      threshold_scan(cfg.setup, cfg.scan_param, cfg.scan_lo, cfg.scan_hi,
                     cfg.scan_tol, cfg.extrapolation_correction);
  json j = {
      {"scan_param", to_string(rep.param)},
      {"critical_value", rep.critical_value},
      {"bracket", {rep.bracket_lo, rep.bracket_hi}},
      {"analytic_letokhov", rep.analytic_letokhov},
      {"relative_gap", rep.relative_gap},
      {"probes", rep.probes},
      {"clean", rep.clean},
      {"config", echo_json(cfg)},
  };
  const auto dir = std::filesystem::path(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "threshold.json", j.dump(2) + "\n");
  return 0;
}

int do_validate(const ExperimentConfig& cfg);

} // namespace

std::string echo_config(const ExperimentConfig& cfg) {
  return echo_json(cfg).dump(2);
}

int run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::simulate: return do_simulate(cfg);
    case ExperimentKind::scan_spectrum: return do_scan_spectrum(cfg);
    case ExperimentKind::scan_threshold: return do_scan_threshold(cfg);
    case ExperimentKind::validate: return do_validate(cfg);
  }
  return 2;
}

// ---------------------------------------------------------------------------
// Built-in validation suite: fast analytic and statistical self-checks.

namespace {

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

Check check_loss_identity() {
  Rng rng(7);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    SpectralModel m;
    m.rabi_2v = 60.0 * rng.uniform();
    m.delta_c = 10.0 * (rng.uniform() - 0.5);
    m.gain_kappa = 1e-2 * rng.uniform();
    m.beta0 = rng.uniform() * 0.9;
    m.beta_mode = rng.uniform() < 0.5 ? BetaMode::constant : BetaMode::lorentzian;
    const double delta = 10.0 * (rng.uniform() - 0.5);
    const double density = 2.0 * rng.uniform();
    const RegionKind region =
        rng.uniform() < 0.5 ? RegionKind::trap : RegionKind::gain_channel;
    const KineticLengths k = kinetic_lengths(delta, m, density, region);
    if (std::isfinite(k.l_ex_inv))
      worst = std::max(worst, std::abs(k.l_ls_inv - (k.l_ex_inv - k.l_sc_inv)));
  }
  return {"loss-length identity (1e4 random points)", worst <= 1e-12,
          "max residual " + fmt17(worst)};
}

Check check_conservation() {
  Medium medium;
  medium.cloud = CloudGeometry::uniform(5.0);
  SpectralModel spec;
  RunConfig rc;
  rc.n_photons = 20000;
  rc.seed = 11;
  const Tally t = run(medium, spec, rc);
  const double ratio =
      (t.escaped_total() + t.truncated_weight) / double(t.photons_launched);
  return {"weight conservation (passive b0=10 sphere)",
          std::abs(ratio - 1.0) < 1e-12, "escaped+truncated ratio " + fmt17(ratio)};
}

Check check_ballistic() {
  Medium medium;
  medium.cloud = CloudGeometry::uniform(2.0); // b0 = 4
  SpectralModel spec;
  RunConfig rc;
  rc.n_photons = 1; // photons traced manually below
  const int n = 200000;
  Tally tally(rc.max_order, rc.n_theta_bins);
  for (int i = 0; i < n; ++i) {
    Photon ph;
    ph.pos = Vec3(0, 0, -2.0);
    ph.dir = Vec3::UnitZ();
    Rng prng = Rng::for_stream(23, i);
    trace(ph, medium, spec, rc, prng, tally);
  }
  const double p = tally.escaped_elastic[0] / n;
  const double expected = std::exp(-4.0);
  const double sigma = std::sqrt(expected * (1 - expected) / n);
  const double dev = std::abs(p - expected) / sigma;
  return {"ballistic transmission e^-b0 (b0=4)", dev < 3.0,
          "deviation " + fmt17(dev) + " sigma"};
}

Check check_dipole_moment() {
  Rng rng(5);
  const int n = 1000000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = sample_dipole_direction(Vec3::UnitX(), rng);
    const double c = d.x();
    sum += c;
    sum2 += c * c;
  }
  const double mean2 = sum2 / n;
  const double sigma = std::sqrt((9.0 / 35.0 - 0.16) / n);
  const double dev = std::abs(mean2 - 0.4) / sigma;
  return {"dipole pattern second moment 2/5", dev < 3.0,
          "deviation " + fmt17(dev) + " sigma"};
}

Check check_roulette() {
  RunConfig rc;
  Rng rng(31);
  const int n = 1000000;
  const double w0 = 1e-5;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    Photon ph;
    ph.weight = w0;
    if (russian_roulette(ph, rc, rng)) sum += ph.weight;
  }
  const double mean = sum / n;
  // survival is Bernoulli(p) paying w0/p: variance w0^2 (1-p)/p
  const double sigma =
      w0 * std::sqrt((1 - rc.roulette_survive) / rc.roulette_survive / n);
  const double dev = std::abs(mean - w0) / sigma;
  return {"russian roulette unbiasedness", dev < 3.0,
          "deviation " + fmt17(dev) + " sigma"};
}

Check check_letokhov_formula() {
  const double pi = kPi;
  const bool a = std::abs(letokhov_radius(1, 1) - pi / std::sqrt(3.0)) < 1e-12;
  const bool b = std::abs(letokhov_radius(3, 1) - pi) < 1e-12;
  const bool c = std::abs(letokhov_radius(2, 4) - 2 * letokhov_radius(1, 2)) < 1e-12;
  return {"critical-radius formula", a && b && c, ""};
}

int do_validate(const ExperimentConfig&) {
  const Check checks[] = {
      check_loss_identity(),   check_letokhov_formula(), check_conservation(),
      check_ballistic(),       check_dipole_moment(),    check_roulette(),
  };
  bool all = true;
  for (const auto& c : checks) {
    std::printf("[%s] %s%s%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.detail.empty() ? "" : ": ", c.detail.c_str());
    all = all && c.pass;
  }
  return all ? 0 : 1;
}

} // namespace

} // namespace coldlase
