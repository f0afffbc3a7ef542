#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "coldlase/config.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw coldlase::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> photons;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--preset", opts.preset,
                  "named preset (fig3-scan, fig5-b30, fig5-b50, letokhov-validate)");
  cmd->add_option("--seed", opts.seed, "master seed override");
  cmd->add_option("--photons", opts.photons, "photon count override");
  cmd->add_option("--out", opts.out, "output directory override");
}

coldlase::ExperimentConfig resolve(const CommonOpts& opts,
                                   coldlase::ExperimentKind subcmd_kind) {
  std::string text;
  std::vector<std::string> notes;
  if (!opts.preset.empty()) {
    text = coldlase::preset_text(opts.preset);
    notes.push_back("preset '" + opts.preset +
                    "': channel radius, gain calibration (gain_kappa, "
                    "gain_width) and photon budget are artifact defaults, "
                    "not published values");
    if (!opts.config_path.empty())
      throw coldlase::ConfigError("--config and --preset are mutually exclusive");
  } else if (!opts.config_path.empty()) {
    text = read_file(opts.config_path);
  }
  auto cfg = coldlase::parse_config(text);
  cfg.preset_notes = notes;
  // The subcommand wins over the config's experiment field.
  cfg.experiment = subcmd_kind;
  if (opts.seed) cfg.setup.run.seed = *opts.seed;
  if (opts.photons) cfg.setup.run.n_photons = *opts.photons;
  if (opts.out) cfg.output_dir = *opts.out;
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo photon transport in an amplifying cold-atom cloud"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto* sim = app.add_subcommand("simulate", "single run: per-order intensity tables");
  auto* spec = app.add_subcommand("scan-spectrum", "intensity vs control detuning and b0");
  auto* thr = app.add_subcommand("scan-threshold", "bisect the instability threshold");
  auto* val = app.add_subcommand("validate", "run the built-in self-check suite");
  for (auto* cmd : {sim, spec, thr, val}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  using coldlase::ExperimentKind;
  ExperimentKind kind = ExperimentKind::simulate;
  if (spec->parsed()) kind = ExperimentKind::scan_spectrum;
  if (thr->parsed()) kind = ExperimentKind::scan_threshold;
  if (val->parsed()) kind = ExperimentKind::validate;

  try {
    return coldlase::run_experiment(resolve(opts, kind));
  } catch (const coldlase::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
