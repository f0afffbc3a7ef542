#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coldlase/analysis.hpp"

namespace coldlase {

enum class ExperimentKind { simulate, scan_spectrum, scan_threshold, validate };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fully resolved experiment description. Parsed from JSON; unknown keys
/// are rejected and every field has a documented default.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::simulate;
  RunSetup setup;
  std::string output_dir = "out";

  // Scan controls.
  ScanParam scan_param = ScanParam::pump_rabi;
  double scan_lo = 0.0;
  double scan_hi = 0.0;
  double scan_tol = 0.05;
  bool extrapolation_correction = true;
  std::vector<double> delta_c_grid;
  std::vector<double> b0_list;
  double observation_angle_rad = 0.7853981633974483; // 45 degrees

  std::vector<std::string> preset_notes; ///< fields that are artifact defaults
};

/// Parse a JSON config; empty text yields all defaults. Errors name the
/// offending key and the violated rule.
ExperimentConfig parse_config(const std::string& text);

/// Built-in presets: fig3-scan, fig5-b30, fig5-b50, letokhov-validate.
std::string preset_text(const std::string& name);
std::vector<std::string> preset_names();

/// Serialize the resolved config; re-parsing it reproduces the setup.
std::string echo_config(const ExperimentConfig& cfg);

/// Execute the configured experiment, writing result tables into
/// cfg.output_dir. Returns the process exit status (0 success,
/// 1 validation/divergence failure).
int run_experiment(const ExperimentConfig& cfg);

} // namespace coldlase
