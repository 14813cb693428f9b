#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "omkit/core_model.hpp"

namespace omkit {

// Experiment description as stored on disk. Frequencies are ordinary Hz and
// every key carries its unit; to_model() converts to the angular model types.

struct CavityConfig {
  double omega_o_hz = 0.0;
  double kappa_0_hz = 0.0;
  double kappa_ex_hz = 0.0;
  bool operator==(const CavityConfig&) const = default;
};

struct ModeConfig {
  std::string name;
  double omega_m_hz = 0.0;
  double gamma_m_hz = 0.0;
  double g0_hz = 0.0;
  // Displacement amplitude; thermal (2 n_th + 1)/2 from the environment when unset.
  std::optional<double> x_m;
  bool operator==(const ModeConfig&) const = default;
};

struct DriveConfig {
  std::optional<double> laser_hz;  // defaults to the cavity resonance
  double power_w = 0.0;
  double cal_hz = 0.0;
  double phi0_rad = 0.0;
  bool operator==(const DriveConfig&) const = default;
};

struct InterferometerConfig {
  double r = 0.0;
  double r_m = 1.0;
  std::optional<double> theta_rad;
  double l1_m = 0.0;
  double l2_m = 0.0;
  double n = 1.0;
  std::optional<double> phase_rad;  // fixed psi; exclusive with theta_rad
  bool operator==(const InterferometerConfig&) const = default;
};

struct EnvironmentConfig {
  double temperature_k = 295.0;
  bool operator==(const EnvironmentConfig&) const = default;
};

struct SweepConfig {
  double delta_start_hz = 0.0;
  double delta_stop_hz = 0.0;
  std::size_t points = 0;
  bool operator==(const SweepConfig&) const = default;
};

struct SpectrumConfig {
  double f_start_hz = 0.0;
  double f_step_hz = 0.0;
  std::size_t points = 0;
  double enbw_hz = 0.0;
  double noise_floor = 0.0;
  int averages = 100;
  bool noise = false;
  std::optional<double> delta_hz;  // detuning of a single synthesized trace
  bool operator==(const SpectrumConfig&) const = default;
};

struct ExperimentConfig {
  CavityConfig cavity;
  std::vector<ModeConfig> modes;  // 1 to 3
  DriveConfig drive;
  InterferometerConfig interferometer;
  EnvironmentConfig environment;
  SweepConfig sweep;
  std::optional<SpectrumConfig> spectrum;
  bool operator==(const ExperimentConfig&) const = default;
};

// Angular-unit view of a config, one mode selected.
struct ModelSetup {
  OpticalCavity cavity;
  Drive drive;
  MechanicalMode mode;
  Interferometer interferometer;
  Environment environment;
  std::vector<double> delta_grid;  // rad/s, sweep.points values
};

// Throws ConfigError carrying "line N" for syntax errors and the dotted field
// path for missing, mistyped, unknown or out-of-range entries.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

// Selects a mode by name or by 0-based index ("" = first mode).
std::size_t find_mode(const ExperimentConfig& config, std::string_view selector);
ModelSetup to_model(const ExperimentConfig& config, std::size_t mode_index = 0);

// Evenly spaced grid including both ends.
std::vector<double> linear_grid(double start, double stop, std::size_t points);

struct PhaseValue {
  std::string label;  // token as written, e.g. "0.77pi"
  double value = 0.0;  // rad
};

// Comma-separated phases in radians or multiples of pi: "0,0.77pi,-0.4pi,pi".
// Throws ConfigError on an empty list or a malformed token.
std::vector<PhaseValue> parse_phase_list(std::string_view text);

}  // namespace omkit
