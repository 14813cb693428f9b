#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "omkit/calibration.hpp"
#include "omkit/config.hpp"
#include "omkit/csv_io.hpp"
#include "omkit/fitting.hpp"

namespace omkit::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_no_convergence = 3, exit_data = 4 };

struct SweepEtaOutput {
  CsvTable table;                     // delta_hz, eta_g[phase], g0_measured_hz[phase], ...
  std::vector<std::string> skip_log;  // one line per skipped (delta, phase)
};

SweepEtaOutput sweep_eta(const ExperimentConfig& config, std::span<const PhaseValue> phases,
                         std::string_view mode = "");

// delta_hz, then reflection_exact / reflection_fano / residual per phase.
CsvTable reflection_curves(const ExperimentConfig& config, std::span<const PhaseValue> phases);

struct FitReport {
  nlohmann::json report;
  bool converged = false;
};

// Columns delta_hz, reflection and optionally sigma.
FitReport fit_reflection_table(const CsvTable& table, bool lorentzian, const FitOptions& nlls = {});

// Columns delta_hz, omega_eff_hz, gamma_eff_hz and optionally omega_sigma_hz,
// gamma_sigma_hz; empty cells drop that sample. Fixed cavity/drive values and
// the starting point come from the config.
FitReport fit_backaction_table(const CsvTable& table, const ExperimentConfig& config, std::string_view mode,
                               FitScaleMode scale_mode, const FitOptions& nlls = {});

// Trace for the configured spectrum grid at `delta_hz` (spectrum.delta_hz when unset).
SpectrumTrace synthesize_trace(const ExperimentConfig& config, std::string_view mode, std::uint64_t seed,
                               std::optional<double> phase = std::nullopt,
                               std::optional<double> delta_hz = std::nullopt);

nlohmann::json estimate_g0_report(const ExperimentConfig& config, const SpectrumTrace& trace,
                                  std::string_view mode);

// Synthesizes and estimates at every sweep detuning; failures are reported per point.
nlohmann::json estimate_g0_sweep(const ExperimentConfig& config, std::string_view mode, std::uint64_t seed,
                                 std::optional<double> phase = std::nullopt);

// Whole command line without the program name. Errors go to `err` and are
// mapped onto ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace omkit::cli
