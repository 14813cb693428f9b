#include "omkit/cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "omkit/constants.hpp"
#include "omkit/errors.hpp"
#include "omkit/interferometer.hpp"

namespace omkit::cli {

namespace {

using nlohmann::json;

json param_block(const FitResult& fit, const std::vector<std::pair<std::string, double>>& rename) {
  json params = json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    std::string name = fit.names[i];
    double scale = 1.0;
    for (const auto& [from_to, s] : rename) {
      const auto eq = from_to.find('=');
      if (from_to.substr(0, eq) == name) {
        name = from_to.substr(eq + 1);
        scale = s;
      }
    }
    params[name] = {{"value", fit.params[i] * scale}, {"sigma", fit.sigma(fit.names[i]) * std::abs(scale)}};
  }
  return params;
}

json fit_json(const std::string& model, const FitResult& fit, json params, std::size_t points) {
  return {{"model", model},
          {"params", std::move(params)},
          {"residual_norm", fit.residual_norm},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"points", points},
          {"warnings", fit.warnings}};
}

std::size_t require_column(const std::optional<std::size_t>& col, const char* name) {
  if (!col) throw DataError(std::string("input CSV: missing column '") + name + "'", 1);
  return *col;
}

Interferometer with_phase(Interferometer interf, std::optional<double> phase) {
  if (phase) interf.phase = *phase;
  return interf;
}

json estimate_json(const G0Estimate& est, const MechanicalMode& mode) {
  return {{"g0_hz", hertz(est.g0)},
          {"g0_true_hz", hertz(mode.g0)},
          {"relative_error", mode.g0 > 0.0 ? est.g0 / mode.g0 - 1.0 : 0.0},
          {"s_mech_peak", est.s_mech_peak},
          {"s_cal_peak", est.s_cal_peak},
          {"gamma_m_hz", hertz(est.gamma_m_used)},
          {"n_th", est.n_th_used},
          {"fitted_center_hz", est.fitted_center},
          {"fitted_linewidth_hz", est.fitted_linewidth}};
}

G0Estimate estimate_for(const ModelSetup& setup, const SpectrumTrace& trace) {
  return estimate_g0(trace, setup.mode.omega_m, setup.drive.omega_c, setup.mode.gamma_m, setup.drive.phi0,
                     thermal_occupation(setup.environment, setup.mode.omega_m));
}

const SpectrumConfig& spectrum_of(const ExperimentConfig& config) {
  if (!config.spectrum) throw ConfigError("spectrum: section required for synthesis", "spectrum");
  return *config.spectrum;
}

void emit(const std::string& path, std::ostream& out, const std::string& content) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write '" + path + "'");
  file << content;
}

std::string csv_text(const CsvTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

}  // namespace

SweepEtaOutput sweep_eta(const ExperimentConfig& config, std::span<const PhaseValue> phases, std::string_view mode) {
  if (phases.empty()) throw ConfigError("phase list is empty", "phase");
  const ModelSetup setup = to_model(config, find_mode(config, mode));
  const std::size_t n = setup.delta_grid.size();

  SweepEtaOutput out;
  out.table.header.push_back("delta_hz");
  out.table.rows.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) out.table.rows[i].push_back(hertz(setup.delta_grid[i]));

  for (const PhaseValue& phase : phases) {
    out.table.header.push_back("eta_g[" + phase.label + "]");
    out.table.header.push_back("g0_measured_hz[" + phase.label + "]");
    const Interferometer interf = with_phase(setup.interferometer, phase.value);
    const BiasSweep sweep =
        g0_bias_sweep(setup.cavity, setup.drive, setup.mode, interf, setup.delta_grid, setup.mode.g0);
    // Both lists follow grid order, so walk them side by side.
    std::size_t p = 0, s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& row = out.table.rows[i];
      if (p < sweep.points.size() && sweep.points[p].delta == setup.delta_grid[i]) {
        row.push_back(sweep.points[p].eta_g);
        row.push_back(hertz(sweep.points[p].g0_measured));
        ++p;
      } else {
        row.push_back(std::nullopt);
        row.push_back(std::nullopt);
        const std::string reason = s < sweep.skipped.size() ? sweep.skipped[s++].reason : "skipped";
        out.skip_log.push_back("delta_hz=" + format_number(hertz(setup.delta_grid[i])) + " phase=" + phase.label +
                               ": " + reason);
      }
    }
  }
  return out;
}

CsvTable reflection_curves(const ExperimentConfig& config, std::span<const PhaseValue> phases) {
  if (phases.empty()) throw ConfigError("phase list is empty", "phase");
  const ModelSetup setup = to_model(config, 0);
  const std::size_t n = setup.delta_grid.size();
  const double kappa = setup.cavity.kappa();

  CsvTable table;
  table.header.push_back("delta_hz");
  table.rows.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) table.rows[i].push_back(hertz(setup.delta_grid[i]));

  for (const PhaseValue& phase : phases) {
    table.header.push_back("reflection_exact[" + phase.label + "]");
    table.header.push_back("reflection_fano[" + phase.label + "]");
    table.header.push_back("residual[" + phase.label + "]");
    const Interferometer interf = with_phase(setup.interferometer, phase.value);
    const FanoIdentification id = fano_identification(setup.cavity, setup.drive, interf);
    // The detuning-odd term of |A|^2 carries -q, so the lineshape is evaluated
    // with that sign; the residual is then |s0|^2 t^4 sin^2 psi plus the
    // approximation error of the identified A.
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = setup.delta_grid[i];
      const double exact = reflection_exact(setup.cavity, setup.drive, interf, delta);
      const double fano = fano_reflection(delta, id.h, id.amplitude, -id.q, kappa);
      table.rows[i].insert(table.rows[i].end(), {exact, fano, exact - fano});
    }
  }
  return table;
}

FitReport fit_reflection_table(const CsvTable& table, bool lorentzian, const FitOptions& nlls) {
  const std::size_t xcol = require_column(table.column("delta_hz"), "delta_hz");
  const std::size_t ycol = require_column(table.column("reflection"), "reflection");
  const auto scol = table.column("sigma");
  std::vector<double> x, y, sigma;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (!row[xcol] || !row[ycol] || (scol && !row[*scol]))
      throw DataError("line " + std::to_string(table.lines[i]) + ": missing value", table.lines[i]);
    if (scol && !(*row[*scol] > 0.0))
      throw DataError("line " + std::to_string(table.lines[i]) + ": sigma must be > 0", table.lines[i]);
    x.push_back(*row[xcol]);
    y.push_back(*row[ycol]);
    if (scol) sigma.push_back(*row[*scol]);
  }
  FanoFitOptions options;
  options.sigma = sigma;
  options.nlls = nlls;
  const FitResult fit = lorentzian ? fit_lorentzian(x, y, std::nullopt, options) : fit_fano(x, y, std::nullopt, options);
  json params = param_block(fit, {{"kappa=kappa_hz", 1.0}, {"delta0=delta0_hz", 1.0}});
  return {fit_json(lorentzian ? "lorentz" : "fano", fit, std::move(params), x.size()), fit.converged};
}

FitReport fit_backaction_table(const CsvTable& table, const ExperimentConfig& config, std::string_view mode,
                               FitScaleMode scale_mode, const FitOptions& nlls) {
  const ModelSetup setup = to_model(config, find_mode(config, mode));
  const std::size_t dcol = require_column(table.column("delta_hz"), "delta_hz");
  const auto ocol = table.column("omega_eff_hz");
  const auto gcol = table.column("gamma_eff_hz");
  if (!ocol && !gcol) throw DataError("input CSV: need omega_eff_hz and/or gamma_eff_hz columns", 1);
  const auto osig = table.column("omega_sigma_hz");
  const auto gsig = table.column("gamma_sigma_hz");

  std::vector<BackactionSample> freq, width;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.lines[i];
    if (!row[dcol]) throw DataError("line " + std::to_string(line) + ": missing delta_hz", line);
    const double delta = angular(*row[dcol]);
    auto sigma_of = [&](const std::optional<std::size_t>& col) {
      if (!col || !row[*col]) return 1.0;
      if (!(*row[*col] > 0.0)) throw DataError("line " + std::to_string(line) + ": sigma must be > 0", line);
      return angular(*row[*col]);
    };
    if (ocol && row[*ocol]) freq.push_back({delta, angular(*row[*ocol]), sigma_of(osig)});
    if (gcol && row[*gcol]) width.push_back({delta, angular(*row[*gcol]), sigma_of(gsig)});
  }

  const BackactionFixed fixed{setup.cavity.kappa(), setup.cavity.kappa_ex, setup.drive.power, setup.drive.omega_L};
  const BackactionGuess guess{setup.mode.omega_m, setup.mode.gamma_m, setup.mode.g0};
  BackactionFitOptions options;
  options.scale_mode = scale_mode;
  options.nlls = nlls;
  const FitResult fit = fit_backaction(freq, width, fixed, guess, options);
  const double to_hz = 1.0 / constants::two_pi;
  json params = param_block(fit, {{"omega_m=omega_m_hz", to_hz},
                                  {"gamma_m=gamma_m_hz", to_hz},
                                  {"g0=g0_hz", to_hz},
                                  {"g0_sq_power=g0_sq_power_hz2_w", to_hz * to_hz}});
  return {fit_json("backaction", fit, std::move(params), freq.size() + width.size()), fit.converged};
}

SpectrumTrace synthesize_trace(const ExperimentConfig& config, std::string_view mode, std::uint64_t seed,
                               std::optional<double> phase, std::optional<double> delta_hz) {
  const SpectrumConfig& sc = spectrum_of(config);
  if (!delta_hz) delta_hz = sc.delta_hz;
  if (!delta_hz) throw ConfigError("spectrum.delta_hz: detuning required for a single trace", "spectrum.delta_hz");
  const ModelSetup setup = to_model(config, find_mode(config, mode));
  SynthesisOptions options;
  options.bin_noise = sc.noise;
  options.averages = sc.averages;
  return synthesize_psd(setup.cavity, setup.drive, setup.mode, with_phase(setup.interferometer, phase),
                        setup.environment, angular(*delta_hz), {sc.f_start_hz, sc.f_step_hz, sc.points, sc.enbw_hz},
                        sc.noise_floor, seed, options);
}

json estimate_g0_report(const ExperimentConfig& config, const SpectrumTrace& trace, std::string_view mode) {
  const ModelSetup setup = to_model(config, find_mode(config, mode));
  json report = estimate_json(estimate_for(setup, trace), setup.mode);
  report["mode"] = config.modes[find_mode(config, mode)].name;
  return report;
}

json estimate_g0_sweep(const ExperimentConfig& config, std::string_view mode, std::uint64_t seed,
                       std::optional<double> phase) {
  const std::size_t index = find_mode(config, mode);
  const ModelSetup setup = to_model(config, index);
  json points = json::array();
  for (std::size_t i = 0; i < setup.delta_grid.size(); ++i) {
    const double delta_hz = hertz(setup.delta_grid[i]);
    json entry = {{"delta_hz", delta_hz}};
    try {
      const SpectrumTrace trace = synthesize_trace(config, mode, seed + i, phase, delta_hz);
      entry.update(estimate_json(estimate_for(setup, trace), setup.mode));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      entry["error"] = e.what();
    }
    points.push_back(std::move(entry));
  }
  return {{"mode", config.modes[index].name}, {"seed", seed}, {"points", std::move(points)}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optomechanical calibration and lineshape toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, phase_text, mode, input_path;
  std::uint64_t seed = 0;
  bool sweep = false, synthesize = false, coupled = false;
  auto add_config = [&](CLI::App* cmd) { cmd->add_option("--config", config_path, "experiment JSON")->required(); };

  auto* sweep_cmd = app.add_subcommand("sweep-eta", "eta_g and g0_measured over the detuning sweep");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--phase", phase_text, "phases, e.g. 0,0.77pi,-0.77pi")->required();
  sweep_cmd->add_option("--out", out_path, "CSV output (stdout by default)");
  sweep_cmd->add_option("--mode", mode, "mechanical mode name or index");

  auto* refl_cmd = app.add_subcommand("reflection", "exact and lineshape reflection curves");
  add_config(refl_cmd);
  refl_cmd->add_option("--phase", phase_text, "phases")->required();
  refl_cmd->add_option("--out", out_path, "CSV output");

  std::string fit_kind;
  auto* fit_cmd = app.add_subcommand("fit", "fit a CSV and print a JSON report");
  fit_cmd->add_option("kind", fit_kind, "fano | lorentz | backaction")
      ->required()
      ->check(CLI::IsMember({"fano", "lorentz", "backaction"}));
  fit_cmd->add_option("--input", input_path, "input CSV")->required();
  fit_cmd->add_option("--config", config_path, "experiment JSON (backaction only)");
  fit_cmd->add_option("--out", out_path, "JSON output");
  fit_cmd->add_option("--mode", mode, "mechanical mode (backaction)");
  fit_cmd->add_flag("--coupled", coupled, "fit g0^2 P instead of g0 (backaction)");
  FitOptions fit_options;
  fit_cmd->add_option("--max-iterations", fit_options.max_iterations, "iteration cap")->check(CLI::PositiveNumber);

  auto* est_cmd = app.add_subcommand("estimate-g0", "calibration-tone estimate of g0");
  add_config(est_cmd);
  est_cmd->add_option("--input", input_path, "trace CSV");
  est_cmd->add_flag("--synthesize", synthesize, "estimate from a synthesized trace");
  est_cmd->add_flag("--sweep", sweep, "synthesize and estimate over the sweep grid");
  est_cmd->add_option("--seed", seed, "noise seed");
  est_cmd->add_option("--phase", phase_text, "single interferometer phase override");
  est_cmd->add_option("--mode", mode, "mechanical mode");
  est_cmd->add_option("--out", out_path, "JSON output");

  auto* syn_cmd = app.add_subcommand("synthesize", "write a synthesized PSD trace");
  add_config(syn_cmd);
  syn_cmd->add_option("--seed", seed, "noise seed");
  syn_cmd->add_option("--phase", phase_text, "single interferometer phase override");
  syn_cmd->add_option("--mode", mode, "mechanical mode");
  syn_cmd->add_option("--out", out_path, "trace CSV output");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  auto single_phase = [&]() -> std::optional<double> {
    if (phase_text.empty()) return std::nullopt;
    const auto phases = parse_phase_list(phase_text);
    if (phases.size() != 1) throw ConfigError("--phase takes a single value here", "phase");
    return phases.front().value;
  };

  try {
    if (sweep_cmd->parsed()) {
      const auto result = sweep_eta(load_config(config_path), parse_phase_list(phase_text), mode);
      emit(out_path, out, csv_text(result.table));
      if (!result.skip_log.empty()) {
        std::string log;
        for (const auto& line : result.skip_log) log += line + '\n';
        if (!out_path.empty() && out_path != "-")
          emit(out_path + ".skipped.log", out, log);
        else
          err << log;
      }
      return exit_ok;
    }
    if (refl_cmd->parsed()) {
      emit(out_path, out, csv_text(reflection_curves(load_config(config_path), parse_phase_list(phase_text))));
      return exit_ok;
    }
    if (fit_cmd->parsed()) {
      const CsvTable table = read_csv_file(input_path);
      FitReport report;
      if (fit_kind == "backaction") {
        if (config_path.empty()) throw ConfigError("fit backaction: --config is required", "config");
        report = fit_backaction_table(table, load_config(config_path), mode,
                                      coupled ? FitScaleMode::coupled : FitScaleMode::absolute, fit_options);
      } else {
        report = fit_reflection_table(table, fit_kind == "lorentz", fit_options);
      }
      emit(out_path, out, report.report.dump(2) + "\n");
      if (!report.converged) {
        err << "error: fit did not converge\n";
        return exit_no_convergence;
      }
      return exit_ok;
    }
    if (est_cmd->parsed()) {
      const ExperimentConfig config = load_config(config_path);
      const int sources = (input_path.empty() ? 0 : 1) + (synthesize ? 1 : 0) + (sweep ? 1 : 0);
      if (sources != 1) throw ConfigError("estimate-g0: give exactly one of --input, --synthesize, --sweep");
      json report;
      if (sweep) {
        report = estimate_g0_sweep(config, mode, seed, single_phase());
      } else {
        const SpectrumTrace trace =
            synthesize ? synthesize_trace(config, mode, seed, single_phase()) : read_trace_file(input_path);
        report = estimate_g0_report(config, trace, mode);
      }
      emit(out_path, out, report.dump(2) + "\n");
      return exit_ok;
    }
    if (syn_cmd->parsed()) {
      std::ostringstream os;
      write_trace(os, synthesize_trace(load_config(config_path), mode, seed, single_phase()));
      emit(out_path, out, os.str());
      return exit_ok;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const InvalidParameter& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const UnderResolved& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << '\n';
    return e.kind() == FitError::Kind::bad_input || e.kind() == FitError::Kind::underdetermined ? exit_data
                                                                                                : exit_no_convergence;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_failure;
}

}  // namespace omkit::cli
