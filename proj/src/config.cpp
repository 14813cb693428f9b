#include "omkit/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "omkit/constants.hpp"
#include "omkit/errors.hpp"

namespace omkit {

namespace {

using nlohmann::json;

// Reads one JSON object, tracking the dotted path for diagnostics and
// rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object", path_);
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(const char* key) {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  const json& child(const char* key) {
    if (!has(key)) throw ConfigError(field(key) + ": missing required field", field(key));
    return node_.at(key);
  }

  double number(const char* key) {
    const json& v = child(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number", field(key));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key) + ": non-finite value", field(key));
    return x;
  }

  double number_or(const char* key, double fallback) { return has(key) ? number(key) : fallback; }

  std::optional<double> optional_number(const char* key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::size_t count(const char* key) {
    const json& v = child(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(field(key) + ": expected a non-negative integer", field(key));
    return v.get<std::size_t>();
  }

  bool boolean_or(const char* key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false", field(key));
    return v.get<bool>();
  }

  std::string string_or(const char* key, std::string fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string", field(key));
    return v.get<std::string>();
  }

  void check(bool ok, const char* key, const char* message) const {
    if (!ok) throw ConfigError(field(key) + ": " + message, field(key));
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) throw ConfigError(field(item.key()) + ": unknown field", field(item.key()));
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

CavityConfig read_cavity(ObjectReader in) {
  CavityConfig c;
  c.omega_o_hz = in.number("omega_o_hz");
  c.kappa_0_hz = in.number("kappa_0_hz");
  c.kappa_ex_hz = in.number("kappa_ex_hz");
  in.check(c.omega_o_hz > 0.0, "omega_o_hz", "must be > 0");
  in.check(c.kappa_0_hz >= 0.0, "kappa_0_hz", "must be >= 0");
  in.check(c.kappa_ex_hz > 0.0, "kappa_ex_hz", "must be > 0");
  in.finish();
  return c;
}

ModeConfig read_mode(ObjectReader in, std::size_t index) {
  ModeConfig m;
  m.name = in.string_or("name", "mode" + std::to_string(index + 1));
  m.omega_m_hz = in.number("omega_m_hz");
  m.gamma_m_hz = in.number("gamma_m_hz");
  m.g0_hz = in.number("g0_hz");
  m.x_m = in.optional_number("x_m");
  in.check(m.omega_m_hz > 0.0, "omega_m_hz", "must be > 0");
  in.check(m.gamma_m_hz > 0.0, "gamma_m_hz", "must be > 0");
  in.check(m.g0_hz >= 0.0, "g0_hz", "must be >= 0");
  in.finish();
  return m;
}

DriveConfig read_drive(ObjectReader in) {
  DriveConfig d;
  d.laser_hz = in.optional_number("laser_hz");
  d.power_w = in.number("power_w");
  d.cal_hz = in.number("cal_hz");
  d.phi0_rad = in.number("phi0_rad");
  in.check(!d.laser_hz || *d.laser_hz > 0.0, "laser_hz", "must be > 0");
  in.check(d.power_w >= 0.0, "power_w", "must be >= 0");
  in.check(d.cal_hz > 0.0, "cal_hz", "must be > 0");
  in.check(d.phi0_rad >= 0.0, "phi0_rad", "must be >= 0");
  in.finish();
  return d;
}

InterferometerConfig read_interferometer(ObjectReader in) {
  InterferometerConfig i;
  i.r = in.number_or("r", 0.0);
  i.r_m = in.number_or("r_m", 1.0);
  i.theta_rad = in.optional_number("theta_rad");
  i.l1_m = in.number_or("l1_m", 0.0);
  i.l2_m = in.number_or("l2_m", 0.0);
  i.n = in.number_or("n", 1.0);
  i.phase_rad = in.optional_number("phase_rad");
  in.check(i.r >= 0.0 && i.r < 1.0, "r", "must lie in [0, 1)");
  in.check(i.r_m >= 0.0 && i.r_m <= 1.0, "r_m", "must lie in [0, 1]");
  in.check(i.l1_m >= 0.0, "l1_m", "must be >= 0");
  in.check(i.l2_m >= 0.0, "l2_m", "must be >= 0");
  in.check(i.n > 0.0, "n", "must be > 0");
  in.check(!(i.theta_rad && i.phase_rad), "phase_rad", "give either theta_rad or phase_rad, not both");
  in.finish();
  return i;
}

EnvironmentConfig read_environment(ObjectReader in) {
  EnvironmentConfig e;
  e.temperature_k = in.number_or("temperature_k", 295.0);
  in.check(e.temperature_k > 0.0, "temperature_k", "must be > 0");
  in.finish();
  return e;
}

SweepConfig read_sweep(ObjectReader in) {
  SweepConfig s;
  s.delta_start_hz = in.number("delta_start_hz");
  s.delta_stop_hz = in.number("delta_stop_hz");
  s.points = in.count("points");
  in.check(s.points >= 2, "points", "must be >= 2");
  in.finish();
  return s;
}

SpectrumConfig read_spectrum(ObjectReader in) {
  SpectrumConfig s;
  s.f_start_hz = in.number("f_start_hz");
  s.f_step_hz = in.number("f_step_hz");
  s.points = in.count("points");
  s.enbw_hz = in.number("enbw_hz");
  s.noise_floor = in.number_or("noise_floor", 0.0);
  s.averages = static_cast<int>(in.has("averages") ? in.count("averages") : 100);
  s.noise = in.boolean_or("noise", false);
  s.delta_hz = in.optional_number("delta_hz");
  in.check(s.f_step_hz > 0.0, "f_step_hz", "must be > 0");
  in.check(s.points >= 2, "points", "must be >= 2");
  in.check(s.enbw_hz > 0.0, "enbw_hz", "must be > 0");
  in.check(s.noise_floor >= 0.0, "noise_floor", "must be >= 0");
  in.check(s.averages >= 1, "averages", "must be >= 1");
  in.finish();
  return s;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("config line " + std::to_string(line) + ": " + e.what());
  }

  ObjectReader in(root, "");
  ExperimentConfig config;
  config.cavity = read_cavity(ObjectReader(in.child("cavity"), "cavity"));

  const json& modes = in.child("modes");
  if (!modes.is_array()) throw ConfigError("modes: expected an array", "modes");
  if (modes.empty() || modes.size() > 3) throw ConfigError("modes: expected 1 to 3 modes", "modes");
  for (std::size_t i = 0; i < modes.size(); ++i)
    config.modes.push_back(read_mode(ObjectReader(modes[i], "modes[" + std::to_string(i) + "]"), i));

  config.drive = read_drive(ObjectReader(in.child("drive"), "drive"));
  if (in.has("interferometer"))
    config.interferometer = read_interferometer(ObjectReader(in.child("interferometer"), "interferometer"));
  if (in.has("environment"))
    config.environment = read_environment(ObjectReader(in.child("environment"), "environment"));
  config.sweep = read_sweep(ObjectReader(in.child("sweep"), "sweep"));
  if (in.has("spectrum")) config.spectrum = read_spectrum(ObjectReader(in.child("spectrum"), "spectrum"));
  in.finish();

  // Whatever the per-field checks missed, the model records catch.
  for (std::size_t i = 0; i < config.modes.size(); ++i) {
    try {
      to_model(config, i);
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  root["cavity"] = {{"omega_o_hz", c.cavity.omega_o_hz},
                    {"kappa_0_hz", c.cavity.kappa_0_hz},
                    {"kappa_ex_hz", c.cavity.kappa_ex_hz}};
  root["modes"] = json::array();
  for (const auto& m : c.modes) {
    json jm = {{"name", m.name}, {"omega_m_hz", m.omega_m_hz}, {"gamma_m_hz", m.gamma_m_hz}, {"g0_hz", m.g0_hz}};
    if (m.x_m) jm["x_m"] = *m.x_m;
    root["modes"].push_back(jm);
  }
  root["drive"] = {{"laser_hz", optional_json(c.drive.laser_hz)},
                   {"power_w", c.drive.power_w},
                   {"cal_hz", c.drive.cal_hz},
                   {"phi0_rad", c.drive.phi0_rad}};
  const auto& i = c.interferometer;
  root["interferometer"] = {{"r", i.r},       {"r_m", i.r_m}, {"theta_rad", optional_json(i.theta_rad)},
                            {"l1_m", i.l1_m}, {"l2_m", i.l2_m}, {"n", i.n},
                            {"phase_rad", optional_json(i.phase_rad)}};
  root["environment"] = {{"temperature_k", c.environment.temperature_k}};
  root["sweep"] = {{"delta_start_hz", c.sweep.delta_start_hz},
                   {"delta_stop_hz", c.sweep.delta_stop_hz},
                   {"points", c.sweep.points}};
  if (c.spectrum) {
    const auto& s = *c.spectrum;
    root["spectrum"] = {{"f_start_hz", s.f_start_hz}, {"f_step_hz", s.f_step_hz}, {"points", s.points},
                        {"enbw_hz", s.enbw_hz},       {"noise_floor", s.noise_floor}, {"averages", s.averages},
                        {"noise", s.noise},           {"delta_hz", optional_json(s.delta_hz)}};
  }
  return root.dump(2) + "\n";
}

std::size_t find_mode(const ExperimentConfig& config, std::string_view selector) {
  if (selector.empty()) return 0;
  for (std::size_t i = 0; i < config.modes.size(); ++i)
    if (config.modes[i].name == selector) return i;
  std::size_t index = 0;
  const auto [end, ec] = std::from_chars(selector.data(), selector.data() + selector.size(), index);
  if (ec == std::errc() && end == selector.data() + selector.size() && index < config.modes.size()) return index;
  throw ConfigError("no mode named or numbered '" + std::string(selector) + "'", "modes");
}

ModelSetup to_model(const ExperimentConfig& c, std::size_t mode_index) {
  if (mode_index >= c.modes.size()) throw ConfigError("mode index out of range", "modes");
  ModelSetup m;
  m.cavity = {angular(c.cavity.omega_o_hz), angular(c.cavity.kappa_0_hz), angular(c.cavity.kappa_ex_hz)};
  m.drive = {angular(c.drive.laser_hz.value_or(c.cavity.omega_o_hz)), c.drive.power_w, angular(c.drive.cal_hz),
             c.drive.phi0_rad};
  m.environment = {c.environment.temperature_k};

  const ModeConfig& mc = c.modes[mode_index];
  const double omega_m = angular(mc.omega_m_hz);
  if (mc.x_m) {
    m.mode = {omega_m, angular(mc.gamma_m_hz), angular(mc.g0_hz), complex(*mc.x_m, 0.0)};
  } else {
    m.mode = MechanicalMode::thermal(omega_m, angular(mc.gamma_m_hz), angular(mc.g0_hz),
                                     thermal_occupation(m.environment, omega_m));
  }

  const auto& ic = c.interferometer;
  m.interferometer = {ic.r, ic.r_m, ic.theta_rad.value_or(0.0), ic.l1_m, ic.l2_m, ic.n, ic.phase_rad};

  m.cavity.validate();
  m.drive.validate();
  m.mode.validate();
  m.interferometer.validate();
  m.environment.validate();

  m.delta_grid = linear_grid(angular(c.sweep.delta_start_hz), angular(c.sweep.delta_stop_hz), c.sweep.points);
  return m;
}

std::vector<double> linear_grid(double start, double stop, std::size_t points) {
  if (points < 2) throw InvalidParameter("linear_grid: need at least 2 points");
  std::vector<double> grid(points);
  const double step = (stop - start) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = start + static_cast<double>(i) * step;
  grid.back() = stop;
  return grid;
}

std::vector<PhaseValue> parse_phase_list(std::string_view text) {
  std::vector<PhaseValue> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string token(text.substr(pos, comma - pos));
    token.erase(std::remove_if(token.begin(), token.end(), [](unsigned char ch) { return std::isspace(ch); }),
                token.end());
    pos = comma + 1;
    if (token.empty()) {
      if (comma == text.size() && out.empty() && text.find_first_not_of(" \t") == std::string_view::npos) break;
      throw ConfigError("phase list: empty entry in '" + std::string(text) + "'", "phase");
    }

    std::string number = token;
    double factor = 1.0;
    if (number.size() >= 2 && number.compare(number.size() - 2, 2, "pi") == 0) {
      number.erase(number.size() - 2);
      factor = constants::pi;
      if (number.empty() || number == "+") number = "1";
      if (number == "-") number = "-1";
    }
    if (!number.empty() && number.front() == '+') number.erase(0, 1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec != std::errc() || end != number.data() + number.size() || !std::isfinite(value))
      throw ConfigError("phase list: cannot parse '" + token + "'", "phase");
    out.push_back({token, value * factor});
  }
  if (out.empty()) throw ConfigError("phase list is empty", "phase");
  return out;
}

}  // namespace omkit
