#include "omkit/cli_commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "omkit/backaction.hpp"
#include "omkit/errors.hpp"
#include "omkit/fitting.hpp"
#include "support.hpp"

using namespace omkit;
namespace fs = std::filesystem;

#ifndef OMKIT_CONFIG_DIR
#error "OMKIT_CONFIG_DIR must point at the configs directory"
#endif

namespace {

const fs::path kConfig = fs::path(OMKIT_CONFIG_DIR) / "interferometer_sweep.json";

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("omkit_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

ExperimentConfig reference() { return load_config(kConfig); }

std::string with_replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("config parses and converts to angular units") {
  const ExperimentConfig c = reference();
  REQUIRE(c.modes.size() == 2);
  const ModelSetup m = to_model(c, 0);
  CHECK(m.cavity.omega_o == doctest::Approx(test::tp * 195.55e12));
  CHECK(m.drive.omega_L == m.cavity.omega_o);
  CHECK(m.mode.g0 == doctest::Approx(test::tp * 452e3));
  CHECK(std::norm(m.mode.x_m) == doctest::Approx(thermal_occupation({295.0}, m.mode.omega_m) + 0.5));
  CHECK(m.delta_grid.size() == 401);
  CHECK(m.delta_grid.front() == doctest::Approx(-test::tp * 4e9));
  CHECK(m.delta_grid.back() == doctest::Approx(test::tp * 4e9));
  CHECK(find_mode(c, "mode1") == 1);
  CHECK(find_mode(c, "1") == 1);
  CHECK_THROWS_AS(find_mode(c, "mode7"), ConfigError);
}

TEST_CASE("config round trip") {
  const ExperimentConfig a = reference();
  const std::string text = serialize_config(a);
  const ExperimentConfig b = parse_config(text);
  CHECK(a == b);
  CHECK(serialize_config(b) == text);
}

TEST_CASE("config diagnostics") {
  const std::string good = slurp(kConfig);
  SUBCASE("syntax error names the line") {
    try {
      parse_config(with_replaced(good, "\"kappa_0_hz\": 1.5e9,", "\"kappa_0_hz\": 1.5e9,,"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
  }
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<no error>");
  };
  CHECK(field_of(with_replaced(good, "\"kappa_ex_hz\": 1.0e9", "\"kappa_xx_hz\": 1.0e9")) == "cavity.kappa_ex_hz");
  CHECK(field_of(with_replaced(good, "\"points\": 401", "\"points\": 1")) == "sweep.points");
  CHECK(field_of(with_replaced(good, "\"g0_hz\": 452e3", "\"g0_hz\": \"fast\"")) == "modes[0].g0_hz");
  CHECK(field_of(with_replaced(good, "\"r\": 0.45", "\"r\": 1.2")) == "interferometer.r");
  CHECK(field_of(with_replaced(good, "\"r\": 0.45", "\"r\": 0.45, \"theta_rad\": 0.1")) == "interferometer.phase_rad");
  CHECK(field_of(with_replaced(good, "\"temperature_k\": 295", "\"temperature_k\": 295, \"humidity\": 3")) ==
        "environment.humidity");
  CHECK_THROWS_AS(load_config("/nonexistent/omkit.json"), ConfigError);
}

TEST_CASE("phase lists") {
  const auto p = parse_phase_list("0, 0.77pi,-0.77pi,pi,-pi, 1.5");
  REQUIRE(p.size() == 6);
  CHECK(p[0].value == 0.0);
  CHECK(p[1].value == doctest::Approx(0.77 * constants::pi));
  CHECK(p[1].label == "0.77pi");
  CHECK(p[2].value == doctest::Approx(-0.77 * constants::pi));
  CHECK(p[3].value == doctest::Approx(constants::pi));
  CHECK(p[4].value == doctest::Approx(-constants::pi));
  CHECK(p[5].value == 1.5);
  CHECK_THROWS_AS(parse_phase_list(""), ConfigError);
  CHECK_THROWS_AS(parse_phase_list("0,,1"), ConfigError);
  CHECK_THROWS_AS(parse_phase_list("halfpi"), ConfigError);
}

TEST_CASE("csv round trip and diagnostics") {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{0.1, 1.0 / 3.0}, {std::nullopt, -2.5e-300}};
  std::stringstream ss;
  write_csv(ss, t);
  const CsvTable back = read_csv(ss);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.lines == std::vector<std::size_t>{2, 3});

  std::istringstream bad("delta_hz,reflection\n1,2\n3,x\n");
  try {
    read_csv(bad);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.row() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv(ragged), DataError);
  std::istringstream headless("1,2\n3,4\n");
  CHECK_THROWS_AS(read_csv(headless), DataError);
}

TEST_CASE("trace round trip is exact") {
  SpectrumTrace t{1e6, 0.1, 0.2, {1.0, 2.0 / 3.0, 1e-30, 7.0}};
  std::stringstream ss;
  write_trace(ss, t);
  const SpectrumTrace back = read_trace(ss);
  CHECK(back.values == t.values);
  CHECK(back.enbw == t.enbw);
  CHECK(back.f_start == t.f_start);
  CHECK(back.f_step == doctest::Approx(t.f_step).epsilon(1e-9));  // rebuilt from the end points
  std::istringstream no_enbw("frequency_hz,psd\n1,2\n2,3\n");
  CHECK_THROWS_AS(read_trace(no_enbw), DataError);
  std::istringstream uneven("# enbw_hz=1\nfrequency_hz,psd\n1,2\n2,3\n4,3\n");
  CHECK_THROWS_AS(read_trace(uneven), DataError);
}

TEST_CASE("sweep-eta columns and skips") {
  test::WarningCapture quiet;
  ExperimentConfig c = reference();
  const auto out = cli::sweep_eta(c, parse_phase_list("0.77pi,-0.77pi"));
  REQUIRE(out.table.header.size() == 5);
  CHECK(out.table.header[1] == "eta_g[0.77pi]");
  CHECK(out.table.header[2] == "g0_measured_hz[0.77pi]");
  CHECK(out.table.rows.size() == 401);
  CHECK_FALSE(out.skip_log.empty());
  CHECK_FALSE(out.table.rows[200][1].has_value());  // exact resonance

  c.interferometer.r = 0.0;
  const auto flat = cli::sweep_eta(c, parse_phase_list("0"));
  for (const auto& row : flat.table.rows)
    if (row[2]) CHECK(*row[2] == doctest::Approx(452e3).epsilon(1e-10));
  CHECK_THROWS_AS(cli::sweep_eta(c, {}), ConfigError);
}

TEST_CASE("reflection curves") {
  ExperimentConfig c = reference();
  c.sweep.points = 201;
  const CsvTable t = cli::reflection_curves(c, parse_phase_list("0,0.77pi"));
  REQUIRE(t.header.size() == 7);
  CHECK(t.header[2] == "reflection_fano[0]");
  for (std::size_t i = 0; i < 201; ++i) CHECK(*t.rows[i][1] == doctest::Approx(*t.rows[200 - i][1]).epsilon(1e-12));
  const ModelSetup m = to_model(c);
  const double s0sq = m.drive.s0() * m.drive.s0();
  const double t4 = std::pow(1 - 0.45 * 0.45, 2);
  // Far from resonance the lineshape contribution vanishes, leaving the constant.
  CHECK(*t.rows[0][6] == doctest::Approx(s0sq * t4 * std::pow(std::sin(0.77 * constants::pi), 2)).epsilon(0.05));
}

TEST_CASE("fit command on an exported lineshape") {
  TempDir dir;
  CsvTable t;
  t.header = {"delta_hz", "reflection"};
  const FanoParams truth{1.0, 0.4 * 2.47e9, 0.2, 2.47e9, 0.0};
  for (double d : test::grid(-7e9, 7e9, 301)) t.rows.push_back({d, fano_model(d, truth)});
  {
    std::ofstream f(dir / "r.csv");
    write_csv(f, t);
  }
  const auto r = run({"fit", "fano", "--input", (dir / "r.csv").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["converged"].get<bool>());
  CHECK(j["params"]["kappa_hz"]["value"].get<double>() == doctest::Approx(2.47e9).epsilon(1e-8));
  CHECK(j["params"]["q"]["value"].get<double>() == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(j["params"]["kappa_hz"].contains("sigma"));

  const auto lor = run({"fit", "lorentz", "--input", (dir / "r.csv").string()});
  CHECK(lor.code == 0);
  CHECK_FALSE(nlohmann::json::parse(lor.out)["params"].contains("q"));

  const auto capped = run({"fit", "fano", "--input", (dir / "r.csv").string(), "--max-iterations", "1"});
  CHECK(capped.code == cli::exit_no_convergence);
  CHECK(capped.err.find("converge") != std::string::npos);
}

TEST_CASE("fit command exit codes for bad data") {
  TempDir dir;
  spit(dir / "bad.csv", "delta_hz,reflection\n1,2\n2,3\n3,oops\n");
  auto r = run({"fit", "fano", "--input", (dir / "bad.csv").string()});
  CHECK(r.code == cli::exit_data);
  CHECK(r.err.find("line 4") != std::string::npos);
  spit(dir / "schema.csv", "x,y\n1,2\n");
  r = run({"fit", "lorentz", "--input", (dir / "schema.csv").string()});
  CHECK(r.code == cli::exit_data);
  CHECK(r.err.find("delta_hz") != std::string::npos);
  r = run({"fit", "fano", "--input", (dir / "missing.csv").string()});
  CHECK(r.code == cli::exit_data);
  r = run({"fit", "banana", "--input", (dir / "bad.csv").string()});
  CHECK(r.code == cli::exit_config);
}

TEST_CASE("backaction fit through the command line") {
  TempDir dir;
  ExperimentConfig c = reference();
  c.drive.power_w = 1e-3;
  c.cavity.kappa_0_hz = 1.47e9;
  spit(dir / "cfg.json", serialize_config(c));
  const ModelSetup m = to_model(c);
  CsvTable t;
  t.header = {"delta_hz", "omega_eff_hz", "gamma_eff_hz"};
  for (double d : test::grid(-12e9, 12e9, 31)) {
    const auto p = effective_mech_params(m.cavity, m.drive, m.mode, test::tp * d);
    t.rows.push_back({d, hertz(p.omega_eff), hertz(p.gamma_eff)});
  }
  {
    std::ofstream f(dir / "ba.csv");
    write_csv(f, t);
  }
  const auto r = run({"fit", "backaction", "--input", (dir / "ba.csv").string(), "--config", (dir / "cfg.json").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["params"]["g0_hz"]["value"].get<double>() == doctest::Approx(452e3).epsilon(1e-6));
  CHECK(j["params"]["omega_m_hz"]["value"].get<double>() == doctest::Approx(7.65e9).epsilon(1e-9));
  CHECK(run({"fit", "backaction", "--input", (dir / "ba.csv").string()}).code == cli::exit_config);
}

TEST_CASE("estimate-g0 and synthesize") {
  test::WarningCapture quiet;
  TempDir dir;
  ExperimentConfig c = reference();
  c.interferometer.r = 0.0;
  spit(dir / "r0.json", serialize_config(c));
  const std::string cfg = (dir / "r0.json").string();

  auto r = run({"estimate-g0", "--config", cfg, "--synthesize"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["g0_hz"].get<double>() == doctest::Approx(452e3).epsilon(0.005));

  REQUIRE(run({"synthesize", "--config", cfg, "--out", (dir / "t.csv").string()}).code == 0);
  const auto from_file = run({"estimate-g0", "--config", cfg, "--input", (dir / "t.csv").string()});
  REQUIRE(from_file.code == 0);
  CHECK(from_file.out == r.out);

  CHECK(run({"estimate-g0", "--config", cfg}).code == cli::exit_config);
  CHECK(run({"estimate-g0", "--config", cfg, "--synthesize", "--phase", "0,1"}).code == cli::exit_config);
}

TEST_CASE("seeded noise is repeatable") {
  test::WarningCapture quiet;
  TempDir dir;
  ExperimentConfig c = reference();
  c.spectrum->noise = true;
  spit(dir / "n.json", serialize_config(c));
  const std::string cfg = (dir / "n.json").string();
  const auto a = run({"estimate-g0", "--config", cfg, "--synthesize", "--seed", "17"});
  const auto b = run({"estimate-g0", "--config", cfg, "--synthesize", "--seed", "17"});
  const auto other = run({"estimate-g0", "--config", cfg, "--synthesize", "--seed", "18"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != other.out);
  const auto t1 = run({"synthesize", "--config", cfg, "--seed", "5"});
  const auto t2 = run({"synthesize", "--config", cfg, "--seed", "5"});
  CHECK(t1.out == t2.out);
}

TEST_CASE("estimate-g0 sweep reports failures per point") {
  test::WarningCapture quiet;
  TempDir dir;
  ExperimentConfig c = reference();
  c.interferometer.r = 0.0;
  c.sweep.points = 5;
  spit(dir / "s.json", serialize_config(c));
  const auto r = run({"estimate-g0", "--config", (dir / "s.json").string(), "--sweep"});
  REQUIRE(r.code == 0);
  const auto points = nlohmann::json::parse(r.out)["points"];
  REQUIRE(points.size() == 5);
  CHECK(points[2].contains("error"));  // resonance: both tones cancel
  CHECK(points[0]["g0_hz"].get<double>() == doctest::Approx(452e3).epsilon(0.01));
}

TEST_CASE("sweep-eta through the command line") {
  test::WarningCapture quiet;
  TempDir dir;
  const std::string out = (dir / "eta.csv").string();
  auto r = run({"sweep-eta", "--config", kConfig.string(), "--phase", "0,0.77pi,-0.77pi,0.4pi,-0.4pi", "--out", out});
  REQUIRE(r.code == 0);
  const CsvTable t = read_csv_file(out);
  CHECK(t.header.size() == 11);
  CHECK(fs::exists(out + ".skipped.log"));
  const std::string first = slurp(out);
  REQUIRE(run({"sweep-eta", "--config", kConfig.string(), "--phase", "0,0.77pi,-0.77pi,0.4pi,-0.4pi", "--out", out}).code == 0);
  CHECK(slurp(out) == first);
  CHECK(run({"sweep-eta", "--config", kConfig.string(), "--phase", ""}).code == cli::exit_config);
  CHECK(run({"sweep-eta", "--phase", "0"}).code == cli::exit_config);
  CHECK(run({"--help"}).code == 0);
}
