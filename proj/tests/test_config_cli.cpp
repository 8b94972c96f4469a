#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "fiberband/commands.hpp"
#include "fiberband/config.hpp"
#include "fiberband/errors.hpp"
#include "fiberband/report.hpp"

using namespace fiberband;
namespace fs = std::filesystem;

namespace {

const char* kFullConfig = R"(# exercise every section
[profile]
kind = "power_law"
c1 = 2.0
alpha = -0.5
regularized = true
a0 = 0.1

[grid]
points_per_length = 48
stencil = "order4"
refine = false
e_cap = 8.0
min_points = 33

[tolerances]
eigen_abs = 1e-9
seed = 0xdead

[slice]
xi = 0.25
h = 0.02
k_max = 5
e_max = 0.1

[sweep]
xi_min = -1.0
xi_max = 1.5
count = 11
k_max = 2

[flatband]
lambda = 0.7
band = 2
samples = 7
window = [-4.0, 4.0]

[harmonic]
theta = 0.4
hs = [0.1, 0.01]
n_max = 2
counting = true

[asymptotics]
xis = [100.0, 1000.0]
rescaled = false

[scattering]
xi = 0.6
lambdas = [0.4, 0.9]

[agmon]
band = 1
gamma = 0.3

[output]
dir = "/tmp/somewhere"
basename = "case"
formats = ["json", "csv"]
strict = true
)";

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "fiberband_config_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("full config round trip") {
  const RunConfig c = parse_config_text(kFullConfig);
  CHECK(c.profile.kind == "power_law");
  CHECK(c.profile.c1 == 2.0);
  CHECK(c.profile.alpha == -0.5);
  CHECK(c.profile.regularized);
  CHECK(c.profile.a0 == 0.1);
  CHECK(c.grid.points_per_length == 48.0);
  CHECK(c.grid.stencil == Stencil::order4);
  CHECK_FALSE(c.grid.refine);
  CHECK(c.grid.e_cap == 8.0);
  CHECK(c.grid.min_points == 33);
  CHECK(c.tol.eigen_abs == 1e-9);
  CHECK(c.tol.seed == 0xdeadULL);
  CHECK(c.slice.xi == 0.25);
  CHECK(c.slice.k_max == 5);
  REQUIRE(c.slice.e_max.has_value());
  CHECK(*c.slice.e_max == 0.1);
  CHECK(c.sweep.count == 11);
  CHECK(c.flatband.band == 2);
  CHECK(c.flatband.window_lo == -4.0);
  CHECK(c.flatband.window_hi == 4.0);
  REQUIRE(c.harmonic.hs.size() == 2);
  CHECK(c.harmonic.hs[1] == 0.01);
  CHECK(c.harmonic.counting);
  REQUIRE(c.asymptotics.xis.size() == 2);
  CHECK_FALSE(c.asymptotics.rescaled);
  REQUIRE(c.scattering.lambdas.size() == 2);
  CHECK(c.scattering.lambdas[1] == 0.9);
  REQUIRE(c.agmon.gamma.has_value());
  CHECK(*c.agmon.gamma == 0.3);
  CHECK(c.output.dir == "/tmp/somewhere");
  CHECK(c.output.strict);
  REQUIRE(c.output.formats.size() == 2);

  // empty text falls back to defaults
  const RunConfig d = parse_config_text("");
  CHECK(d.profile.kind == "gaussian");
  CHECK(d.slice.h == 0.01);
  CHECK_FALSE(d.output.strict);
}

TEST_CASE("parser rejects malformed input with a field path") {
  const auto path_of = [](const std::string& text) {
    try {
      (void)parse_config_text(text);
    } catch (const ConfigError& e) {
      return e.field_path;
    }
    return std::string("<no error>");
  };
  CHECK(path_of("[profile]\nstrength = 2.0\n") == "profile.strength");
  CHECK(path_of("[nosuch]\nx = 1\n") == "nosuch");
  CHECK(path_of("[profile]\nkind = \"cubic\"\n") == "profile.kind");
  CHECK(path_of("[slice]\nxi = abc\n") == "slice.xi");
  CHECK(path_of("[grid]\nrefine = si\n") == "grid.refine");
  CHECK(path_of("[grid]\nstencil = \"order3\"\n") == "grid.stencil");
  CHECK(path_of("[flatband]\nwindow = [1.0]\n") == "flatband.window");
  CHECK(path_of("[flatband]\nwindow = [4.0, -4.0]\n") == "flatband.window");
  CHECK(path_of("[output]\nformats = [\"yaml\"]\n") == "output.formats");
  CHECK(path_of("xi = 1\n") == "xi");  // key before any section header
  CHECK_THROWS_AS((void)parse_config_file("/nonexistent/path.conf"), ConfigError);
}

TEST_CASE("profile factory covers every kind") {
  ProfileConfig pc;
  pc.kind = "constant";
  pc.b0 = 2.0;
  CHECK(build_profile(pc)->b(0.0) == 2.0);
  pc.kind = "gaussian";
  CHECK(build_profile(pc)->flux_upper().value() == doctest::Approx(1.0));
  pc.kind = "power_law";
  pc.alpha = 1.0;
  pc.regularized = false;
  pc.c1 = 1.0;
  CHECK(build_profile(pc)->a(4.0) == doctest::Approx(8.0));
  pc.kind = "step";
  pc.b_left = 0.0;
  pc.b_right = 1.0;
  pc.width = 1.0;
  CHECK(build_profile(pc)->b(8.0) == doctest::Approx(1.0).epsilon(1e-10));

  pc.kind = "tabulated";
  pc.file = "";
  CHECK_THROWS_AS((void)build_profile(pc), ConfigError);
  pc.file = (temp_dir() / "profile.dat").string();
  {
    std::ofstream out(pc.file);
    out << "# x b\n0 1\n1 0.5\n2 0\n";
  }
  const ProfilePtr t = build_profile(pc);
  CHECK(t->b(0.5) == doctest::Approx(0.75));
  pc.file = (temp_dir() / "missing.dat").string();
  CHECK_THROWS_AS((void)build_profile(pc), ConfigError);
}

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("slice command produces a stable, hashable report") {
  RunConfig cfg;
  cfg.profile.kind = "constant";
  cfg.profile.b0 = 1.0;
  cfg.slice.xi = 0.7;
  cfg.slice.h = 1.0;
  cfg.slice.k_max = 2;

  const RunReport rep = run_command("slice", cfg, ExecPolicy::serial());
  CHECK(rep.command == "slice");
  CHECK(rep.exit_code == 0);
  REQUIRE(rep.rows.size() == 2);
  REQUIRE(rep.columns.size() == rep.rows[0].size());
  CHECK(rep.rows[0][1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.rows[1][1] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(rep.meta.contains("wall_clock_sec"));

  const nlohmann::json j1 = report_to_json(rep);
  const nlohmann::json j2 = report_to_json(rep);
  REQUIRE(j1.contains("hash"));
  CHECK(j1["hash"].get<std::string>().size() == 16);
  CHECK(j1["hash"] == j2["hash"]);

  RunReport tweaked = rep;
  tweaked.rows[0][1] += 1e-9;
  CHECK(report_to_json(tweaked)["hash"] != j1["hash"]);

  // volatile keys stay out of the hash
  RunReport slower = rep;
  slower.meta["wall_clock_sec"] = 99.0;
  CHECK(report_to_json(slower)["hash"] == j1["hash"]);

  const std::string csv = report_to_csv(rep);
  CHECK(csv.find(rep.columns[0]) != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

  const std::string dat = report_to_plotdata(rep);
  CHECK(dat.rfind("#", 0) == 0);
  CHECK(dat.find("slice") != std::string::npos);

  CHECK_THROWS_AS((void)run_command("warp", cfg, ExecPolicy::serial()),
                  ConfigError);
}

TEST_CASE("outputs land on disk in every requested format") {
  RunConfig cfg;
  cfg.profile.kind = "constant";
  cfg.slice.xi = 0.0;
  cfg.slice.h = 1.0;
  cfg.slice.k_max = 1;
  const RunReport rep = run_command("slice", cfg, ExecPolicy::serial());

  OutputConfig out;
  out.dir = (temp_dir() / "out").string();
  out.basename = "case";
  out.formats = {"json", "csv", "plotdata"};
  const std::vector<std::string> paths = write_outputs(rep, out);
  REQUIRE(paths.size() == 3);
  for (const std::string& p : paths) {
    CAPTURE(p);
    REQUIRE(fs::exists(p));
    CHECK(fs::file_size(p) > 0);
  }
  std::ifstream jin(paths[0]);
  const nlohmann::json parsed = nlohmann::json::parse(jin);
  CHECK(parsed["command"] == "slice");

  OutputConfig bad;
  bad.dir = "/proc/definitely/not/writable";
  CHECK_THROWS_AS((void)write_outputs(rep, bad), ConfigError);
}

TEST_CASE("scattering command reports the certificate") {
  RunConfig cfg;
  cfg.profile.kind = "gaussian";
  cfg.scattering.xi = 0.5;
  cfg.scattering.lambdas = {0.3};
  const RunReport rep = run_command("scattering", cfg, ExecPolicy::serial());
  CHECK(rep.exit_code == 0);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.meta["all_excluded"] == true);
  REQUIRE(!rep.notes.empty());
  CHECK(rep.notes[0].find("excluded") != std::string::npos);
}

}  // TEST_SUITE
