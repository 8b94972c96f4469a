#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fiberband/commands.hpp"
#include "fiberband/errors.hpp"
#include "fiberband/log.hpp"
#include "fiberband/version.hpp"

namespace {

void print_summary(const fiberband::RunReport& rep,
                   const std::vector<std::string>& files) {
  std::printf("%s:\n", rep.command.c_str());
  for (const std::string& n : rep.notes) std::printf("  %s\n", n.c_str());
  if (!rep.rows.empty()) {
    std::printf(" ");
    for (const std::string& c : rep.columns) std::printf(" %s", c.c_str());
    std::printf("\n");
    const std::size_t shown = std::min<std::size_t>(rep.rows.size(), 12);
    for (std::size_t i = 0; i < shown; ++i) {
      std::printf(" ");
      for (const double v : rep.rows[i]) std::printf(" %.10g", v);
      std::printf("\n");
    }
    if (shown < rep.rows.size())
      std::printf("  ... %zu more rows\n", rep.rows.size() - shown);
  }
  for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"band structure of one-dimensional fiber operators"};
  app.set_version_flag("--version", std::string(fiberband::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  int jobs = 0;
  std::string out_dir;
  std::vector<std::string> formats;
  bool strict = false;
  app.add_option("-c,--config", config_path, "configuration file")
      ->required();
  app.add_option("-j,--jobs", jobs,
                 "worker threads (0 = library default, 1 = serial)");
  app.add_option("-o,--out", out_dir, "output directory override");
  app.add_option("-f,--format", formats,
                 "outputs: csv, json, plotdata (repeat or comma-separate)")
      ->delimiter(',');
  app.add_flag("--strict", strict,
               "inconclusive or failed verdicts exit with code 4");

  static const struct {
    const char* name;
    const char* desc;
  } cmds[] = {
      {"slice", "eigenvalues of a single fiber"},
      {"bands", "band diagram over a range of flux levels"},
      {"flatband", "flat-band exclusion test at a fixed level"},
      {"harmonic", "low bands against the harmonic ladder"},
      {"asymptotics", "power-law fit of band minima at large level"},
      {"scattering", "embedded eigenvalue exclusion"},
      {"agmon", "weighted decay estimate for a band eigenfunction"},
  };
  for (const auto& c : cmds) app.add_subcommand(c.name, c.desc);

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    fiberband::RunConfig cfg = fiberband::parse_config_file(config_path);
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    if (!formats.empty()) cfg.output.formats = formats;
    for (const std::string& f : cfg.output.formats)
      if (f != "csv" && f != "json" && f != "plotdata")
        throw fiberband::ConfigError("--format", "unknown format '" + f + "'");
    if (strict) cfg.output.strict = true;

    const fiberband::ExecPolicy exec = (jobs == 1)
                                           ? fiberband::ExecPolicy::serial()
                                           : fiberband::ExecPolicy::openmp(jobs);
    const fiberband::RunReport rep =
        fiberband::run_command(command, cfg, exec);
    const std::vector<std::string> files =
        fiberband::write_outputs(rep, cfg.output);
    print_summary(rep, files);
    return rep.exit_code;
  } catch (const fiberband::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const fiberband::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
