#include "fiberband/report.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "fiberband/errors.hpp"
#include "fiberband/version.hpp"

namespace fiberband {

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string timestamp_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  const ProfileConfig& p = cfg.profile;
  j["profile"] = {{"kind", p.kind},       {"a0", p.a0}};
  if (p.kind == "constant") j["profile"]["b0"] = p.b0;
  if (p.kind == "power_law") {
    j["profile"]["c1"] = p.c1;
    j["profile"]["alpha"] = p.alpha;
    j["profile"]["regularized"] = p.regularized;
  }
  if (p.kind == "step") {
    j["profile"]["b_left"] = p.b_left;
    j["profile"]["b_right"] = p.b_right;
    j["profile"]["width"] = p.width;
  }
  if (p.kind == "tabulated") j["profile"]["file"] = p.file;

  j["grid"] = {{"points_per_length", cfg.grid.points_per_length},
               {"epsilon_trunc", cfg.grid.epsilon_trunc},
               {"margin_scale", cfg.grid.margin_scale},
               {"min_points", cfg.grid.min_points},
               {"max_points", cfg.grid.max_points},
               {"stencil", cfg.grid.stencil == Stencil::order4 ? "order4"
                                                               : "order2"},
               {"refine", cfg.grid.refine},
               {"e_cap", cfg.grid.e_cap}};
  j["tolerances"] = {{"quadrature", cfg.tol.quadrature},
                     {"eigen_abs", cfg.tol.eigen_abs},
                     {"eigen_rel", cfg.tol.eigen_rel},
                     {"residual", cfg.tol.residual},
                     {"root", cfg.tol.root},
                     {"seed", cfg.tol.seed}};
  return j;
}

nlohmann::json report_to_json(const RunReport& rep) {
  nlohmann::json j;
  j["command"] = rep.command;
  j["version"] = kVersion;
  j["meta"] = rep.meta;
  j["columns"] = rep.columns;
  j["rows"] = rep.rows;
  j["notes"] = rep.notes;
  j["exit_code"] = rep.exit_code;

  nlohmann::json stable = j;
  stable["meta"].erase("wall_clock_sec");
  j["hash"] = fnv1a_hex(stable.dump());
  j["timestamp"] = timestamp_utc();
  return j;
}

std::string report_to_csv(const RunReport& rep) {
  std::string out;
  for (std::size_t i = 0; i < rep.columns.size(); ++i) {
    if (i) out += ',';
    out += rep.columns[i];
  }
  out += '\n';
  for (const auto& row : rep.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += g17(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string report_to_plotdata(const RunReport& rep) {
  std::string out = "# " + rep.command + "\n";
  for (auto it = rep.meta.begin(); it != rep.meta.end(); ++it) {
    if (!it->is_primitive()) continue;
    out += "# " + it.key() + " = " + it->dump() + "\n";
  }
  for (const std::string& n : rep.notes) out += "# " + n + "\n";
  out += "#";
  for (const std::string& c : rep.columns) out += " " + c;
  out += '\n';
  for (const auto& row : rep.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ' ';
      out += g17(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> write_outputs(const RunReport& rep,
                                       const OutputConfig& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out.dir, ec);
  if (ec)
    throw ConfigError("output.dir",
                      "cannot create '" + out.dir + "': " + ec.message());
  std::vector<std::string> written;
  auto emit = [&](const std::string& ext, const std::string& body) {
    const fs::path p = fs::path(out.dir) / (out.basename + ext);
    std::ofstream f(p);
    if (!f) throw ConfigError("output.dir", "cannot write " + p.string());
    f << body;
    written.push_back(p.string());
  };
  for (const std::string& fmt : out.formats) {
    if (fmt == "json") emit(".json", report_to_json(rep).dump(2) + "\n");
    else if (fmt == "csv") emit(".csv", report_to_csv(rep));
    else if (fmt == "plotdata") emit(".dat", report_to_plotdata(rep));
  }
  return written;
}

}  // namespace fiberband
